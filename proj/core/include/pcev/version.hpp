#pragma once

namespace pcev {

/// Library version, embedded in every report.
const char* version() noexcept;

}  // namespace pcev
