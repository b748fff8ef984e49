#include "pcev/version.hpp"

namespace pcev {

const char* version() noexcept { return PCEV_VERSION; }

}  // namespace pcev
