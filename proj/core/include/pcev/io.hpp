#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcev/geometry.hpp"
#include "pcev/metrics.hpp"
#include "pcev/normals.hpp"
#include "pcev/perturb.hpp"

namespace pcev {

enum class CloudFormat { Text, Binary };

const char* to_string(CloudFormat format) noexcept;
CloudFormat parse_cloud_format(const std::string& text);

inline constexpr std::uint16_t kBinaryVersion = 1;
inline constexpr std::size_t kBinaryHeaderSize = 16;

/// Binary files start with "PCEV"; anything else is parsed as text.
PointCloud load_cloud(const std::filesystem::path& path);
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

// In-memory forms of the two cloud formats.
PointCloud parse_cloud(const std::string& bytes, std::string id = {});
PointCloud parse_text_cloud(const std::string& text, std::string id = {});
PointCloud parse_binary_cloud(const std::string& bytes, std::string id = {});
std::string encode_text_cloud(const PointCloud& cloud);
std::string encode_binary_cloud(const PointCloud& cloud);

/// Unit normals in the binary layout with magic "PCNM".
std::vector<UnitNormal> load_normals(const std::filesystem::path& path,
                                     std::size_t expected_count);
void save_normals(const std::vector<UnitNormal>& normals, const std::filesystem::path& path);
std::vector<UnitNormal> parse_normals(const std::string& bytes, std::size_t expected_count);
std::string encode_normals(const std::vector<UnitNormal>& normals);

struct SetManifest {
  SetRole role = SetRole::Generated;
  std::vector<std::string> files;  // relative to the manifest's directory
  std::map<std::string, std::string> metadata;
};

SetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SetManifest& manifest, const std::filesystem::path& path);
/// Loads every listed cloud; cloud i is file i.
CloudSet load_set(const std::filesystem::path& manifest_path);
/// Writes each cloud as <stem>_<index>.pcev next to the manifest, then the manifest.
void save_set(const CloudSet& set, const std::filesystem::path& manifest_path,
              std::map<std::string, std::string> metadata = {});

enum class ReportFormat { Csv, Json };

const char* to_string(ReportFormat format) noexcept;
ReportFormat parse_report_format(const std::string& text);

/// A self-describing evaluation: the resolved configuration that produced
/// it plus one entry per (metric, measure) cell.
struct EvalReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<MetricReport> metrics;
};

bool operator==(const MetricReport& a, const MetricReport& b);
bool operator==(const EvalReport& a, const EvalReport& b);

std::string encode_report(const EvalReport& report, ReportFormat format);
EvalReport decode_report_json(const std::string& text);
void write_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);
EvalReport read_report_json(const std::filesystem::path& path);

std::string encode_sweep(const SweepTable& table,
                         const std::vector<std::pair<std::string, std::string>>& config,
                         ReportFormat format);
void write_sweep(const SweepTable& table,
                 const std::vector<std::pair<std::string, std::string>>& config,
                 const std::filesystem::path& path, ReportFormat format);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace pcev
