#include "pcev/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "pcev/error.hpp"
#include "pcev/version.hpp"

namespace pcev {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr char kCloudMagic[4] = {'P', 'C', 'E', 'V'};
constexpr char kNormalsMagic[4] = {'P', 'C', 'N', 'M'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)]);
  }
  return v;
}

void put_float(std::string& out, double v, const char* what) {
  const float f = static_cast<float>(v);
  if (!std::isfinite(f)) {
    throw InvalidArgument(fmt::format("{} value {} is not representable as binary32", what, v));
  }
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::string encode_triples(const char (&magic)[4], const std::vector<Point3>& values,
                           const char* what) {
  std::string out;
  out.reserve(kBinaryHeaderSize + 12 * values.size());
  out.append(magic, 4);
  put_u16(out, kBinaryVersion);
  put_u16(out, 0);
  put_u64(out, values.size());
  for (const auto& p : values) {
    put_float(out, p.x, what);
    put_float(out, p.y, what);
    put_float(out, p.z, what);
  }
  return out;
}

// Validates the header and payload length; returns the triples widened to double.
std::vector<Point3> decode_triples(const std::string& bytes, const char (&magic)[4],
                                   const char* what) {
  if (bytes.size() < kBinaryHeaderSize) {
    throw ParseError(fmt::format("{}: truncated header ({} bytes)", what, bytes.size()),
                     bytes.size());
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw ParseError(fmt::format("{}: bad magic", what), 0);
  }
  if (const auto v = get_le(bytes, 4, 2); v != kBinaryVersion) {
    throw ParseError(fmt::format("{}: unsupported version {}", what, v), 4);
  }
  if (get_le(bytes, 6, 2) != 0) throw ParseError(fmt::format("{}: reserved field not zero", what), 6);
  const std::uint64_t count = get_le(bytes, 8, 8);
  if (count == 0) throw ParseError(fmt::format("{}: point count is zero", what), 8);
  const std::uint64_t payload = bytes.size() - kBinaryHeaderSize;
  if (count > payload / 12) {
    throw ParseError(fmt::format("{}: truncated payload, {} points declared but {} bytes follow",
                                 what, count, payload),
                     bytes.size());
  }
  const std::uint64_t expected = kBinaryHeaderSize + 12 * count;
  if (bytes.size() != expected) {
    throw ParseError(fmt::format("{}: {} trailing bytes", what, bytes.size() - expected), expected);
  }
  std::vector<Point3> out(count);
  std::size_t at = kBinaryHeaderSize;
  for (auto& p : out) {
    double c[3];
    for (double& v : c) {
      const float f = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, at, 4)));
      if (!std::isfinite(f)) throw ParseError(fmt::format("{}: non-finite value", what), at);
      v = f;
      at += 4;
    }
    p = {c[0], c[1], c[2]};
  }
  return out;
}

bool has_magic(const std::string& bytes, const char (&magic)[4]) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), magic, 4) == 0;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string real(double v) { return fmt::format("{:.17g}", v); }

void write_config_comments(std::string& out,
                           const std::vector<std::pair<std::string, std::string>>& config) {
  for (const auto& [k, v] : config) out += fmt::format("# {}={}\n", k, v);
}

Json config_json(const std::vector<std::pair<std::string, std::string>>& config) {
  Json j = Json::object();
  for (const auto& [k, v] : config) {
    if (j.contains(k)) throw InvalidArgument(fmt::format("duplicate config key '{}'", k));
    j[k] = v;
  }
  return j;
}

std::string column_key(const MetricReport& m) {
  std::string key = m.name();
  if (m.distance) key += " " + m.distance->label();
  if (m.neighborhood) key += " " + m.neighborhood->label();
  if (m.grid) key += fmt::format(" R={}", m.grid->resolution);
  return key;
}

Json to_json(const DistanceSpec& d) {
  Json j;
  j["measure"] = to_string(d.measure);
  j["solver"] = to_string(d.solver);
  j["epsilon"] = d.epsilon;
  j["alpha"] = d.alpha;
  j["aligned"] = d.aligned;
  j["per_point"] = d.per_point;
  j["label"] = d.label();
  return j;
}

Json to_json(const NeighborhoodSpec& n) {
  Json j;
  j["kind"] = n.kind == NeighborhoodSpec::Kind::Knn ? "knn" : "ball";
  j["k"] = n.k;
  j["radius"] = n.radius;
  j["label"] = n.label();
  return j;
}

Json to_json(const VoxelGridSpec& g) {
  Json j;
  j["resolution"] = g.resolution;
  j["origin"] = {g.origin.x, g.origin.y, g.origin.z};
  j["side"] = g.side;
  return j;
}

Json to_json(const MetricReport& m) {
  Json j;
  j["metric"] = to_string(m.metric);
  j["name"] = m.name();
  j["value"] = m.value;
  j["scaling"] = m.scaling;
  j["scaled_value"] = m.scaled_value();
  j["generated_size"] = m.generated_size;
  j["reference_size"] = m.reference_size;
  j["distance"] = m.distance ? to_json(*m.distance) : Json();
  j["neighborhood"] = m.neighborhood ? to_json(*m.neighborhood) : Json();
  j["grid"] = m.grid ? to_json(*m.grid) : Json();
  j["jsd_centered"] = m.jsd_centered;
  j["normal_fallbacks"] = m.normal_fallbacks;
  j["unreliable_normals"] = m.unreliable_normals;
  return j;
}

DistanceSpec distance_from_json(const Json& j) {
  DistanceSpec d;
  d.measure = parse_measure(j.at("measure").get<std::string>());
  d.solver = parse_emd_solver(j.at("solver").get<std::string>());
  d.epsilon = j.at("epsilon").get<double>();
  d.alpha = j.at("alpha").get<double>();
  d.aligned = j.at("aligned").get<bool>();
  d.per_point = j.at("per_point").get<bool>();
  return d;
}

NeighborhoodSpec neighborhood_from_json(const Json& j) {
  NeighborhoodSpec n;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "knn") {
    n.kind = NeighborhoodSpec::Kind::Knn;
  } else if (kind == "ball") {
    n.kind = NeighborhoodSpec::Kind::Ball;
  } else {
    throw InvalidArgument(fmt::format("unknown neighborhood kind '{}'", kind));
  }
  n.k = j.at("k").get<std::size_t>();
  n.radius = j.at("radius").get<double>();
  return n;
}

VoxelGridSpec grid_from_json(const Json& j) {
  VoxelGridSpec g;
  g.resolution = j.at("resolution").get<std::size_t>();
  const auto& o = j.at("origin");
  g.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
  g.side = j.at("side").get<double>();
  return g;
}

MetricReport metric_from_json(const Json& j) {
  MetricReport m;
  m.metric = parse_metric(j.at("metric").get<std::string>());
  m.value = j.at("value").get<double>();
  m.scaling = j.at("scaling").get<double>();
  m.generated_size = j.at("generated_size").get<std::size_t>();
  m.reference_size = j.at("reference_size").get<std::size_t>();
  if (!j.at("distance").is_null()) m.distance = distance_from_json(j.at("distance"));
  if (!j.at("neighborhood").is_null()) m.neighborhood = neighborhood_from_json(j.at("neighborhood"));
  if (!j.at("grid").is_null()) m.grid = grid_from_json(j.at("grid"));
  m.jsd_centered = j.at("jsd_centered").get<bool>();
  m.normal_fallbacks = j.at("normal_fallbacks").get<std::size_t>();
  m.unreliable_normals = j.at("unreliable_normals").get<std::size_t>();
  return m;
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", what, e.what()), e.byte);
  }
}

}  // namespace

const char* to_string(CloudFormat format) noexcept {
  return format == CloudFormat::Text ? "text" : "binary";
}

CloudFormat parse_cloud_format(const std::string& text) {
  if (text == "text" || text == "txt" || text == "xyz") return CloudFormat::Text;
  if (text == "binary" || text == "bin" || text == "pcev") return CloudFormat::Binary;
  throw InvalidArgument(fmt::format("unknown cloud format '{}'", text));
}

const char* to_string(ReportFormat format) noexcept {
  return format == ReportFormat::Csv ? "csv" : "json";
}

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  throw InvalidArgument(fmt::format("unknown report format '{}'", text));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("read failed on '{}'", path.string()));
  return std::move(ss).str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError(fmt::format("write failed on '{}'", path.string()));
}

PointCloud parse_text_cloud(const std::string& text, std::string id) {
  std::vector<Point3> points;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;

    double v[3];
    int n = 0;
    std::size_t i = first;
    while (i < line.size()) {
      if (line[i] == ' ' || line[i] == '\t') {
        ++i;
        continue;
      }
      if (n == 3) throw ParseError(fmt::format("line {}: more than 3 values", line_no), line_no);
      const char* b = line.data() + i;
      const char* e = line.data() + line.size();
      auto [ptr, ec] = std::from_chars(b, e, v[n]);
      if (ec != std::errc() || (ptr != e && *ptr != ' ' && *ptr != '\t')) {
        throw ParseError(fmt::format("line {}: malformed number", line_no), line_no);
      }
      if (!std::isfinite(v[n])) {
        throw ParseError(fmt::format("line {}: non-finite value", line_no), line_no);
      }
      ++n;
      i = static_cast<std::size_t>(ptr - line.data());
    }
    if (n != 3) throw ParseError(fmt::format("line {}: expected 3 values, got {}", line_no, n), line_no);
    points.push_back({v[0], v[1], v[2]});
  }
  if (points.empty()) throw ParseError("text cloud holds no points", line_no);
  return PointCloud(std::move(points), std::move(id));
}

PointCloud parse_binary_cloud(const std::string& bytes, std::string id) {
  return PointCloud(decode_triples(bytes, kCloudMagic, "binary cloud"), std::move(id));
}

PointCloud parse_cloud(const std::string& bytes, std::string id) {
  if (has_magic(bytes, kCloudMagic)) return parse_binary_cloud(bytes, std::move(id));
  if (has_magic(bytes, kNormalsMagic)) throw ParseError("file holds normals, not a cloud", 0);
  // Text never contains NUL; a binary file with a foreign header would.
  const std::size_t probe = std::min(bytes.size(), kBinaryHeaderSize);
  if (std::memchr(bytes.data(), '\0', probe) != nullptr) throw ParseError("bad magic", 0);
  return parse_text_cloud(bytes, std::move(id));
}

std::string encode_text_cloud(const PointCloud& cloud) {
  std::string out;
  for (const auto& p : cloud) out += fmt::format("{:.9g} {:.9g} {:.9g}\n", p.x, p.y, p.z);
  return out;
}

std::string encode_binary_cloud(const PointCloud& cloud) {
  return encode_triples(kCloudMagic, {cloud.begin(), cloud.end()}, "cloud");
}

PointCloud load_cloud(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return parse_cloud(bytes, path.string());
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), e.offset());
  }
}

void save_cloud(const PointCloud& cloud, const fs::path& path, CloudFormat format) {
  write_file(path, format == CloudFormat::Text ? encode_text_cloud(cloud) : encode_binary_cloud(cloud));
}

std::vector<UnitNormal> parse_normals(const std::string& bytes, std::size_t expected_count) {
  const auto raw = decode_triples(bytes, kNormalsMagic, "normals file");
  if (raw.size() != expected_count) {
    throw ParseError(fmt::format("normals file holds {} normals, cloud has {} points", raw.size(),
                                 expected_count),
                     8);
  }
  std::vector<UnitNormal> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (std::abs(norm(raw[i]) - 1.0) > 1e-6) {
      throw ParseError(fmt::format("normal {} is not unit length", i), kBinaryHeaderSize + 12 * i);
    }
    out.push_back({raw[i].x, raw[i].y, raw[i].z});
  }
  return out;
}

std::string encode_normals(const std::vector<UnitNormal>& normals) {
  if (normals.empty()) throw InvalidArgument("cannot write an empty normals file");
  std::vector<Point3> v;
  v.reserve(normals.size());
  for (const auto& n : normals) v.push_back(n.vec());
  return encode_triples(kNormalsMagic, v, "normal");
}

std::vector<UnitNormal> load_normals(const fs::path& path, std::size_t expected_count) {
  const std::string bytes = read_file(path);
  try {
    return parse_normals(bytes, expected_count);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), e.offset());
  }
}

void save_normals(const std::vector<UnitNormal>& normals, const fs::path& path) {
  write_file(path, encode_normals(normals));
}

SetManifest read_manifest(const fs::path& path) {
  const Json j = parse_json(read_file(path), path.string());
  SetManifest m;
  try {
    const auto role = j.at("role").get<std::string>();
    if (role == "generated") {
      m.role = SetRole::Generated;
    } else if (role == "reference") {
      m.role = SetRole::Reference;
    } else {
      throw ParseError(fmt::format("{}: unknown role '{}'", path.string(), role), 0);
    }
    m.files = j.at("files").get<std::vector<std::string>>();
    if (j.contains("metadata")) {
      for (const auto& [k, v] : j.at("metadata").items()) m.metadata[k] = v.get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()), 0);
  }
  if (m.files.empty()) throw ParseError(fmt::format("{}: manifest lists no files", path.string()), 0);
  return m;
}

void write_manifest(const SetManifest& manifest, const fs::path& path) {
  Json j;
  j["role"] = to_string(manifest.role);
  j["files"] = manifest.files;
  Json meta = Json::object();
  for (const auto& [k, v] : manifest.metadata) meta[k] = v;
  j["metadata"] = meta;
  write_file(path, j.dump(2) + "\n");
}

CloudSet load_set(const fs::path& manifest_path) {
  const SetManifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  CloudSet set{{}, m.role};
  set.clouds.reserve(m.files.size());
  for (const auto& f : m.files) {
    const fs::path p = base / f;
    if (!fs::exists(p)) {
      throw IoError(fmt::format("{}: listed file '{}' does not exist", manifest_path.string(), f));
    }
    set.clouds.push_back(load_cloud(p));
  }
  return set;
}

void save_set(const CloudSet& set, const fs::path& manifest_path,
              std::map<std::string, std::string> metadata) {
  require_non_empty(set, "saved");
  SetManifest m{set.role, {}, std::move(metadata)};
  const fs::path base = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::string name = fmt::format("{}_{:04}.pcev", stem, i);
    save_cloud(set[i], base / name, CloudFormat::Binary);
    m.files.push_back(name);
  }
  write_manifest(m, manifest_path);
}

bool operator==(const MetricReport& a, const MetricReport& b) {
  return a.metric == b.metric && a.value == b.value && a.distance == b.distance &&
         a.neighborhood == b.neighborhood && a.grid == b.grid && a.jsd_centered == b.jsd_centered &&
         a.generated_size == b.generated_size && a.reference_size == b.reference_size &&
         a.scaling == b.scaling && a.normal_fallbacks == b.normal_fallbacks &&
         a.unreliable_normals == b.unreliable_normals;
}

bool operator==(const EvalReport& a, const EvalReport& b) {
  return a.config == b.config && a.metrics == b.metrics;
}

std::string encode_report(const EvalReport& report, ReportFormat format) {
  std::set<std::string> seen;
  for (const auto& m : report.metrics) {
    if (!seen.insert(column_key(m)).second) {
      throw InvalidArgument(fmt::format("duplicate report column '{}'", column_key(m)));
    }
  }

  if (format == ReportFormat::Json) {
    Json j;
    j["format"] = "pcev-report";
    j["version"] = version();
    j["config"] = config_json(report.config);
    Json metrics = Json::array();
    for (const auto& m : report.metrics) metrics.push_back(to_json(m));
    j["metrics"] = metrics;
    return j.dump(2) + "\n";
  }

  std::string out;
  if (!report.config.empty()) {
    out += fmt::format("# version={}\n", version());
    write_config_comments(out, report.config);
  }
  out += "name,metric,measure,spec,neighborhood,grid_resolution,generated_size,reference_size,"
         "value,scaling,scaled_value\n";
  for (const auto& m : report.metrics) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(m.name()),
                       to_string(m.metric), m.distance ? m.distance->measure_name() : "",
                       csv_field(m.distance ? m.distance->label() : ""),
                       csv_field(m.neighborhood ? m.neighborhood->label() : ""),
                       m.grid ? std::to_string(m.grid->resolution) : "", m.generated_size,
                       m.reference_size, real(m.value), real(m.scaling), real(m.scaled_value()));
  }
  return out;
}

EvalReport decode_report_json(const std::string& text) {
  const Json j = parse_json(text, "report");
  EvalReport r;
  try {
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    for (const auto& m : j.at("metrics")) r.metrics.push_back(metric_from_json(m));
  } catch (const Json::exception& e) {
    throw ParseError(fmt::format("report: {}", e.what()), 0);
  }
  return r;
}

void write_report(const EvalReport& report, const fs::path& path, ReportFormat format) {
  write_file(path, encode_report(report, format));
}

EvalReport read_report_json(const fs::path& path) { return decode_report_json(read_file(path)); }

std::string encode_sweep(const SweepTable& table,
                         const std::vector<std::pair<std::string, std::string>>& config,
                         ReportFormat format) {
  std::set<std::string> seen{"noise_frac", "shift_frac", "seed"};
  for (const auto& c : table.columns) {
    if (!seen.insert(c).second) throw InvalidArgument(fmt::format("duplicate sweep column '{}'", c));
  }

  if (format == ReportFormat::Json) {
    auto rows = [&](const std::vector<SweepRow>& src, const char* seed_key) {
      Json arr = Json::array();
      for (const auto& r : src) {
        Json row;
        row["noise_frac"] = r.noise_frac;
        row["shift_frac"] = r.shift_frac;
        row[seed_key] = r.seed_index;
        Json values = Json::object();
        for (std::size_t k = 0; k < table.columns.size(); ++k) values[table.columns[k]] = r.values[k];
        row["values"] = values;
        arr.push_back(row);
      }
      return arr;
    };
    Json j;
    j["format"] = "pcev-sweep";
    j["version"] = version();
    j["config"] = config_json(config);
    j["columns"] = table.columns;
    j["rows"] = rows(table.rows, "seed");
    j["summary"] = rows(table.summary, "seeds");
    return j.dump(2) + "\n";
  }

  std::string out;
  if (!config.empty()) {
    out += fmt::format("# version={}\n", version());
    write_config_comments(out, config);
  }
  out += "noise_frac,shift_frac,seed";
  for (const auto& c : table.columns) out += "," + csv_field(c);
  out += "\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{},{}", real(r.noise_frac), real(r.shift_frac), r.seed_index);
    for (double v : r.values) out += "," + real(v);
    out += "\n";
  }
  return out;
}

void write_sweep(const SweepTable& table,
                 const std::vector<std::pair<std::string, std::string>>& config,
                 const fs::path& path, ReportFormat format) {
  write_file(path, encode_sweep(table, config, format));
}

}  // namespace pcev
