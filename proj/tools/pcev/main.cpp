// pcev: evaluate generated point-cloud sets against references.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pcev/distances.hpp"
#include "pcev/error.hpp"
#include "pcev/io.hpp"
#include "pcev/metrics.hpp"
#include "pcev/normals.hpp"
#include "pcev/parallel.hpp"
#include "pcev/perturb.hpp"
#include "pcev/random.hpp"
#include "pcev/sampling.hpp"
#include "pcev/version.hpp"

namespace fs = std::filesystem;
using Config = std::vector<std::pair<std::string, std::string>>;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kSolver = 4 };

struct Global {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string log_level = "warn";
};

// Distance options shared by distance, eval and sweep.
struct DistanceOptions {
  double alpha = 1000.0;
  double epsilon = 0.005;
  std::string solver = "auto";
  bool unaligned = false;
  bool per_point = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "DCD temperature")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "Relative gap of the approximate EMD solver")
        ->capture_default_str();
    cmd->add_option("--emd-solver", solver, "exact | approx | auto (exact up to 512 points)")
        ->check(CLI::IsMember({"exact", "approx", "auto"}))
        ->capture_default_str();
    auto* a = cmd->add_flag("--aligned", "Barycenter-align clouds before measuring (default)");
    cmd->add_flag("--unaligned", unaligned, "Measure raw coordinates")->excludes(a);
    cmd->add_flag("--emd-per-point", per_point, "Divide EMD by the point count");
  }

  pcev::DistanceSpec spec(pcev::Measure m, bool aligned) const {
    pcev::DistanceSpec s;
    s.measure = m;
    s.alpha = alpha;
    s.epsilon = epsilon;
    s.solver = pcev::parse_emd_solver(solver);
    s.aligned = aligned;
    s.per_point = per_point;
    s.validate();
    return s;
  }

  void describe(Config& c) const {
    c.emplace_back("alpha", fmt::format("{}", alpha));
    c.emplace_back("epsilon", fmt::format("{}", epsilon));
    c.emplace_back("emd_solver", solver);
    c.emplace_back("emd_per_point", per_point ? "true" : "false");
  }
};

struct NormalOptions {
  std::size_t k = 20;
  std::optional<double> radius;

  void add(CLI::App* cmd) {
    cmd->add_option("--normals-k", k, "KNN neighborhood size for normals")->capture_default_str();
    cmd->add_option("--normals-radius", radius, "Ball neighborhood radius (overrides --normals-k)");
  }
  pcev::NeighborhoodSpec spec() const {
    const auto s = radius ? pcev::NeighborhoodSpec::ball(*radius) : pcev::NeighborhoodSpec::knn(k);
    s.validate();
    return s;
  }
};

void print_config(const std::string& command, const Global& g, const Config& config) {
  fmt::print("# command: {}\n# version: {}\n# threads: {}\n", command, pcev::version(),
             pcev::resolve_threads(g.threads));
  bool has_seed = false;
  for (const auto& [k, v] : config) {
    fmt::print("# {}: {}\n", k, v);
    has_seed = has_seed || k == "seed";
  }
  if (!has_seed) fmt::print("# seed: {}\n", g.seed);
  std::fflush(stdout);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

bool is_manifest(const fs::path& p) { return p.extension() == ".json"; }

pcev::ReportFormat format_for(const std::string& format, const fs::path& out) {
  if (!format.empty()) return pcev::parse_report_format(format);
  return out.extension() == ".json" ? pcev::ReportFormat::Json : pcev::ReportFormat::Csv;
}

pcev::CloudFormat cloud_format_for(const std::string& format, const fs::path& out) {
  if (!format.empty()) return pcev::parse_cloud_format(format);
  const auto ext = out.extension();
  return ext == ".xyz" || ext == ".txt" ? pcev::CloudFormat::Text : pcev::CloudFormat::Binary;
}

// ---------------------------------------------------------------------------

struct DistanceCmd {
  std::string a, b;
  std::string measure = "dcd";
  DistanceOptions dist;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("distance", "Distance between two clouds");
    cmd->add_option("a", a, "First cloud")->required();
    cmd->add_option("b", b, "Second cloud")->required();
    cmd->add_option("--measure", measure, "cd | emd | dcd")
        ->check(CLI::IsMember({"cd", "emd", "dcd"}))
        ->capture_default_str();
    dist.add(cmd);
  }

  int run(const Global& g) {
    const auto spec = dist.spec(pcev::parse_measure(measure), !dist.unaligned);
    Config c{{"a", a}, {"b", b}, {"measure", measure}, {"aligned", spec.aligned ? "true" : "false"}};
    dist.describe(c);
    print_config("distance", g, c);
    const auto x = pcev::load_cloud(a);
    const auto y = pcev::load_cloud(b);
    const pcev::PreparedCloud px(x, spec.aligned), py(y, spec.aligned);
    pcev::EmdSolver used = pcev::EmdSolver::Exact;
    const double v = pcev::evaluate(px, py, spec, &used);
    fmt::print("{:.12g} {}\n", v, to_string(used));
    return kOk;
  }
};

// Metric x measure cells requested on the command line.
struct MetricOptions {
  std::vector<std::string> measures{"dcd"};
  std::vector<std::string> metrics{"mmd", "cov", "1nna", "snc"};
  std::size_t jsd_resolution = 28;

  void add(CLI::App* cmd) {
    cmd->add_option("--measures", measures, "Comma-separated: cd,emd,dcd")
        ->delimiter(',')
        ->check(CLI::IsMember({"cd", "emd", "dcd"}))
        ->capture_default_str();
    cmd->add_option("--metrics", metrics, "Comma-separated: mmd,cov,1nna,snc,jsd")
        ->delimiter(',')
        ->check(CLI::IsMember({"mmd", "cov", "1nna", "1-nna", "snc", "jsd"}))
        ->capture_default_str();
    cmd->add_option("--jsd-resolution", jsd_resolution, "Voxels per axis for JSD")
        ->capture_default_str();
  }
};

struct EvalCmd {
  std::string gen, ref, out, format;
  bool table_scaling = false;
  MetricOptions metric;
  DistanceOptions dist;
  NormalOptions normals;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Evaluate a generated set against a reference set");
    cmd->add_option("--gen", gen, "Generated set manifest")->required();
    cmd->add_option("--ref", ref, "Reference set manifest")->required();
    cmd->add_option("--out", out, "Report path");
    cmd->add_option("--format", format, "csv | json (default from --out extension)")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--table-scaling", table_scaling,
                  "Scale MMD-DCD by 10, MMD-EMD by 1e3, fractions to percent");
    metric.add(cmd);
    dist.add(cmd);
    normals.add(cmd);
  }

  int run(const Global& g) {
    const bool aligned = !dist.unaligned;
    const auto nspec = normals.spec();
    pcev::VoxelGridSpec{metric.jsd_resolution}.validate();
    Config c{{"gen", gen},
             {"ref", ref},
             {"measures", join(metric.measures)},
             {"metrics", join(metric.metrics)},
             {"aligned", aligned ? "true" : "false"}};
    dist.describe(c);
    c.emplace_back("normals", nspec.label());
    c.emplace_back("jsd_resolution", std::to_string(metric.jsd_resolution));
    c.emplace_back("table_scaling", table_scaling ? "true" : "false");
    c.emplace_back("seed", std::to_string(g.seed));
    print_config("eval", g, c);

    pcev::Evaluator ev(pcev::load_set(gen), pcev::load_set(ref), g.threads);
    pcev::EvalReport report{c, {}};
    bool jsd_done = false;
    for (const auto& mname : metric.metrics) {
      const auto kind = pcev::parse_metric(mname);
      for (const auto& meas : metric.measures) {
        if (kind == pcev::MetricKind::Jsd && jsd_done) break;
        const auto spec = dist.spec(pcev::parse_measure(meas), aligned);
        spdlog::info("evaluating {} with {}", to_string(kind), spec.label());
        pcev::MetricReport r;
        try {
          r = ev.report(kind, spec, nspec, metric.jsd_resolution);
        } catch (const pcev::SolverFailure& e) {
          throw pcev::SolverFailure(fmt::format("{}-{}: {}", to_string(kind), spec.measure_name(), e.what()));
        } catch (const pcev::Error& e) {
          throw pcev::InvalidArgument(fmt::format("{}-{}: {}", to_string(kind), spec.measure_name(), e.what()));
        }
        if (table_scaling) r.scaling = pcev::table_scaling(kind, spec.measure);
        if (r.normal_fallbacks || r.unreliable_normals) {
          spdlog::warn("{}: {} ball fallbacks, {} unreliable normals", r.name(), r.normal_fallbacks,
                       r.unreliable_normals);
        }
        fmt::print("{:<10} {:.12g}\n", r.name(), r.scaled_value());
        report.metrics.push_back(std::move(r));
        jsd_done = jsd_done || kind == pcev::MetricKind::Jsd;
      }
    }
    if (!out.empty()) pcev::write_report(report, out, format_for(format, out));
    return kOk;
  }
};

struct PerturbCmd {
  std::string in, out, format;
  double noise = 0.0, shift = 0.0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("perturb", "Add Gaussian noise and/or a random shift");
    cmd->add_option("--in", in, "Cloud file or set manifest (.json)")->required();
    cmd->add_option("--out", out, "Output cloud file or manifest")->required();
    cmd->add_option("--noise", noise, "Noise std as a fraction of the diameter")->capture_default_str();
    cmd->add_option("--shift", shift, "Shift length as a fraction of the diameter")->capture_default_str();
    cmd->add_option("--format", format, "text | binary (clouds only; default from extension)");
  }

  pcev::PointCloud apply(const pcev::PointCloud& c, std::uint64_t seed) const {
    const double d = pcev::diameter(c);
    pcev::PerturbDiagnostics diag;
    auto noisy = pcev::add_noise(c, noise, pcev::derive_seed(seed, {0}), d, &diag);
    if (diag.zero_diameter) spdlog::warn("cloud '{}' has zero diameter, noise skipped", c.id());
    return pcev::shift(noisy, shift, pcev::derive_seed(seed, {1}), d);
  }

  int run(const Global& g) {
    print_config("perturb", g,
                 {{"in", in}, {"out", out}, {"noise", fmt::format("{}", noise)},
                  {"shift", fmt::format("{}", shift)}});
    if (is_manifest(in)) {
      const auto set = pcev::load_set(in);
      pcev::CloudSet result{{}, set.role};
      for (std::size_t i = 0; i < set.size(); ++i) {
        result.clouds.push_back(apply(set[i], pcev::derive_seed(g.seed, {i})));
      }
      pcev::save_set(result, out, pcev::read_manifest(in).metadata);
    } else {
      pcev::save_cloud(apply(pcev::load_cloud(in), pcev::derive_seed(g.seed, {0})), out,
                       cloud_format_for(format, out));
    }
    return kOk;
  }
};

struct SweepCmd {
  std::string gen, ref, out, format, alignment = "aligned", sampling = "uniform";
  std::vector<double> noise_grid{0.0}, shift_grid{0.0};
  std::size_t seeds = 1, sample_points = 0;
  MetricOptions metric;
  DistanceOptions dist;
  NormalOptions normals;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "Metric response to noise and shift levels");
    cmd->add_option("--gen", gen, "Generated set manifest")->required();
    cmd->add_option("--ref", ref, "Reference set manifest")->required();
    cmd->add_option("--out", out, "Sweep table path")->required();
    cmd->add_option("--format", format, "csv | json (default from --out extension)")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--noise-grid", noise_grid, "Comma-separated noise fractions")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--shift-grid", shift_grid, "Comma-separated shift fractions")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--seeds-per-level", seeds, "Replicates per grid cell")->capture_default_str();
    cmd->add_option("--alignment", alignment, "aligned | raw | both")
        ->check(CLI::IsMember({"aligned", "raw", "both"}))
        ->capture_default_str();
    cmd->add_option("--sample-points", sample_points, "Subsample both sets first (0 = off)")
        ->capture_default_str();
    cmd->add_option("--sampling", sampling, "uniform (fps) | random")
        ->check(CLI::IsMember({"uniform", "fps", "random"}))
        ->capture_default_str();
    metric.add(cmd);
    dist.add(cmd);
    normals.add(cmd);
  }

  int run(const Global& g) {
    if (dist.unaligned) alignment = "raw";
    pcev::SweepConfig cfg;
    cfg.noise_grid = noise_grid;
    cfg.shift_grid = shift_grid;
    cfg.seeds_per_level = seeds;
    cfg.seed = g.seed;
    cfg.sample_points = sample_points;
    cfg.sampling = pcev::parse_sampling_mode(sampling);
    cfg.threads = g.threads;
    const auto nspec = normals.spec();
    for (const auto& mname : metric.metrics) {
      const auto kind = pcev::parse_metric(mname);
      for (bool aligned : {true, false}) {
        if ((aligned && alignment == "raw") || (!aligned && alignment == "aligned")) continue;
        for (const auto& meas : metric.measures) {
          pcev::MetricRequest r{kind, dist.spec(pcev::parse_measure(meas), aligned), nspec,
                                metric.jsd_resolution};
          cfg.metrics.push_back(r);
          if (kind == pcev::MetricKind::Jsd) break;
        }
      }
    }
    cfg.validate();

    auto list = [](const std::vector<double>& v) {
      std::string s;
      for (double x : v) s += (s.empty() ? "" : ",") + fmt::format("{}", x);
      return s;
    };
    Config c{{"gen", gen},
             {"ref", ref},
             {"measures", join(metric.measures)},
             {"metrics", join(metric.metrics)},
             {"alignment", alignment},
             {"noise_grid", list(noise_grid)},
             {"shift_grid", list(shift_grid)},
             {"seeds_per_level", std::to_string(seeds)},
             {"sample_points", std::to_string(sample_points)},
             {"sampling", to_string(cfg.sampling)}};
    dist.describe(c);
    c.emplace_back("normals", nspec.label());
    c.emplace_back("jsd_resolution", std::to_string(metric.jsd_resolution));
    c.emplace_back("seed", std::to_string(g.seed));
    print_config("sweep", g, c);

    const auto table = pcev::run_sweep(pcev::load_set(gen), pcev::load_set(ref), cfg);
    pcev::write_sweep(table, c, out, format_for(format, out));
    fmt::print("{} rows, {} columns\n", table.rows.size(), table.columns.size());
    return kOk;
  }
};

struct NormalsCmd {
  std::string in, out;
  NormalOptions normals;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("normals", "Estimate PCA normals of one cloud");
    cmd->add_option("--in", in, "Cloud file")->required();
    cmd->add_option("--out", out, "Normals file")->required();
    normals.add(cmd);
  }

  int run(const Global& g) {
    const auto spec = normals.spec();
    print_config("normals", g, {{"in", in}, {"out", out}, {"normals", spec.label()}});
    const auto field = pcev::estimate_normals(pcev::load_cloud(in), spec);
    pcev::save_normals(field.normals, out);
    fmt::print("{} normals, {} unreliable, {} ball fallbacks\n", field.size(),
               field.unreliable_count, field.fallback_count);
    return kOk;
  }
};

struct SampleCmd {
  std::string in, out, mode = "fps", format;
  std::size_t points = 2048, start = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sample", "Subsample a cloud");
    cmd->add_option("--in", in, "Cloud file")->required();
    cmd->add_option("--out", out, "Output cloud file")->required();
    cmd->add_option("--points,-m", points, "Number of points to keep")->capture_default_str();
    cmd->add_option("--mode", mode, "fps | random")
        ->check(CLI::IsMember({"fps", "uniform", "random"}))
        ->capture_default_str();
    cmd->add_option("--start", start, "FPS start index")->capture_default_str();
    cmd->add_option("--format", format, "text | binary (default from extension)");
  }

  int run(const Global& g) {
    print_config("sample", g,
                 {{"in", in}, {"out", out}, {"points", std::to_string(points)}, {"mode", mode},
                  {"start", std::to_string(start)}});
    const auto c = pcev::load_cloud(in);
    const auto s = pcev::parse_sampling_mode(mode) == pcev::SamplingMode::Uniform
                       ? pcev::fps_sample(c, points, start)
                       : pcev::random_sample(c, points, g.seed);
    pcev::save_cloud(s, out, cloud_format_for(format, out));
    return kOk;
  }
};

struct ConvertCmd {
  std::string in, out, format;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("convert", "Convert between text (XYZ) and binary clouds");
    cmd->add_option("--in", in, "Input cloud (whitespace XYZ or binary)")->required();
    cmd->add_option("--out", out, "Output cloud")->required();
    cmd->add_option("--format", format, "text | binary (default from extension)");
  }

  int run(const Global& g) {
    const auto f = cloud_format_for(format, out);
    print_config("convert", g, {{"in", in}, {"out", out}, {"format", to_string(f)}});
    const auto c = pcev::load_cloud(in);
    pcev::save_cloud(c, out, f);
    fmt::print("{} points\n", c.size());
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud set evaluation toolkit"};
  app.set_version_flag("--version", pcev::version());
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace | debug | info | warn | error | off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
      ->capture_default_str();

  DistanceCmd distance;
  EvalCmd eval;
  PerturbCmd perturb;
  SweepCmd sweep;
  NormalsCmd normals;
  SampleCmd sample;
  ConvertCmd convert;
  distance.add(app);
  eval.add(app);
  perturb.add(app);
  sweep.add(app);
  normals.add(app);
  sample.add(app);
  convert.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("pcev");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (app.got_subcommand("distance")) return distance.run(g);
    if (app.got_subcommand("eval")) return eval.run(g);
    if (app.got_subcommand("perturb")) return perturb.run(g);
    if (app.got_subcommand("sweep")) return sweep.run(g);
    if (app.got_subcommand("normals")) return normals.run(g);
    if (app.got_subcommand("sample")) return sample.run(g);
    if (app.got_subcommand("convert")) return convert.run(g);
  } catch (const pcev::SolverFailure& e) {
    spdlog::error("{}", e.what());
    return kSolver;
  } catch (const pcev::Error& e) {
    spdlog::error("{}", e.what());
    return kData;
  }
  return kUsage;
}
