// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails or runs over its time budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oracles.hpp"
#include "pcev/distances.hpp"
#include "pcev/error.hpp"
#include "pcev/io.hpp"
#include "pcev/metrics.hpp"
#include "pcev/normals.hpp"
#include "pcev/perturb.hpp"
#include "pcev/random.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace pcev;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check; the first few are kept in the detail line.
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || std::count(detail.begin(), detail.end(), ';') < 4) {
      detail += (detail.empty() ? "" : "; ") + what;
    }
    pass = false;
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

struct Options {
  fs::path workdir = fs::temp_directory_path() / "pcev_acceptance";
  std::string cli;
  std::set<int> only;
};

double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<oracle::Cloud> oracle_set(const CloudSet& s, bool centered) {
  std::vector<oracle::Cloud> out;
  for (const auto& c : s.clouds) {
    out.push_back(centered ? oracle::centered(oracle::points(c)) : oracle::points(c));
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome identity(const Options&) {
  Outcome o;
  const auto set = testing::synthetic_set(50, 256, 101, SetRole::Reference);
  auto gen = set;
  gen.role = SetRole::Generated;
  Evaluator ev(gen, set, 0);
  for (const auto& spec : {DistanceSpec::chamfer(), DistanceSpec::emd(), DistanceSpec::dcd()}) {
    const std::string m = spec.measure_name();
    const double mmd = ev.mmd(spec);
    const double cov = ev.cov(spec);
    const double nna = ev.one_nna(spec);
    const double snc = ev.snc(spec, NeighborhoodSpec::knn(20));
    o.expect(std::abs(mmd) <= 1e-12, fmt::format("MMD-{}={:.3g}", m, mmd));
    o.expect(cov == 1.0, fmt::format("COV-{}={}", m, cov));
    o.expect(nna == 0.0, fmt::format("1-NNA-{}={}", m, nna));
    o.expect(std::abs(snc - 1.0) <= 1e-12, fmt::format("SNC-{}={:.17g}", m, snc));
  }
  const double jsd = ev.jsd(tight_grid(gen, set));
  o.expect(std::abs(jsd) <= 1e-12, fmt::format("JSD={:.3g}", jsd));
  o.note("50 clouds x 256 points, CD/EMD/DCD");
  return o;
}

Outcome oracle_equivalence(const Options&) {
  Outcome o;
  std::size_t emd_bad = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::size_t n = 1 + s % 7;
    const auto x = testing::uniform_cube(n, 5000 + 2 * s);
    const auto y = testing::uniform_cube(n, 5001 + 2 * s);
    const double got = emd(x, y, EmdSolver::Exact).value;
    const double want = oracle::emd_by_permutation(oracle::points(x), oracle::points(y));
    if (got != want) ++emd_bad;
  }
  o.expect(emd_bad == 0, fmt::format("{} EMD pairs differ from enumeration", emd_bad));

  double worst_cd = 0.0, worst_dcd = 0.0;
  SplitMix64 rng(77);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto x = testing::mixed_cloud(1 + rng.below(512), 6000 + 2 * s);
    const auto y = testing::mixed_cloud(1 + rng.below(512), 6001 + 2 * s);
    const double alpha = s % 2 ? 1000.0 : 5.0 + 100.0 * rng.uniform();
    const auto ox = oracle::points(x), oy = oracle::points(y);
    worst_cd = std::max(worst_cd, rel(chamfer(x, y), oracle::chamfer(ox, oy)));
    worst_dcd = std::max(worst_dcd, rel(dcd(x, y, alpha), oracle::dcd(ox, oy, alpha)));
  }
  o.expect(worst_cd <= 1e-12, fmt::format("CD rel err {:.3g}", worst_cd));
  o.expect(worst_dcd <= 1e-12, fmt::format("DCD rel err {:.3g}", worst_dcd));

  double worst_set = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto g = testing::synthetic_set(8, 7, 7000 + 2 * s, SetRole::Generated, 0.05);
    const auto r = testing::synthetic_set(8, 7, 7001 + 2 * s, SetRole::Reference, 0.05);
    const bool aligned = s % 2 == 0;
    const auto og = oracle_set(g, aligned), orf = oracle_set(r, aligned);
    Evaluator ev(g, r, 0);
    for (int m = 0; m < 3; ++m) {
      DistanceSpec spec = m == 0   ? DistanceSpec::chamfer(aligned)
                          : m == 1 ? DistanceSpec::emd(EmdSolver::Exact, 0.005, aligned)
                                   : DistanceSpec::dcd(3.0, aligned);
      oracle::Distance d = [m](const oracle::Cloud& a, const oracle::Cloud& b) {
        if (m == 0) return oracle::chamfer(a, b);
        if (m == 1) return oracle::emd_by_permutation(a, b);
        return oracle::dcd(a, b, 3.0);
      };
      const double errs[] = {
          rel(ev.mmd(spec), oracle::mmd(og, orf, d)),
          rel(ev.cov(spec), oracle::cov(og, orf, d)),
          rel(ev.one_nna(spec), oracle::one_nna(og, orf, d)),
          rel(ev.snc(spec, NeighborhoodSpec::knn(4)), oracle::snc(og, orf, d, 4)),
      };
      for (double e : errs) worst_set = std::max(worst_set, e);
    }
  }
  o.expect(worst_set <= 1e-12, fmt::format("set metric rel err {:.3g}", worst_set));
  o.note(fmt::format("200 EMD pairs, 100 CD/DCD pairs (max rel {:.1e}), 20 set pairs (max rel {:.1e})",
                     std::max(worst_cd, worst_dcd), worst_set));
  return o;
}

Outcome alignment_invariance(const Options&) {
  Outcome o;
  const auto gen = testing::synthetic_set(40, 128, 301);
  const auto ref = testing::synthetic_set(40, 128, 302, SetRole::Reference);
  CloudSet moved{{}, SetRole::Generated};
  SplitMix64 rng(303);
  for (const auto& c : gen.clouds) {
    const double len = 0.5 * diameter(c) * rng.uniform();
    moved.clouds.push_back(translate(c, len * random_direction(rng())));
  }

  Evaluator a(gen, ref, 0), b(moved, ref, 0);
  const auto knn = NeighborhoodSpec::knn(20);
  auto values = [&](Evaluator& ev, bool aligned) {
    const auto spec = DistanceSpec::dcd(1000.0, aligned);
    return std::vector<double>{ev.mmd(spec), ev.cov(spec), ev.one_nna(spec), ev.snc(spec, knn)};
  };
  const char* names[] = {"MMD-DCD", "COV-DCD", "1-NNA-DCD", "SNC-DCD"};
  const auto aligned_a = values(a, true), aligned_b = values(b, true);
  const auto raw_a = values(a, false), raw_b = values(b, false);
  double worst_aligned = 0.0, best_raw = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double e = rel(aligned_a[k], aligned_b[k]);
    worst_aligned = std::max(worst_aligned, e);
    o.expect(e <= 1e-9, fmt::format("aligned {} moved by {:.3g}", names[k], e));
    best_raw = std::max(best_raw, rel(raw_a[k], raw_b[k]));
  }
  o.expect(best_raw > 0.01, fmt::format("largest unaligned change only {:.3g}", best_raw));
  o.note(fmt::format("aligned max rel change {:.1e}, unaligned max {:.1f}%", worst_aligned,
                     100.0 * best_raw));
  return o;
}

Outcome noise_monotonicity(const Options&) {
  Outcome o;
  const auto ref = testing::synthetic_set(100, 128, 401, SetRole::Reference);
  auto gen = ref;
  gen.role = SetRole::Generated;
  SweepConfig cfg;
  cfg.noise_grid = {0.0, 0.005, 0.01, 0.02, 0.04, 0.08};
  cfg.seeds_per_level = 20;
  cfg.seed = 402;
  cfg.threads = 0;
  cfg.metrics = {MetricRequest{MetricKind::Mmd, DistanceSpec::dcd()},
                 MetricRequest{MetricKind::Snc, DistanceSpec::dcd()}};
  const auto table = run_sweep(gen, ref, cfg);
  std::string mmd_trace, snc_trace;
  for (std::size_t i = 0; i < table.summary.size(); ++i) {
    const auto& v = table.summary[i].values;
    mmd_trace += fmt::format("{}{:.6g}", i ? " " : "", v[0]);
    snc_trace += fmt::format("{}{:.4f}", i ? " " : "", v[1]);
    if (i == 0) continue;
    const auto& p = table.summary[i - 1].values;
    o.expect(v[0] > p[0], fmt::format("MMD-DCD not increasing at step {}", i));
    o.expect(v[1] < p[1], fmt::format("SNC not decreasing at step {}", i));
  }
  o.note(fmt::format("MMD-DCD [{}] SNC [{}]", mmd_trace, snc_trace));
  return o;
}

Outcome normal_accuracy(const Options&) {
  Outcome o;
  const auto sphere = testing::unit_sphere_fps(2048, 501);
  const auto field = estimate_normals(sphere, NeighborhoodSpec::knn(20));
  std::size_t good = 0;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    if (std::abs(dot(field.normals[i].vec(), sphere[i])) >= 0.99) ++good;
  }
  const double frac = static_cast<double>(good) / static_cast<double>(sphere.size());
  o.expect(frac >= 0.99, fmt::format("sphere {:.4f} of points within tolerance", frac));

  const auto plane = testing::plane_patch(46, 502);
  const auto pf = estimate_normals(plane, NeighborhoodSpec::knn(20));
  std::size_t flat = 0;
  for (const auto& n : pf.normals) {
    if (std::abs(n.z) >= 0.999) ++flat;
  }
  o.expect(flat == plane.size(), fmt::format("plane {}/{} normals along z", flat, plane.size()));
  o.note(fmt::format("sphere {:.2f}% of 2048, plane {}/{}", 100.0 * frac, flat, plane.size()));
  return o;
}

Outcome nna_calibration(const Options&) {
  Outcome o;
  std::size_t dcd_ok = 0, emd_ok = 0;
  std::string trace;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto g = testing::synthetic_set(100, 128, 600 + 2 * s);
    const auto r = testing::synthetic_set(100, 128, 601 + 2 * s, SetRole::Reference);
    Evaluator ev(g, r, 0);
    const double d = ev.one_nna(DistanceSpec::dcd());
    const double e = ev.one_nna(DistanceSpec::emd(EmdSolver::Approx));
    dcd_ok += d >= 0.40 && d <= 0.60;
    emd_ok += e >= 0.40 && e <= 0.60;
    trace += fmt::format("{}{:.3f}/{:.3f}", s ? " " : "", d, e);
  }
  o.expect(dcd_ok >= 9, fmt::format("1-NNA-DCD in range on {}/10 seeds", dcd_ok));
  o.expect(emd_ok >= 9, fmt::format("1-NNA-EMD in range on {}/10 seeds", emd_ok));
  o.note(fmt::format("DCD {}/10, EMD {}/10 in [0.40, 0.60]; dcd/emd per seed: {}", dcd_ok, emd_ok,
                     trace));
  return o;
}

Outcome emd_contract(const Options&) {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto x = testing::mixed_cloud(256, 700 + 2 * s);
    const auto y = testing::mixed_cloud(256, 701 + 2 * s);
    const double exact = emd(x, y, EmdSolver::Exact).value;
    const double approx = emd(x, y, EmdSolver::Approx, 0.005).value;
    worst = std::max(worst, (approx - exact) / exact);
    o.expect(approx >= exact * (1.0 - 1e-12), fmt::format("pair {} approx below exact", s));
  }
  o.expect(worst <= 0.01, fmt::format("worst relative gap {:.3g} at n=256", worst));

  double exact_time = 0.0, approx_time = 0.0, slowest = 1e300;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = testing::mixed_cloud(2048, 800 + 2 * s);
    const auto y = testing::mixed_cloud(2048, 801 + 2 * s);
    auto t0 = std::chrono::steady_clock::now();
    const auto a = emd(x, y, EmdSolver::Approx, 0.005);
    const double ta = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto e = emd(x, y, EmdSolver::Exact);
    const double te = seconds_since(t0);
    exact_time += te;
    approx_time += ta;
    slowest = std::min(slowest, te / ta);
    o.expect(a.solver == EmdSolver::Approx, fmt::format("pair {} fell back to exact", s));
    o.expect(rel(a.value, e.value) <= 0.01, fmt::format("pair {} gap {:.3g} at n=2048", s,
                                                        rel(a.value, e.value)));
  }
  const double speedup = exact_time / approx_time;
  o.expect(speedup >= 20.0, fmt::format("speedup {:.1f}x at n=2048", speedup));
  o.note(fmt::format("n=256 worst gap {:.2e}; n=2048 exact {:.1f}s vs approx {:.2f}s, {:.1f}x "
                     "overall (slowest pair {:.1f}x)",
                     worst, exact_time, approx_time, speedup, slowest));
  return o;
}

Outcome determinism(const Options& opt) {
  Outcome o;
  if (opt.cli.empty() || !fs::exists(opt.cli)) {
    o.expect(false, "pcev executable not available (pass --cli)");
    return o;
  }
  const fs::path dir = opt.workdir / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_set(testing::synthetic_set(24, 128, 901), dir / "gen.json");
  save_set(testing::synthetic_set(24, 128, 902, SetRole::Reference), dir / "ref.json");

  auto run = [&](const std::string& args) {
    const std::string cmd = fmt::format("\"{}\" --seed 17 {} > \"{}\" 2>&1", opt.cli, args,
                                        (dir / "log.txt").string());
    const int rc = std::system(cmd.c_str());
    o.expect(rc == 0, fmt::format("'{}' exited with {}", args, rc));
  };
  const std::string g = (dir / "gen.json").string(), r = (dir / "ref.json").string();
  std::vector<std::string> outputs;
  for (int threads : {1, 8}) {
    const auto tag = fmt::format("t{}", threads);
    for (const char* ext : {"csv", "json"}) {
      const auto eval_out = (dir / fmt::format("eval_{}.{}", tag, ext)).string();
      run(fmt::format("--threads {} eval --gen \"{}\" --ref \"{}\" --measures cd,emd,dcd "
                      "--metrics mmd,cov,1nna,snc,jsd --out \"{}\"",
                      threads, g, r, eval_out));
      const auto sweep_out = (dir / fmt::format("sweep_{}.{}", tag, ext)).string();
      run(fmt::format("--threads {} sweep --gen \"{}\" --ref \"{}\" --measures cd,emd,dcd "
                      "--metrics mmd,cov,1nna,snc,jsd --noise-grid 0,0.01,0.02 --shift-grid 0,0.05 "
                      "--seeds-per-level 2 --alignment both --sample-points 96 --out \"{}\"",
                      threads, g, r, sweep_out));
    }
  }
  std::size_t compared = 0;
  for (const char* name : {"eval", "sweep"}) {
    for (const char* ext : {"csv", "json"}) {
      const auto a = dir / fmt::format("{}_t1.{}", name, ext);
      const auto b = dir / fmt::format("{}_t8.{}", name, ext);
      if (!fs::exists(a) || !fs::exists(b)) {
        o.expect(false, fmt::format("missing {} {} output", name, ext));
        continue;
      }
      o.expect(read_file(a) == read_file(b), fmt::format("{}.{} differs between 1 and 8 threads",
                                                         name, ext));
      ++compared;
    }
  }
  o.note(fmt::format("{} report files byte-identical across --threads 1 and 8", compared));
  return o;
}

template <typename E, typename Fn>
bool throws_as(Fn&& fn) {
  try {
    fn();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome io_round_trips(const Options& opt) {
  Outcome o;
  const fs::path dir = opt.workdir / "io";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Binary payloads are float32, so start from representable values.
  const auto raw = testing::mixed_cloud(1500, 1001);
  const PointCloud cloud = parse_binary_cloud(encode_binary_cloud(raw));
  save_cloud(cloud, dir / "a.pcev", CloudFormat::Binary);
  const auto bytes = read_file(dir / "a.pcev");
  const auto back = load_cloud(dir / "a.pcev");
  save_cloud(back, dir / "b.pcev", CloudFormat::Binary);
  o.expect(back == cloud, "binary cloud values changed");
  o.expect(read_file(dir / "b.pcev") == bytes, "binary cloud bytes changed");

  const auto field = estimate_normals(cloud, NeighborhoodSpec::knn(12));
  save_normals(field.normals, dir / "a.pcnm");
  const auto nb = load_normals(dir / "a.pcnm", cloud.size());
  save_normals(nb, dir / "b.pcnm");
  o.expect(read_file(dir / "a.pcnm") == read_file(dir / "b.pcnm"), "normals bytes changed");

  save_cloud(raw, dir / "a.xyz", CloudFormat::Text);
  const auto text = load_cloud(dir / "a.xyz");
  double worst = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    worst = std::max({worst, rel(raw[i].x, text[i].x), rel(raw[i].y, text[i].y),
                      rel(raw[i].z, text[i].z)});
  }
  o.expect(text.size() == raw.size() && worst <= 1e-8,
           fmt::format("text round trip rel err {:.3g}", worst));

  auto bad_file = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    return dir / name;
  };
  const auto truncated = bad_file("truncated.pcev", bytes.substr(0, bytes.size() - 5));
  o.expect(throws_as<ParseError>([&] { load_cloud(truncated); }), "truncated payload");
  std::string magic = bytes;
  magic[3] = 'X';
  const auto bad_magic = bad_file("magic.pcev", magic);
  o.expect(throws_as<ParseError>([&] { load_cloud(bad_magic); }), "bad magic");
  const auto nan_line = bad_file("nan.xyz", "0 0 0\n1 nan 2\n");
  o.expect(throws_as<ParseError>([&] { load_cloud(nan_line); }), "NaN line");
  const auto normals_short = bad_file("short.pcnm", read_file(dir / "a.pcnm").substr(0, 40));
  o.expect(throws_as<ParseError>([&] { load_normals(normals_short, cloud.size()); }),
           "truncated normals");
  o.note(fmt::format("binary cloud {} B and normals identical, text max rel {:.1e}, 4 fixtures",
                     bytes.size(), worst));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::vector<int> only;
  CLI::App app{"pcev acceptance suite"};
  app.add_option("--workdir", opt.workdir, "Scratch directory for generated files");
  app.add_option("--cli", opt.cli, "Path to the pcev executable");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  opt.only.insert(only.begin(), only.end());
  fs::create_directories(opt.workdir);

  const std::vector<Criterion> criteria = {
      {1, "identity suite", 60, identity},
      {2, "oracle equivalence", 300, oracle_equivalence},
      {3, "alignment invariance", 120, alignment_invariance},
      {4, "DCD noise monotonicity", 600, noise_monotonicity},
      {5, "normal estimation accuracy", 30, normal_accuracy},
      {6, "1-NNA calibration", 600, nna_calibration},
      {7, "EMD approximation contract", 600, emd_contract},
      {8, "determinism", 300, determinism},
      {9, "I/O round trips", 10, io_round_trips},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!opt.only.empty() && !opt.only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(opt);
    } catch (const std::exception& e) {
      o.expect(false, fmt::format("threw: {}", e.what()));
    }
    const double t = seconds_since(t0);
    o.expect(t < c.budget_seconds, fmt::format("over the {:.0f}s budget", c.budget_seconds));
    failed += !o.pass;
    fmt::print("[{}] {}. {} ({:.1f}s): {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, t, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
