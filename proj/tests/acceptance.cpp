// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: fraclab_acceptance <path to fraclab_cli>

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "fraclab/calibration.hpp"
#include "fraclab/delta_sets.hpp"
#include "fraclab/duality.hpp"
#include "fraclab/experiments.hpp"
#include "fraclab/incidence.hpp"
#include "fraclab/slope_fit.hpp"

using namespace fraclab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

Verdict run_default(const std::string& id, Json params = Json::object()) {
  ExperimentConfig cfg;
  cfg.id = id;
  cfg.params = std::move(params);
  const auto res = run_experiment(cfg);
  std::string detail = res.summary["checks"].dump();
  if (res.summary.contains("fit")) detail += " slope " + std::to_string(res.summary["fit"]["slope"].get<double>());
  return {res.passed, detail};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// --- 1 ----------------------------------------------------------------------
Verdict sharpness_exponents() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.id = "sharpness-incidence";
  const auto res = run_experiment(cfg);
  const double secs = seconds_since(t0);
  const double slope = res.summary["lines_fit"]["slope"].get<double>();
  const double scaled = res.summary["min_lines_per_point_scaled"].get<double>();
  const bool ok = std::abs(slope + 1.25) <= 0.1 && scaled >= calibration::kSharpnessLinesPerPoint && secs < 120;
  return {ok, "slope " + fmt(slope) + " (want -1.25 +- 0.1), min M_p delta^s " + fmt(scaled) + ", " + fmt(secs) +
                  " s"};
}

// --- 2 ----------------------------------------------------------------------
Verdict frostman_lemma() {
  double worst = 0.0;
  for (auto [s, t] : {std::pair{0.5, 1.5}, std::pair{0.25, 1.25}})
    for (int k = 6; k <= 10; ++k) {
      const SharpnessParams sp{s, t, k, 0.5};
      const auto inst = gen_sharpness_construction(sp);
      worst = std::max(worst, validate_frostman_set(inst.points, sp.delta(), t).best_constant);
    }
  return {worst <= calibration::kSharpnessFrostman,
          "max constant " + fmt(worst) + " <= " + fmt(calibration::kSharpnessFrostman)};
}

// --- 3 ----------------------------------------------------------------------
Verdict incidence_bound() {
  double worst = 0.0;
  int instances = 0;
  auto score = [&](const PointCloud& pts, const PlaneFamily& lines, double delta, double t) {
    const double cf = validate_frostman_set(pts, delta, t).best_constant;
    const auto tally = count_incidences(pts, lines, delta);
    const double rhs = incidence_bound_rhs(static_cast<double>(pts.size()), static_cast<double>(lines.size()),
                                           delta, 2, 1, t, cf, 0.1);
    ++instances;
    const double ratio = static_cast<double>(tally.pair_count()) / rhs;
    worst = std::max(worst, ratio);
    return ratio;
  };
  std::uint64_t seed = 100;
  for (double t : {1.25, 1.5, 1.75})
    for (int k : {6, 7})
      for (bool rich : {true, false}) {
        const double delta = std::ldexp(1.0, -k);
        const auto pts = gen_random_dyadic_set(2, t, k, ++seed);
        const auto lines = gen_random_line_family(pts.size(), delta, ++seed, rich ? &pts : nullptr);
        score(pts, lines, delta, t);
      }
  bool slope_ok = true;
  std::string slopes;
  for (auto [s, t] : {std::pair{0.5, 1.5}, std::pair{0.25, 1.25}}) {
    std::vector<double> deltas, ratios;
    for (int k = 6; k <= 9; ++k) {
      const SharpnessParams sp{s, t, k, 0.5};
      const auto inst = gen_sharpness_construction(sp);
      const double ratio = score(inst.points, inst.lines, sp.delta(), t);
      deltas.push_back(sp.delta());
      // the slope is taken at eps = 0, where the bound is sharp
      ratios.push_back(ratio * std::pow(sp.delta(), -0.1));
    }
    const double slope = fit_loglog_slope(deltas, ratios).slope;
    slope_ok = slope_ok && std::abs(slope) <= 0.15;
    slopes += " " + fmt(slope);
  }
  const bool ok = instances == 20 && worst <= calibration::kIncidenceConstant && slope_ok;
  return {ok, std::to_string(instances) + " instances, max |I|/rhs " + fmt(worst) + " <= " +
                  fmt(calibration::kIncidenceConstant) + ", sharpness ratio slopes" + slopes};
}

// --- 4 ----------------------------------------------------------------------
Verdict radial_identity() {
  bool ok = true;
  std::string detail;
  for (const char* measure : {"cloud", "disc"})
    for (double q : {1.0, 2.0}) {
      ExperimentConfig cfg;
      cfg.id = "radial-identity";
      cfg.params = {{"measure", measure}, {"q", q}};
      const auto res = run_experiment(cfg);
      ok = ok && res.passed;
      detail += std::string(measure) + " q=" + fmt(q) + ": " + fmt(res.summary["max_relative_error"].get<double>()) +
                (res.passed ? " ok; " : " FAILED; ");
    }
  return {ok, detail};
}

// --- 8 ----------------------------------------------------------------------
Verdict duality() {
  using Q = boost::rational<long long>;
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> num(-30, 30), den(1, 12);
  int exact_fail = 0;
  for (int i = 0; i < 2000; ++i) {
    const int d = 2 + i % 3;
    std::vector<Q> x(d), a(d);
    for (int j = 0; j < d; ++j) {
      x[j] = Q(num(gen), den(gen));
      a[j] = Q(num(gen), den(gen));
    }
    if (i % 2 == 0) {  // force x onto the graph
      Q v = a.back();
      for (int j = 0; j + 1 < d; ++j) v += a[j] * x[j];
      x.back() = v;
    }
    const bool primal = on_graph(x, a);
    const bool dual = on_graph(dual_point_from_coefficients(a), dual_plane_coefficients(x));
    exact_fail += primal != dual || (i % 2 == 0 && !primal);
  }

  const DualityContext ctx{2, calibration::kDualityRadius};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pc;
  PlaneFamily planes;
  const AffinePlane v0 = horizontal_plane(2);
  while (planes.size() < 100000) {
    const double r = 2 * std::sqrt(u(gen)), phi = 2 * std::acos(-1.0) * u(gen);
    const Vec y{{0.4 * (2 * u(gen) - 1), 0.4 * (2 * u(gen) - 1)}};
    auto v = dual_plane(y);
    if (grassmann_distance(v, v0) > ctx.r_d) continue;
    pc.insert(pc.end(), {r * std::cos(phi), r * std::sin(phi)});
    planes.planes.push_back(std::move(v));
  }
  const auto rep = verify_duality_relations(PointCloud(2, pc), planes, ctx, true);
  const bool ok = exact_fail == 0 && rep.pairs == 100000 && rep.factor3_violations == 0 &&
                  rep.incidence_mismatches == 0 && rep.max_roundtrip_error <= 1e-12;
  return {ok, "rational mismatches " + std::to_string(exact_fail) + ", factor-3 violations " +
                  std::to_string(rep.factor3_violations) + "/" + std::to_string(rep.pairs) + ", round trip " +
                  fmt(rep.max_roundtrip_error)};
}

// --- 9 ----------------------------------------------------------------------
PlaneFamily random_lines(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ang(0.0, std::acos(-1.0)), off(-0.2, 1.2);
  PlaneFamily f;
  for (std::size_t i = 0; i < count; ++i) {
    const double th = ang(gen);
    // offset measured along the normal of a line through [0,1]^2
    f.planes.push_back(line_at_angle(th, off(gen)));
  }
  return f;
}

PointCloud random_points(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(2 * count);
  for (double& x : c) x = u(gen);
  return PointCloud(2, c);
}

Verdict oracle_and_speed() {
  int mismatches = 0, checked = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t np = 50 + 40 * trial, nl = 100000 / np;
    const double r = 0.002 * (1 + trial);
    const auto pts = trial % 3 == 2 ? gen_random_dyadic_set(2, 1.5, 6, trial) : random_points(np, trial);
    const auto lines = random_lines(std::min<std::size_t>(nl, 100000 / pts.size()), 1000 + trial);
    mismatches += !(count_incidences(pts, lines, r) == count_incidences_brute(pts, lines, r));
    ++checked;
  }
  const auto pts = random_points(100000, 7);
  const auto lines = random_lines(100000, 8);
  omp_set_num_threads(std::min(8, omp_get_num_procs()));
  const auto t0 = Clock::now();
  const auto tally = count_incidences(pts, lines, 1.0 / 1024);
  const double secs = seconds_since(t0);
  const bool ok = mismatches == 0 && secs < 10.0;
  return {ok, std::to_string(checked) + " brute-force comparisons, " + std::to_string(mismatches) +
                  " mismatches; 1e5 x 1e5 in " + fmt(secs) + " s (" + std::to_string(tally.pair_count()) +
                  " pairs, " + std::to_string(omp_get_max_threads()) + " threads)"};
}

// --- 10 ---------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return "<popen failed>";
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return out + "\nexit " + std::to_string(status);
}

Verdict determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI not found: " + cli};
  const fs::path dir = fs::temp_directory_path() / "fraclab_acceptance_determinism";
  fs::remove_all(dir);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"sharpness-incidence", "--param k_max=8"},
      {"duality-pipeline", "--param k_min=6 --param k_max=8"},
      {"projection-lp", "--param h=0.03125"},
      {"radial-identity", "--param samples=2000 --param halvings=1"},
  };
  int differing = 0;
  for (const auto& [id, extra] : runs) {
    std::string outputs[3];
    int idx = 0;
    for (int threads : {1, 4, 1}) {
      const fs::path out = dir / (id + "_" + std::to_string(idx));
      const std::string stdout_text = capture("\"" + cli + "\" experiment " + id + " --seed 5 " + extra +
                                              " --threads " + std::to_string(threads) + " --out \"" + out.string() +
                                              "\" 2>/dev/null");
      outputs[idx++] = stdout_text + slurp(out / (id + ".csv")) + slurp(out / (id + ".json"));
    }
    differing += outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].size() < 100;
  }
  fs::remove_all(dir);
  return {differing == 0, std::to_string(runs.size()) + " experiments x threads {1, 4, 1}, " +
                              std::to_string(differing) + " differing"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"AC1 sharpness exponents", sharpness_exponents},
      {"AC2 (delta,t)-set lemma", frostman_lemma},
      {"AC3 incidence bound", incidence_bound},
      {"AC4 radial identity", radial_identity},
      {"AC5 rotation identity", [] { return run_default("mattila"); }},
      {"AC6 counting lemma",
       [] {
         const auto a = run_default("ball-scaling", {{"measure", "lebesgue"}});
         const auto b = run_default("ball-scaling", {{"measure", "cantor"}});
         return Verdict{a.pass && b.pass, "lebesgue " + a.detail + " cantor " + b.detail};
       }},
      {"AC7 projection dichotomy",
       [] {
         ExperimentConfig cfg;
         cfg.id = "projection-lp";
         std::string detail;
         double slopes[2];
         bool ok = true;
         int i = 0;
         for (double p : {2.0, 4.0}) {
           cfg.params = {{"measure", "cantor-ball"}, {"p", p}};
           const auto res = run_experiment(cfg);
           slopes[i++] = res.summary["fit"]["slope"].get<double>();
           ok = ok && res.passed && std::abs(slopes[i - 1] - (1 + 0.5 * (1 - p))) <= 0.15;
           detail += "p=" + fmt(p) + " slope " + fmt(slopes[i - 1]) + "; ";
         }
         ok = ok && slopes[0] > 0 && slopes[1] < 0;
         return Verdict{ok, detail + "sign flips across p = 3"};
       }},
      {"AC8 duality", duality},
      {"AC9 brute-force equivalence and speed", oracle_and_speed},
      {"AC10 determinism", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << " | " << v.detail << " | " << fmt(seconds_since(t0))
              << " s" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
