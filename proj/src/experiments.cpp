#include "fraclab/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fraclab/calibration.hpp"
#include "fraclab/delta_sets.hpp"
#include "fraclab/duality.hpp"
#include "fraclab/error.hpp"
#include "fraclab/incidence.hpp"
#include "fraclab/projections.hpp"
#include "fraclab/random.hpp"
#include "fraclab/slope_fit.hpp"

namespace fraclab {

namespace {

constexpr std::uint64_t kCloudStream = 0x636c6f7564ULL;    // "cloud"
constexpr std::uint64_t kPipelineStream = 0x70697065ULL;   // "pipe"
constexpr std::uint64_t kFibreStream = 0x6669627265ULL;    // "fibre"

template <class T>
T param(Json& p, const char* key, T fallback) {
  if (!p.contains(key)) p[key] = fallback;
  return p.at(key).get<T>();
}

// CSV assembly with fixed formatting.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}
  void add(std::vector<std::string> row) {
    require(row.size() == columns_.size(), "row width does not match the header");
    rows_.push_back(std::move(row));
  }
  std::string str() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string num(double x) { return format_double(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

Json fit_json(const SlopeFit& f) {
  return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

bool all_true(const Json& checks) {
  for (const auto& [k, v] : checks.items())
    if (!v.get<bool>()) return false;
  return true;
}

// ---------------------------------------------------------------------------

ExperimentResult sharpness_incidence(const ExperimentConfig& cfg, Json p) {
  const double s = param(p, "s", 0.5);
  const double t = param(p, "t", 1.5);
  const int k_min = param(p, "k_min", 6);
  const int k_max = param(p, "k_max", 10);
  const double c = param(p, "c", 0.5);
  require(k_max - k_min >= 2, "need at least three scales");
  const double eta = (1.0 - s) * (t - 1.0);

  Table table({"k", "delta", "points", "lines", "incidences", "bound_rhs", "ratio", "frostman_constant",
               "min_lines_per_point"});
  std::vector<double> deltas, lines, ratios;
  double min_scaled = std::numeric_limits<double>::infinity();
  double max_frostman = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const SharpnessParams sp{s, t, k, c};
    const double delta = sp.delta();
    const auto inst = gen_sharpness_construction(sp);
    const auto tally = count_incidences(inst.points, inst.lines, delta);
    const auto frost = validate_frostman_set(inst.points, delta, t);
    const double rhs = incidence_bound_rhs(static_cast<double>(inst.points.size()),
                                           static_cast<double>(inst.lines.size()), delta, 2, 1, t,
                                           frost.best_constant, 0.0);
    const double ratio = static_cast<double>(tally.pair_count()) / rhs;
    const std::size_t min_lines = *std::min_element(tally.per_point.begin(), tally.per_point.end());
    min_scaled = std::min(min_scaled, static_cast<double>(min_lines) * std::pow(delta, s));
    max_frostman = std::max(max_frostman, frost.best_constant);
    deltas.push_back(delta);
    lines.push_back(static_cast<double>(inst.lines.size()));
    ratios.push_back(ratio);
    table.add({num(k), num(delta), num(inst.points.size()), num(inst.lines.size()), num(tally.pair_count()),
               num(rhs), num(ratio), num(frost.best_constant), num(min_lines)});
  }
  const SlopeFit line_fit = fit_loglog_slope(deltas, lines);
  const SlopeFit ratio_fit = fit_loglog_slope(deltas, ratios);
  const double expected = -(2.0 * s + eta);

  Json checks{{"lines_slope", std::abs(line_fit.slope - expected) <= 0.1},
              {"ratio_slope", std::abs(ratio_fit.slope) <= 0.15},
              {"lines_per_point", min_scaled >= calibration::kSharpnessLinesPerPoint}};
  Json summary{{"experiment", cfg.id},
               {"seed", cfg.seed},
               {"params", p},
               {"expected", {{"dimension_bound", 2.0 * s + eta}, {"lines_slope", expected}, {"ratio_slope", 0.0}}},
               {"tolerance", {{"lines_slope", 0.1}, {"ratio_slope", 0.15}}},
               {"lines_fit", fit_json(line_fit)},
               {"ratio_fit", fit_json(ratio_fit)},
               {"ratio_eps", 0.0},
               {"min_lines_per_point_scaled", min_scaled},
               {"max_frostman_constant", max_frostman},
               {"checks", checks}};
  return {summary, table.str(), all_true(checks)};
}

// ---------------------------------------------------------------------------

ExperimentResult projection_lp(const ExperimentConfig& cfg, Json p) {
  const std::string measure = param(p, "measure", std::string("disc"));
  const double pp = param(p, "p", 2.0);
  if (measure == "disc") {
    const double h = param(p, "h", 1.0 / 64.0);
    const auto planes = param(p, "planes", std::size_t{360});
    const std::string sampling = param(p, "sampling", std::string("random"));
    require(sampling == "random" || sampling == "equispaced", "sampling is random or equispaced");
    const auto mode = sampling == "random" ? PlaneSampling::Random : PlaneSampling::Equispaced;
    const auto mu = make_uniform_ball(2, 1.0, h);
    const auto coarse = make_uniform_ball(2, 1.0, 2.0 * h);
    const Estimate est = projection_lp_integral(mu, 1, pp, planes, cfg.seed, mode);
    const Estimate est2 = projection_lp_integral(coarse, 1, pp, planes, cfg.seed, mode);
    // The disc is rotation invariant, so the sampling error is tiny and the
    // lattice bias dominates; estimate it from the coarser lattice.
    const double lattice = std::abs(est.value - est2.value);
    const double sigma = std::hypot(est.std_error, lattice);
    const double exact = disc_projection_lp(pp);
    Table table({"h", "value", "std_error", "exact"});
    table.add({num(2.0 * h), num(est2.value), num(est2.std_error), num(exact)});
    table.add({num(h), num(est.value), num(est.std_error), num(exact)});
    Json checks{{"within_3_sigma", std::abs(est.value - exact) <= 3.0 * sigma}};
    Json summary{{"experiment", cfg.id},
                 {"seed", cfg.seed},
                 {"params", p},
                 {"expected", {{"value", exact}}},
                 {"value", est.value},
                 {"std_error", est.std_error},
                 {"lattice_error", lattice},
                 {"sigma", sigma},
                 {"checks", checks}};
    return {summary, table.str(), all_true(checks)};
  }
  require(measure == "cantor-ball", "measure is disc or cantor-ball");
  const double s = param(p, "s", 1.5);
  const int k_min = param(p, "k_min", 3);
  const int k_max = param(p, "k_max", 6);
  const auto lines_per_scale = param(p, "lines", std::size_t{16});
  require(k_max - k_min >= 2, "need at least three scales");
  const int d = 2, n = 1;
  const double expected = n * (d - n) + (d - s) * (1.0 - pp);
  const double p_star = (2.0 * d - n - s) / (d - s);
  Table table({"k", "delta", "base", "cantor_dimension", "restricted_mean", "contribution"});
  std::vector<double> deltas, values;
  for (int k = k_min; k <= k_max; ++k) {
    const auto cb = gen_cantor_times_ball(d, s, k);
    const double a = std::asin(cb.delta);
    const auto lines = lines_in_angle_range(-a, a, lines_per_scale);
    const Estimate est = projection_lp_integral(cb.measure, lines, pp);
    const double weight = 2.0 * a / std::numbers::pi;
    deltas.push_back(cb.delta);
    values.push_back(weight * est.value);
    table.add({num(k), num(cb.delta), num(cb.base), num(cb.cantor_dimension), num(est.value),
               num(weight * est.value)});
  }
  const SlopeFit fit = fit_loglog_slope(deltas, values);
  Json checks{{"slope", std::abs(fit.slope - expected) <= 0.15},
              {"side_of_threshold", pp < p_star ? fit.slope >= -0.1 : fit.slope <= -0.35}};
  Json summary{{"experiment", cfg.id},
               {"seed", cfg.seed},
               {"params", p},
               {"expected", {{"slope", expected}, {"p_threshold", p_star}}},
               {"tolerance", {{"slope", 0.15}}},
               {"fit", fit_json(fit)},
               {"checks", checks}};
  return {summary, table.str(), all_true(checks)};
}

// ---------------------------------------------------------------------------

ExperimentResult radial_identity(const ExperimentConfig& cfg, Json p) {
  const std::string measure = param(p, "measure", std::string("cloud"));
  const double q = param(p, "q", 1.0);
  const double delta = param(p, "delta", 1.0 / 16.0);
  const int halvings = param(p, "halvings", 3);
  const auto samples = param(p, "samples", std::size_t{10000});
  const auto planes = param(p, "planes", std::size_t{360});
  const auto points = param(p, "points", std::size_t{50});
  const double C = param(p, "C", 1.0);
  require(measure == "cloud" || measure == "disc", "measure is cloud or disc");
  require(halvings >= 0, "halvings must be non-negative");
  const PointCloud cloud =
      measure == "cloud" ? random_unit_square_cloud(points, derive_seed(cfg.seed, kCloudStream)) : PointCloud();

  Table table({"level", "h", "lhs", "lhs_std_error", "rhs", "rhs_std_error", "relative_error", "pointwise_gap",
               "pointwise_std_error"});
  std::vector<double> rel, gaps;
  for (int level = 0; level <= halvings; ++level) {
    const double h = C * delta / 4.0 / std::ldexp(1.0, level);
    GridMeasure mu = measure == "cloud" ? mollify_point_cloud(cloud, MollifierSpec{C, delta}, h)
                                        : make_uniform_ball(2, 1.0, h);
    mu.normalize();
    const auto r = radial_identity_check(mu, 1, q, samples, cfg.seed, planes);
    rel.push_back(r.relative_error);
    gaps.push_back(r.pointwise_gap);
    table.add({num(level), num(h), num(r.lhs), num(r.lhs_std_error), num(r.rhs), num(r.rhs_std_error),
               num(r.relative_error), num(r.pointwise_gap), num(r.pointwise_std_error)});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] < gaps[i - 1];
  Json checks{{"relative_error", *std::max_element(rel.begin(), rel.end()) <= 0.02},
              {"gap_decreasing", monotone}};
  Json summary{{"experiment", cfg.id},
               {"seed", cfg.seed},
               {"params", p},
               {"expected", {{"relative_error", 0.0}}},
               {"tolerance", {{"relative_error", 0.02}}},
               {"max_relative_error", *std::max_element(rel.begin(), rel.end())},
               {"pointwise_gaps", gaps},
               {"checks", checks}};
  return {summary, table.str(), all_true(checks)};
}

// ---------------------------------------------------------------------------

ExperimentResult mattila(const ExperimentConfig& cfg, Json p) {
  const auto rotations = param(p, "rotations", std::size_t{360});
  const double h = param(p, "h", 0.01);
  const double invariant_tol = param(p, "invariant_tolerance", 0.01);
  const double other_tol = param(p, "other_tolerance", 0.02);
  const double expected = 1.0 / std::numbers::pi;
  Table table({"function", "invariant", "lhs", "rhs", "ratio", "relative_error"});
  Json checks = Json::object();
  for (const auto& tf : rotation_test_functions()) {
    const auto r = mattila_identity_check(tf.f, 2, 1, rotations, cfg.seed, tf.support_radius, h);
    const double err = std::abs(r.ratio - expected) / expected;
    table.add({tf.name, tf.invariant ? "1" : "0", num(r.lhs), num(r.rhs), num(r.ratio), num(err)});
    checks[tf.name] = err <= (tf.invariant ? invariant_tol : other_tol);
  }
  Json summary{{"experiment", cfg.id},
               {"seed", cfg.seed},
               {"params", p},
               {"expected", {{"c_2_1", expected}}},
               {"checks", checks}};
  return {summary, table.str(), all_true(checks)};
}

// ---------------------------------------------------------------------------

ExperimentResult ball_scaling(const ExperimentConfig& cfg, Json p) {
  const std::string measure = param(p, "measure", std::string("lebesgue"));
  const double pp = param(p, "p", 2.0);
  GridMeasure mu;
  double s = 0.0, tol = 0.0;
  std::vector<double> deltas;
  if (measure == "lebesgue") {
    const double h = param(p, "h", 1.0 / 1024.0);
    const std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0};
    mu = make_uniform_box(lo, hi, h);
    s = 2.0;
    tol = 0.1;
    for (int j = 5; j <= 8; ++j) deltas.push_back(std::ldexp(1.0, -j));
  } else {
    require(measure == "cantor", "measure is lebesgue or cantor");
    const int level = param(p, "level", 5);
    const auto digits = param(p, "digits", std::vector<int>{0, 1, 3});
    const auto cs = gen_product_cantor(CantorSpec{2, 4, digits, level});
    mu = cs.measure;
    s = cs.dimension;
    tol = 0.15;
    for (int j = 1; j < level; ++j) deltas.push_back(std::pow(4.0, -j));
  }
  const auto scaling = ball_integral_scaling(mu, pp, s, deltas);
  Table table({"delta", "integral"});
  for (std::size_t i = 0; i < scaling.deltas.size(); ++i)
    table.add({num(scaling.deltas[i]), num(scaling.integrals[i])});
  Json checks{{"slope", std::abs(scaling.fit.slope - scaling.expected_slope) <= tol}};
  Json summary{{"experiment", cfg.id},
               {"seed", cfg.seed},
               {"params", p},
               {"expected", {{"slope", scaling.expected_slope}, {"s", s}}},
               {"tolerance", {{"slope", tol}}},
               {"fit", fit_json(scaling.fit)},
               {"checks", checks}};
  return {summary, table.str(), all_true(checks)};
}

// ---------------------------------------------------------------------------

// Lines y = a x + b with (a, b) from a random dyadic t-set scaled into
// [-1/8, 1/8]^2, each carrying the points (x, a x + b) with x from its own
// random dyadic s-set in [-1, 1]. Dualising gives points (-a, b) incident to
// about delta^-s of the dual lines.
ExperimentResult duality_pipeline(const ExperimentConfig& cfg, Json p) {
  const double s = param(p, "s", 0.5);
  const double t = param(p, "t", 1.5);
  const int k_min = param(p, "k_min", 7);
  const int k_max = param(p, "k_max", 7);
  require(k_min >= 3 && k_max >= k_min, "bad k range");
  const DualityContext ctx{2, calibration::kDualityRadius};

  Table table({"k", "delta", "planes", "fibre_points", "merged", "dual_planes", "min_incident", "min_incident_scaled",
               "point_separation", "plane_separation", "max_fibre_distance", "factor3_violations"});
  double min_scaled = std::numeric_limits<double>::infinity();
  double worst_fibre = 0.0;
  std::size_t violations = 0;
  for (int k = k_min; k <= k_max; ++k) {
    const double delta = std::ldexp(1.0, -k);
    const auto coeffs = gen_random_dyadic_set(2, t, k - 2, derive_seed(cfg.seed, kPipelineStream, k));
    PlaneFamily family;
    std::vector<PointCloud> fibres;
    std::size_t fibre_points = 0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const double a = (coeffs.point(j)[0] - 0.5) / 4.0, b = (coeffs.point(j)[1] - 0.5) / 4.0;
      const std::array<double, 2> ab{a, b};
      family.planes.push_back(dual_plane(std::span<const double>(ab)));
      const auto xs = gen_random_dyadic_set(1, s, k, derive_seed(cfg.seed, kFibreStream, j * 64 + k));
      std::vector<double> coords;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = 2.0 * xs.point(i)[0] - 1.0;
        coords.push_back(x);
        coords.push_back(a * x + b);
      }
      fibre_points += xs.size();
      fibres.emplace_back(2, std::move(coords));
    }
    family.separation = 0.0;
    const auto dual = dualize_furstenberg_config(family, fibres, ctx, delta);
    const auto tally = count_incidences(dual.points, dual.planes, 6.0 * delta);
    const std::size_t min_incident = *std::min_element(tally.per_point.begin(), tally.per_point.end());
    const double scaled = static_cast<double>(min_incident) * std::pow(delta, s);
    min_scaled = std::min(min_scaled, scaled);
    worst_fibre = std::max(worst_fibre, dual.max_fibre_distance / delta);

    // Factor-3 comparison on every listed (fibre point, plane) pair.
    std::vector<double> xs_coords;
    PlaneFamily zipped;
    for (std::size_t j = 0; j < fibres.size(); ++j)
      for (std::size_t i = 0; i < fibres[j].size(); ++i) {
        auto x = fibres[j].point(i);
        xs_coords.insert(xs_coords.end(), x.begin(), x.end());
        zipped.planes.push_back(family.planes[j]);
      }
    const PointCloud xs_cloud(2, std::move(xs_coords));
    const auto report = verify_duality_relations(xs_cloud, zipped, ctx, true);
    violations += report.factor3_violations + report.incidence_mismatches;

    table.add({num(k), num(delta), num(family.size()), num(fibre_points), num(dual.merged_points),
               num(dual.planes.size()), num(min_incident), num(scaled), num(dual.point_separation),
               num(dual.plane_separation), num(dual.max_fibre_distance), num(report.factor3_violations)});
  }
  Json checks{{"incidence_count", min_scaled >= calibration::kPipelineIncidences},
              {"fibre_distance", worst_fibre <= 6.0},
              {"duality_relations", violations == 0}};
  Json summary{{"experiment", cfg.id},
               {"seed", cfg.seed},
               {"params", p},
               {"expected", {{"incidences_exponent", -s}, {"fibre_distance_over_delta", 6.0}}},
               {"min_incident_scaled", min_scaled},
               {"max_fibre_distance_over_delta", worst_fibre},
               {"checks", checks}};
  return {summary, table.str(), all_true(checks)};
}

double gaussian(std::span<const double> x) { return std::exp(-(x[0] * x[0] + x[1] * x[1])); }

double annulus(std::span<const double> x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  return r2 >= 1.0 && r2 <= 4.0 ? 1.0 : 0.0;
}

double quartic_bump(std::span<const double> x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  return r2 < 1.0 ? (1.0 - r2) * (1.0 - r2) : 0.0;
}

double skew_bump(std::span<const double> x) {
  const double a = x[0] - 0.3, b = x[1] + 0.2;
  return std::exp(-(2.0 * a * a + 0.5 * b * b + 0.6 * a * b));
}

}  // namespace

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"sharpness-incidence", "projection-lp", "radial-identity",
                                            "mattila",             "ball-scaling",  "duality-pipeline"};
  return ids;
}

const std::vector<TestFunction>& rotation_test_functions() {
  static const std::vector<TestFunction> fns{{"gaussian", true, 6.0, &gaussian},
                                             {"annulus", true, 2.5, &annulus},
                                             {"quartic_bump", true, 1.5, &quartic_bump},
                                             {"skew_bump", false, 9.0, &skew_bump}};
  return fns;
}

double disc_projection_lp(double p) {
  // int_{-1}^{1} ((2/pi) sqrt(1 - u^2))^p du = (2/pi)^p B(1/2, p/2 + 1).
  return std::pow(2.0 / std::numbers::pi, p) * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * p + 1.0) /
         std::tgamma(0.5 * p + 1.5);
}

PointCloud random_unit_square_cloud(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> coords(2 * count);
  for (double& c : coords) c = rng.uniform();
  return PointCloud(2, std::move(coords));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  require(config.params.is_object(), "experiment params must be a JSON object");
  Json p = config.params;
  ExperimentResult res;
  if (config.id == "sharpness-incidence") {
    res = sharpness_incidence(config, p);
  } else if (config.id == "projection-lp") {
    res = projection_lp(config, p);
  } else if (config.id == "radial-identity") {
    res = radial_identity(config, p);
  } else if (config.id == "mattila") {
    res = mattila(config, p);
  } else if (config.id == "ball-scaling") {
    res = ball_scaling(config, p);
  } else if (config.id == "duality-pipeline") {
    res = duality_pipeline(config, p);
  } else {
    throw InputError("unknown experiment '" + config.id + "'");
  }
  res.summary["pass"] = res.passed;
  if (!config.out_dir.empty()) {
    write_text(config.out_dir / (config.id + ".csv"), res.csv);
    write_text(config.out_dir / (config.id + ".json"), res.summary.dump(2) + "\n");
  }
  return res;
}

}  // namespace fraclab
