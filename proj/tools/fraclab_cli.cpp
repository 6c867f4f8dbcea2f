// fraclab command line: generators, validators, counters and experiments.
// Exit status: 0 when every declared tolerance passes, 1 when a check fails,
// 2 on bad input.

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fraclab/calibration.hpp"
#include "fraclab/delta_sets.hpp"
#include "fraclab/duality.hpp"
#include "fraclab/error.hpp"
#include "fraclab/experiments.hpp"
#include "fraclab/incidence.hpp"
#include "fraclab/io.hpp"
#include "fraclab/projections.hpp"

namespace fs = std::filesystem;
using namespace fraclab;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  CLI::Option* seed_option = nullptr;
  std::string out;
};

// Writes `text` to the --out target, or to stdout when none was given.
void emit(const Globals& g, const std::string& text, const std::string& default_name = "") {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  fs::path target = g.out;
  if (!default_name.empty() && (fs::is_directory(target) || g.out.back() == '/')) target /= default_name;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  write_text(target, text);
}

fs::path out_dir(const Globals& g) {
  require(!g.out.empty(), "--out directory is required");
  fs::create_directories(g.out);
  return g.out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json histogram(const std::vector<std::size_t>& counts) {
  std::map<std::size_t, std::size_t> h;
  for (auto c : counts) ++h[c];
  Json out = Json::array();
  for (auto [value, n] : h) out.push_back(Json::array({value, n}));
  return out;
}

Json frostman_json(const FrostmanReport& r) {
  return Json{{"exponent", r.exponent},
              {"best_constant", r.best_constant},
              {"worst_center", r.worst_center},
              {"worst_radius", r.worst_radius},
              {"scales_tested", r.scales_tested},
              {"total_covering", r.total_covering}};
}

GridMeasure load_measure(const std::string& file, bool disc, double h) {
  if (disc) return make_uniform_ball(2, 1.0, h);
  require(!file.empty(), "give --measure FILE or --disc");
  return read_grid_measure(file);
}

// --param key=value: value parsed as JSON, or kept as a string.
Json parse_param_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;
  }
}

// ---------------------------------------------------------------------------

void add_generate(CLI::App& app, Globals& g, int& status) {
  auto* gen = app.add_subcommand("generate", "build point sets, line families and measures");
  gen->require_subcommand(1);

  auto* sharp = gen->add_subcommand("sharpness", "tube/net construction with |L(p)| ~ delta^-s");
  static SharpnessParams sp;
  sharp->add_option("--s", sp.s, "direction exponent")->capture_default_str();
  sharp->add_option("--t", sp.t, "point set exponent")->capture_default_str();
  sharp->add_option("--k", sp.k, "delta = 2^-k")->capture_default_str();
  sharp->add_option("--c", sp.net_constant, "net constant")->capture_default_str();
  sharp->callback([&] {
    const auto inst = gen_sharpness_construction(sp);
    const fs::path dir = out_dir(g);
    write_points_csv(dir / "points.csv", inst.points);
    write_lines_csv(dir / "lines.csv", inst.lines);
    std::ostringstream tubes;
    tubes << "x0,x1,y0,y1\n";
    for (const auto& t : inst.tubes)
      tubes << format_double(t.x0) << ',' << format_double(t.x1) << ',' << format_double(t.y0) << ','
            << format_double(t.y1) << '\n';
    write_text(dir / "tubes.csv", tubes.str());
    const Json meta{{"s", sp.s},
                    {"t", sp.t},
                    {"k", sp.k},
                    {"c", sp.net_constant},
                    {"delta", sp.delta()},
                    {"eta", sp.eta()},
                    {"dimension_bound", 2.0 * sp.s + sp.eta()},
                    {"points", inst.points.size()},
                    {"lines", inst.lines.size()},
                    {"tubes", inst.tubes.size()},
                    {"directions", inst.direction_angles.size()},
                    {"rows_per_tube", inst.rows_per_tube},
                    {"columns_per_tube", inst.columns_per_tube}};
    write_text(dir / "meta.json", dump(meta));
    status = 0;
  });

  auto* dyadic = gen->add_subcommand("dyadic", "random dyadic (delta, t)-set");
  static int dd = 2, dk = 6;
  static double dt = 1.5;
  dyadic->add_option("--d", dd)->capture_default_str();
  dyadic->add_option("--t", dt)->capture_default_str();
  dyadic->add_option("--k", dk)->capture_default_str();
  dyadic->callback([&] {
    const auto pts = gen_random_dyadic_set(dd, dt, dk, g.seed);
    std::ostringstream os;
    os << "x0";
    for (int a = 1; a < pts.dim(); ++a) os << ",x" << a;
    os << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto p = pts.point(i);
      for (std::size_t a = 0; a < p.size(); ++a) os << (a ? "," : "") << format_double(p[a]);
      os << '\n';
    }
    emit(g, os.str(), "points.csv");
    status = 0;
  });

  auto* lines = gen->add_subcommand("lines", "random separated planar lines meeting [0,1]^2");
  static std::size_t lcount = 100;
  static double lsep = 1.0 / 64.0;
  static std::string lthrough;
  lines->add_option("--count", lcount)->capture_default_str();
  lines->add_option("--separation", lsep)->capture_default_str();
  lines->add_option("--through", lthrough, "points file; lines pass through pairs of its points");
  lines->callback([&] {
    std::optional<PointCloud> cloud;
    if (!lthrough.empty()) cloud = read_points_csv(lthrough);
    const auto fam = gen_random_line_family(lcount, lsep, g.seed, cloud ? &*cloud : nullptr);
    const fs::path target = g.out.empty() ? fs::path("lines.csv") : fs::path(g.out);
    if (target.extension() == ".json")
      write_planes_json(target, fam);
    else
      write_lines_csv(target, fam);
    status = 0;
  });

  auto* measure = gen->add_subcommand("measure", "lattice measure file");
  static std::string kind = "disc", mpoints;
  static double mh = 1.0 / 64.0, mdelta = 1.0 / 16.0, mC = 1.0, ms = 1.5;
  static int mlevel = 4;
  static std::vector<int> mdigits{0, 1, 3};
  measure->add_option("--kind", kind, "disc | square | cantor | cantor-ball | mollified")->capture_default_str();
  measure->add_option("--h", mh, "lattice spacing")->capture_default_str();
  measure->add_option("--level", mlevel, "Cantor level")->capture_default_str();
  measure->add_option("--digits", mdigits, "base-4 Cantor digits")->capture_default_str();
  measure->add_option("--s", ms, "cantor-ball dimension")->capture_default_str();
  measure->add_option("--points", mpoints, "cloud for mollified");
  measure->add_option("--delta", mdelta, "mollifier scale")->capture_default_str();
  measure->add_option("--C", mC, "mollifier constant")->capture_default_str();
  measure->callback([&] {
    GridMeasure mu;
    if (kind == "disc") {
      mu = make_uniform_ball(2, 1.0, mh);
    } else if (kind == "square") {
      const std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0};
      mu = make_uniform_box(lo, hi, mh);
    } else if (kind == "cantor") {
      mu = gen_product_cantor(CantorSpec{2, 4, mdigits, mlevel}).measure;
    } else if (kind == "cantor-ball") {
      mu = gen_cantor_times_ball(2, ms, mlevel).measure;
    } else if (kind == "mollified") {
      require(!mpoints.empty(), "--points is required for mollified");
      mu = mollify_point_cloud(read_points_csv(mpoints), MollifierSpec{mC, mdelta}, mh);
      mu.normalize();
    } else {
      throw InputError("unknown measure kind '" + kind + "'");
    }
    require(!g.out.empty(), "--out file is required");
    write_grid_measure(g.out, mu);
    status = 0;
  });
}

void add_validate(CLI::App& app, Globals& g, int& status) {
  auto* v = app.add_subcommand("validate", "Frostman (delta, s)-set report");
  static std::string points;
  static double delta = 0.0, s = 1.0;
  static std::optional<double> max_constant;
  v->add_option("--points", points)->required();
  v->add_option("--delta", delta)->required();
  v->add_option("--s", s)->required();
  v->add_option("--max-constant", max_constant, "fail when best_constant exceeds this");
  v->callback([&] {
    const auto pts = read_points_csv(points);
    const auto rep = validate_frostman_set(pts, delta, s);
    Json j = frostman_json(rep);
    bool pass = true;
    if (max_constant) {
      pass = rep.best_constant <= *max_constant;
      j["max_constant"] = *max_constant;
    }
    j["pass"] = pass;
    emit(g, dump(j), "frostman.json");
    status = pass ? 0 : 1;
  });
}

void add_incidences(CLI::App& app, Globals& g, int& status) {
  auto* inc = app.add_subcommand("incidences", "count (point, plane) pairs at distance <= r");
  static std::string points, lines;
  static double r = 0.0, eps = 0.1;
  static std::optional<double> delta, t;
  static bool brute = false;
  inc->add_option("--points", points)->required();
  inc->add_option("--lines,--planes", lines, "csv (planar lines) or json")->required();
  inc->add_option("--r", r)->required();
  inc->add_option("--delta", delta, "scale for the bound (default r)");
  inc->add_option("--t", t, "evaluate the bound with this Frostman exponent");
  inc->add_option("--eps", eps)->capture_default_str();
  inc->add_flag("--brute", brute, "use the quadratic reference counter");
  inc->callback([&] {
    const auto pts = read_points_csv(points);
    const auto fam = read_planes_any(lines);
    const auto tally = brute ? count_incidences_brute(pts, fam, r) : count_incidences(pts, fam, r);
    const double dl = delta.value_or(r);
    Json j{{"r", r},
           {"points", tally.num_points},
           {"planes", tally.num_planes},
           {"pairs", tally.pair_count()},
           {"histogram_N_V", histogram(tally.per_plane)},
           {"histogram_M_p", histogram(tally.per_point)}};
    if (const auto ph = pigeonhole_two_stage(tally)) {
      j["pigeonhole"] = {{"N", ph->planes.N},
                         {"V1", ph->planes.members.size()},
                         {"M", ph->points.N},
                         {"P1", ph->points.members.size()},
                         {"pairs_in_V1", ph->pairs_in_v1}};
    }
    if (!fam.planes.empty() && fam.planes.front().ambient_dim() == 2) {
      const auto ds = direction_separation(tally, fam, dl);
      j["direction_separation"] = {{"gap", dl},
                                   {"min_ratio", ds.min_ratio},
                                   {"mean_ratio", ds.mean_ratio},
                                   {"points_with_planes", ds.points_with_planes}};
    }
    bool pass = true;
    if (t) {
      const int d = pts.dim();
      const int n = fam.planes.empty() ? d - 1 : fam.planes.front().plane_dim();
      const auto frost = validate_frostman_set(pts, dl, *t);
      const double rhs = incidence_bound_rhs(static_cast<double>(pts.size()), static_cast<double>(fam.size()),
                                             dl, d, n, *t, frost.best_constant, eps);
      const double ratio = static_cast<double>(tally.pair_count()) / rhs;
      pass = ratio <= calibration::kIncidenceConstant;
      j["bound"] = {{"delta", dl},
                    {"t", *t},
                    {"eps", eps},
                    {"frostman_constant", frost.best_constant},
                    {"rhs", rhs},
                    {"ratio", ratio},
                    {"constant", calibration::kIncidenceConstant}};
    }
    j["pass"] = pass;
    emit(g, dump(j), "tally.json");
    status = pass ? 0 : 1;
  });
}

void add_project(CLI::App& app, Globals& g, int& status) {
  auto* pr = app.add_subcommand("project", "L^p norms of projections over sampled planes");
  static std::string measure, sampling = "random";
  static bool disc = false;
  static double h = 1.0 / 64.0, p = 2.0, q = 0.0;
  static int n = 1;
  static std::size_t planes = 360;
  static std::optional<double> expect;
  static double sigmas = 3.0;
  pr->add_option("--measure", measure, "lattice measure file");
  pr->add_flag("--disc", disc, "uniform unit disc instead of a file");
  pr->add_option("--h", h, "disc lattice spacing")->capture_default_str();
  pr->add_option("--n", n)->capture_default_str();
  pr->add_option("--p", p)->capture_default_str();
  pr->add_option("--q", q, "power of the norm (default p)");
  pr->add_option("--planes", planes)->capture_default_str();
  pr->add_option("--sampling", sampling, "random | equispaced")->capture_default_str();
  pr->add_option("--expect", expect, "reference value for the mean");
  pr->add_option("--sigmas", sigmas)->capture_default_str();
  pr->callback([&] {
    const GridMeasure mu = load_measure(measure, disc, h);
    std::vector<AffinePlane> list;
    if (sampling == "equispaced") {
      require(mu.dim() == 2 && n == 1, "equispaced sampling needs d = 2, n = 1");
      list = lines_in_angle_range(0.0, std::numbers::pi * (1.0 - 1.0 / static_cast<double>(planes)), planes);
    } else {
      require(sampling == "random", "sampling is random or equispaced");
      list = sample_grassmannian(mu.dim(), n, planes, g.seed);
    }
    const Estimate est = projection_lp_integral(mu, list, p, q);
    std::ostringstream os;
    os << "plane";
    for (int a = 0; a < mu.dim() * n; ++a) os << ",b" << a;
    os << ",value\n";
    for (std::size_t i = 0; i < list.size(); ++i) {
      os << i;
      const Mat& b = list[i].basis();
      for (Eigen::Index c = 0; c < b.cols(); ++c)
        for (Eigen::Index a = 0; a < b.rows(); ++a) os << ',' << format_double(b(a, c));
      os << ',' << format_double(est.samples[i]) << '\n';
    }
    os << "mean";
    for (int a = 0; a < mu.dim() * n; ++a) os << ',';
    os << ',' << format_double(est.value) << '\n';
    os << "std_error";
    for (int a = 0; a < mu.dim() * n; ++a) os << ',';
    os << ',' << format_double(est.std_error) << '\n';
    // The disc lattice is biased by about as much as the sampling error, so
    // its error bar adds the change from a grid twice as coarse.
    double sigma = est.std_error;
    if (disc) {
      sigma = std::hypot(sigma, est.value - projection_lp_integral(make_uniform_ball(2, 1.0, 2 * h), list, p, q).value);
      os << "sigma";
      for (int a = 0; a < mu.dim() * n; ++a) os << ',';
      os << ',' << format_double(sigma) << '\n';
    }
    emit(g, os.str(), "projections.csv");
    bool pass = true;
    if (expect) pass = std::abs(est.value - *expect) <= sigmas * sigma;
    status = pass ? 0 : 1;
  });
}

void add_identity(CLI::App& app, Globals& g, int& status) {
  auto* id = app.add_subcommand("identity", "integral identities");
  id->require_subcommand(1);

  auto* radial = id->add_subcommand("radial", "slices through mu-typical points vs orthogonal projections");
  static std::string measure, points;
  static bool disc = false;
  static double h = 1.0 / 64.0, q = 1.0, delta = 1.0 / 16.0, C = 1.0, tol = 0.02;
  static int n = 1;
  static std::size_t samples = 10000, planes = 360;
  radial->add_option("--measure", measure, "lattice measure file");
  radial->add_flag("--disc", disc, "uniform unit disc");
  radial->add_option("--points", points, "point cloud to mollify");
  radial->add_option("--delta", delta, "mollifier scale")->capture_default_str();
  radial->add_option("--C", C, "mollifier constant")->capture_default_str();
  radial->add_option("--h", h, "lattice spacing for --disc and --points")->capture_default_str();
  radial->add_option("--n", n)->capture_default_str();
  radial->add_option("--q", q)->capture_default_str();
  radial->add_option("--samples", samples)->capture_default_str();
  radial->add_option("--planes", planes)->capture_default_str();
  radial->add_option("--tolerance", tol)->capture_default_str();
  radial->callback([&] {
    GridMeasure mu;
    if (!points.empty()) {
      mu = mollify_point_cloud(read_points_csv(points), MollifierSpec{C, delta}, h);
    } else {
      mu = load_measure(measure, disc, h);
    }
    mu.normalize();
    const auto r = radial_identity_check(mu, n, q, samples, g.seed, planes);
    const bool pass = r.relative_error <= tol;
    const Json j{{"q", q},
                 {"n", n},
                 {"lhs", r.lhs},
                 {"lhs_std_error", r.lhs_std_error},
                 {"rhs", r.rhs},
                 {"rhs_std_error", r.rhs_std_error},
                 {"relative_error", r.relative_error},
                 {"pointwise_gap", r.pointwise_gap},
                 {"pointwise_std_error", r.pointwise_std_error},
                 {"samples", r.samples},
                 {"planes", r.planes},
                 {"tolerance", tol},
                 {"pass", pass}};
    emit(g, dump(j), "radial.json");
    status = pass ? 0 : 1;
  });

  auto* mat = id->add_subcommand("mattila", "rotation average of |x| f(gx) on lines vs the plane integral");
  static std::string fn = "all";
  static std::size_t rotations = 360;
  static double mh = 0.01, inv_tol = 0.01, other_tol = 0.02;
  mat->add_option("--function", fn, "gaussian | annulus | quartic_bump | skew_bump | all")->capture_default_str();
  mat->add_option("--rotations", rotations)->capture_default_str();
  mat->add_option("--h", mh)->capture_default_str();
  mat->add_option("--invariant-tolerance", inv_tol)->capture_default_str();
  mat->add_option("--other-tolerance", other_tol)->capture_default_str();
  mat->callback([&] {
    const double expected = 1.0 / std::numbers::pi;
    Json rows = Json::array();
    bool pass = true, found = false;
    for (const auto& tf : rotation_test_functions()) {
      if (fn != "all" && fn != tf.name) continue;
      found = true;
      const auto r = mattila_identity_check(tf.f, 2, 1, rotations, g.seed, tf.support_radius, mh);
      const double err = std::abs(r.ratio - expected) / expected;
      const bool ok = err <= (tf.invariant ? inv_tol : other_tol);
      pass = pass && ok;
      rows.push_back({{"function", tf.name},
                      {"invariant", tf.invariant},
                      {"lhs", r.lhs},
                      {"rhs", r.rhs},
                      {"ratio", r.ratio},
                      {"relative_error", err},
                      {"pass", ok}});
    }
    require(found, "unknown test function '" + fn + "'");
    emit(g, dump(Json{{"expected", expected}, {"results", rows}, {"pass", pass}}), "mattila.json");
    status = pass ? 0 : 1;
  });
}

void add_duality(CLI::App& app, Globals& g, int& status) {
  auto* du = app.add_subcommand("duality", "point-hyperplane duality");
  du->require_subcommand(1);

  auto* check = du->add_subcommand("check", "incidence equivalence and factor-3 distance comparison");
  static std::string points, planes;
  static bool zip = false;
  static double tol = 1e-10;
  check->add_option("--points", points)->required();
  check->add_option("--planes", planes)->required();
  check->add_flag("--zip", zip, "pair point i with plane i instead of all pairs");
  check->add_option("--tol", tol)->capture_default_str();
  check->callback([&] {
    const auto pts = read_points_csv(points);
    const auto fam = read_planes_any(planes);
    const DualityContext ctx{pts.dim(), calibration::kDualityRadius};
    const auto r = verify_duality_relations(pts, fam, ctx, zip, tol);
    const bool pass = r.incidence_mismatches == 0 && r.factor3_violations == 0;
    const Json j{{"pairs", r.pairs},
                 {"incidence_mismatches", r.incidence_mismatches},
                 {"factor3_violations", r.factor3_violations},
                 {"max_primal_over_dual", r.max_primal_over_dual},
                 {"max_dual_over_primal", r.max_dual_over_primal},
                 {"max_roundtrip_error", r.max_roundtrip_error},
                 {"bilipschitz_forward", {r.bilip_forward_lo, r.bilip_forward_hi}},
                 {"bilipschitz_backward", {r.bilip_backward_lo, r.bilip_backward_hi}},
                 {"r_d", ctx.r_d},
                 {"pass", pass}};
    emit(g, dump(j), "duality.json");
    status = pass ? 0 : 1;
  });

  auto* map = du->add_subcommand("map", "apply D to points or D* to hyperplanes");
  static std::string direction = "forward", in, out;
  map->add_option("--direction", direction, "forward | backward")->capture_default_str();
  map->add_option("--in", in)->required();
  map->add_option("--out", out, "output file (.csv or .json)");
  map->callback([&] {
    const std::string target = out.empty() ? g.out : out;
    require(!target.empty(), "--out is required");
    if (direction == "forward") {
      const auto pts = read_points_csv(in);
      PlaneFamily fam;
      for (std::size_t i = 0; i < pts.size(); ++i) fam.planes.push_back(dual_plane(pts.point(i)));
      if (fs::path(target).extension() == ".csv")
        write_lines_csv(target, fam);
      else
        write_planes_json(target, fam);
    } else {
      require(direction == "backward", "direction is forward or backward");
      const auto fam = read_planes_any(in);
      std::vector<Vec> pts;
      for (const auto& v : fam.planes) pts.push_back(dual_point(v));
      write_points_csv(target, PointCloud::from_vectors(pts));
    }
    status = 0;
  });
}

void add_experiment(CLI::App& app, Globals& g, int& status) {
  auto* ex = app.add_subcommand("experiment", "run a named experiment (or all) and write CSV + JSON");
  static std::string id, config;
  static std::vector<std::string> params;
  ex->add_option("id", id, "experiment id or 'all'; may also come from the config file");
  ex->add_option("--config", config, "JSON file {experiment, seed, params}");
  ex->add_option("--param", params, "key=value (value parsed as JSON), repeatable");
  ex->callback([&] {
    Json p = Json::object();
    std::string which = id;
    std::uint64_t seed = g.seed;
    if (!config.empty()) {
      const Json c = Json::parse(read_text(config));
      require(c.is_object(), "config must be a JSON object");
      if (which.empty() && c.contains("experiment")) which = c.at("experiment").get<std::string>();
      if (c.contains("seed") && g.seed_option->count() == 0) seed = c.at("seed").get<std::uint64_t>();
      if (c.contains("params")) p = c.at("params");
    }
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      require(eq != std::string::npos && eq > 0, "--param expects key=value, got '" + kv + "'");
      p[kv.substr(0, eq)] = parse_param_value(kv.substr(eq + 1));
    }
    require(!which.empty(), "no experiment id given");
    std::vector<std::string> ids;
    if (which == "all") {
      require(p.empty(), "params cannot be combined with 'all'");
      ids = experiment_ids();
    } else {
      ids = {which};
    }
    bool pass = true;
    Json report = Json::object();
    for (const auto& e : ids) {
      const auto res = run_experiment({e, p, g.out, seed});
      pass = pass && res.passed;
      report[e] = res.summary;
    }
    if (ids.size() == 1) report = report[ids.front()];
    std::cout << dump(report);
    status = pass ? 0 : 1;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fraclab: discretised incidence and projection experiments"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.seed_option = app.add_option("--seed", g.seed, "root seed for every random draw")->capture_default_str();
  app.add_option_function<int>(
      "--threads", [](int n) { if (n > 0) omp_set_num_threads(n); },
      "OpenMP threads (default: runtime default)");
  app.add_option("--out", g.out, "output file or directory");

  int status = 0;
  add_generate(app, g, status);
  add_validate(app, g, status);
  add_incidences(app, g, status);
  add_project(app, g, status);
  add_identity(app, g, status);
  add_duality(app, g, status);
  add_experiment(app, g, status);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return status;
}
