#include <cmath>
#include <random>
#include <vector>

#include <boost/rational.hpp>

#include "doctest.h"
#include "fraclab/calibration.hpp"
#include "fraclab/duality.hpp"
#include "fraclab/error.hpp"

using namespace fraclab;

namespace {

using Q = boost::rational<long long>;

// Line y = a x + b against point (x1, x2), both distances written out by hand.
long double primal_gap(long double x1, long double x2, long double a, long double b) {
  return std::fabs(x2 - a * x1 - b) / std::sqrt(1 + a * a);
}
long double dual_gap(long double x1, long double x2, long double a, long double b) {
  // D*(V) = (-a, b) against the line y = x1 t + x2
  return std::fabs(b - x1 * (-a) - x2) / std::sqrt(1 + x1 * x1);
}

Vec random_in_ball(std::mt19937_64& gen, int d, double radius) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = nd(gen);
  return x.normalized() * radius * std::pow(u(gen), 1.0 / d);
}

// Graph slope and intercept of a non-vertical line.
std::pair<double, double> slope_intercept(const AffinePlane& l) {
  const double a = l.basis()(1, 0) / l.basis()(0, 0);
  return {a, l.offset()(1) - a * l.offset()(0)};
}

}  // namespace

TEST_SUITE("duality") {
  TEST_CASE("examples in the plane and in R^3") {
    const auto v0 = dual_plane(Vec{{0.0, 0.0}});
    CHECK(grassmann_distance(v0, horizontal_plane(2)) < 1e-15);
    const auto diag = dual_plane(Vec{{1.0, 0.0}});
    CHECK(dist_point_plane(Vec{{2.0, 2.0}}, diag) < 1e-14);
    CHECK(dist_point_plane(Vec{{-1.0, -1.0}}, diag) < 1e-14);
    const auto p3 = dual_plane(Vec{{1.0, 2.0, 3.0}});
    // z = x + 2y + 3
    CHECK(dist_point_plane(Vec{{0.0, 0.0, 3.0}}, p3) < 1e-14);
    CHECK(dist_point_plane(Vec{{1.0, 1.0, 6.0}}, p3) < 1e-14);
    CHECK(dist_point_plane(Vec{{0.0, 0.0, 0.0}}, p3) == doctest::Approx(3.0 / std::sqrt(6.0)).epsilon(1e-14));

    CHECK(dual_point(horizontal_plane(2)).norm() < 1e-15);
    const Vec q = dual_point(line_at_angle(std::atan(1.0)));
    CHECK(q(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::abs(q(1)) < 1e-14);
    CHECK_THROWS_AS(dual_point(line_at_angle(std::acos(-1.0) / 2)), DomainError);
  }

  TEST_CASE("round trip reflects the first coordinates") {
    std::mt19937_64 gen(31);
    double worst = 0.0;
    for (int d : {2, 3, 4})
      for (int i = 0; i < 10000 / 3; ++i) {
        const Vec x = random_in_ball(gen, d, 2.0);
        const Vec back = dual_point(dual_plane(x));
        Vec want = -x;
        want(d - 1) = x(d - 1);
        worst = std::max(worst, (back - want).cwiseAbs().maxCoeff());
      }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("incidence equivalence in exact arithmetic") {
    // x on V  <=>  D*(V) on D(x), with both on-cases and off-cases
    const std::vector<std::pair<std::vector<Q>, std::vector<Q>>> fixtures{
        {{Q(1, 2), Q(3, 4)}, {Q(1, 2), Q(1, 2)}},                // on: 3/4 = 1/4 + 1/2
        {{Q(1, 2), Q(3, 4)}, {Q(1, 3), Q(1, 2)}},                // off
        {{Q(-2, 3), Q(0)}, {Q(3, 2), Q(1)}},                     // on
        {{Q(1), Q(2), Q(7)}, {Q(2), Q(1), Q(3)}},                // on: 7 = 2 + 2 + 3
        {{Q(1), Q(2), Q(7)}, {Q(2), Q(1), Q(4)}},                // off
        {{Q(1, 5), Q(-1, 7), Q(2, 35)}, {Q(1), Q(2), Q(1, 7)}},  // on: 1/5 - 2/7 + 1/7
        {{Q(1, 3), Q(1, 3), Q(1, 3), Q(1)}, {Q(1), Q(1), Q(1), Q(0)}},  // on
        {{Q(1, 3), Q(1, 3), Q(1, 3), Q(1)}, {Q(1), Q(1), Q(-1), Q(0)}},  // off
    };
    int on = 0;
    for (const auto& [x, a] : fixtures) {
      const bool primal = on_graph(x, a);
      const bool dual = on_graph(dual_point_from_coefficients(a), dual_plane_coefficients(x));
      CHECK(primal == dual);
      on += primal;
      // the floating-point maps agree with the exact ones on these inputs
      std::vector<double> xd, ad;
      for (const auto& v : x) xd.push_back(boost::rational_cast<double>(v));
      for (const auto& v : a) ad.push_back(boost::rational_cast<double>(v));
      const auto plane = dual_plane(ad);
      const Vec back = dual_point(plane);
      const auto want = dual_point_from_coefficients(a);
      for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(back(static_cast<Eigen::Index>(i)) == doctest::Approx(boost::rational_cast<double>(want[i])));
      CHECK((plane.distance(xd) < 1e-12) == primal);
    }
    CHECK(on == 5);
  }

  TEST_CASE("distances agree within a factor of three") {
    const DualityContext ctx{2, calibration::kDualityRadius};
    std::mt19937_64 gen(5);
    std::vector<double> pc, pd;
    PlaneFamily planes;
    while (planes.size() < 20000) {
      const Vec x = random_in_ball(gen, 2, 2.0);
      const Vec y = random_in_ball(gen, 2, 0.4);
      const auto v = dual_plane(y);
      if (grassmann_distance(v, horizontal_plane(2)) > ctx.r_d) continue;
      pc.insert(pc.end(), {x(0), x(1)});
      planes.planes.push_back(v);
    }
    const PointCloud pts(2, pc);
    const auto rep = verify_duality_relations(pts, planes, ctx, true);
    CHECK(rep.pairs == 20000);
    CHECK(rep.factor3_violations == 0);
    CHECK(rep.incidence_mismatches == 0);
    CHECK(rep.max_primal_over_dual <= 3.0);
    CHECK(rep.max_dual_over_primal <= 3.0);
    CHECK(rep.max_roundtrip_error <= 1e-12);

    // independent closed forms
    long double worst = 0.0L;
    for (std::size_t i = 0; i < 2000; ++i) {
      const auto [a, b] = slope_intercept(planes.planes[i]);
      const long double x1 = pts.point(i)[0], x2 = pts.point(i)[1];
      const long double p = primal_gap(x1, x2, a, b), q = dual_gap(x1, x2, a, b);
      CHECK(static_cast<double>(p) == doctest::Approx(planes.planes[i].distance(pts.point(i))).epsilon(1e-9).scale(1e-12));
      if (p > 1e-12L) worst = std::max(worst, std::max(p / q, q / p));
    }
    CHECK(worst <= 3.0L);
  }

  TEST_CASE("exact incidences survive the map") {
    const DualityContext ctx{3, 0.2};
    std::mt19937_64 gen(8);
    std::vector<double> pc;
    PlaneFamily planes;
    for (int i = 0; i < 500; ++i) {
      const Vec y = random_in_ball(gen, 3, 0.1);
      const auto v = dual_plane(y);
      Vec x = random_in_ball(gen, 3, 1.0);
      x(2) = y(0) * x(0) + y(1) * x(1) + y(2);  // put x on v
      pc.insert(pc.end(), {x(0), x(1), x(2)});
      planes.planes.push_back(v);
    }
    const auto rep = verify_duality_relations(PointCloud(3, pc), planes, ctx, true, 1e-10);
    CHECK(rep.incidence_mismatches == 0);
    CHECK(rep.factor3_violations == 0);
  }

  TEST_CASE("preconditions") {
    const DualityContext ctx{2, calibration::kDualityRadius};
    PlaneFamily near;
    near.planes.push_back(horizontal_plane(2));
    CHECK_THROWS_AS(verify_duality_relations(PointCloud(2, {3.0, 0.0}), near, ctx, true), InputError);
    PlaneFamily steep;
    steep.planes.push_back(line_at_angle(1.0));
    CHECK_THROWS_AS(verify_duality_relations(PointCloud(2, {0.1, 0.0}), steep, ctx, true), InputError);
    CHECK_THROWS_AS(verify_duality_relations(PointCloud(2, {0.1, 0.0, 0.2, 0.0}), near, ctx, true), InputError);
  }

  TEST_CASE("calibrated radius") {
    const auto ctx = calibrate_duality(2, 200000, 1);
    CHECK(ctx.d == 2);
    CHECK(ctx.r_d == doctest::Approx(calibration::kDualityRadius).epsilon(0.01));
    // every plane in the ball pulls back into B(1)
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int tested = 0;
    for (int i = 0; i < 20000; ++i) {
      const auto v = line_at_angle(u(gen) * 0.4, u(gen) * 0.4);
      if (grassmann_distance(v, horizontal_plane(2)) > ctx.r_d) continue;
      ++tested;
      CHECK(dual_point(v).norm() <= 1.0);
    }
    CHECK(tested > 1000);
    const auto c3 = calibrate_duality(3, 20000, 1);
    CHECK(c3.r_d > 0.0);
    CHECK(c3.r_d < 0.5);
  }

  TEST_CASE("bilipschitz bounds grow with the radius") {
    const DualityContext ctx{2, calibration::kDualityRadius};
    std::mt19937_64 gen(12);
    std::vector<double> pc;
    double prev_hi = 0.0, prev_lo = 1e9;
    for (double radius : {0.25, 0.5, 1.0, 2.0}) {
      // each radius appends to the previous sample, so the pair set only grows
      for (int i = 0; i < 2000; ++i) {
        const Vec x = random_in_ball(gen, 2, radius);
        pc.insert(pc.end(), {x(0), x(1)});
      }
      const PointCloud pts(2, pc);
      const auto rep = verify_duality_relations(pts, PlaneFamily{}, ctx, false);
      CHECK(rep.bilip_forward_hi >= prev_hi);
      CHECK(rep.bilip_forward_lo <= prev_lo);
      CHECK(rep.bilip_forward_lo > 0.0);
      CHECK(std::isfinite(rep.bilip_forward_hi));
      prev_hi = rep.bilip_forward_hi;
      prev_lo = rep.bilip_forward_lo;
    }
  }

  TEST_CASE("dualizing a Furstenberg configuration") {
    const DualityContext ctx{2, calibration::kDualityRadius};
    const double delta = 1.0 / 64;
    PlaneFamily one;
    one.planes.push_back(horizontal_plane(2));
    std::vector<double> fc;
    for (int i = 0; i < 8; ++i) fc.insert(fc.end(), {-0.5 + i * 0.125, 0.0});
    const auto single = dualize_furstenberg_config(one, {PointCloud(2, fc)}, ctx, delta);
    CHECK(single.points.size() == 1);
    CHECK(single.planes.size() == 8);
    CHECK(single.incident[0].size() == 8);
    CHECK(single.max_fibre_distance < 1e-14);
    CHECK(single.merged_points == 0);

    // a delta-separated family of lines near V0, each with a fibre on it
    PlaneFamily fam;
    std::vector<PointCloud> fibres;
    for (int i = -4; i <= 4; ++i)
      for (int j = -4; j <= 4; ++j) {
        const double a = i * 2 * delta, b = j * 2 * delta;
        fam.planes.push_back(dual_plane(Vec{{a, b}}));
        std::vector<double> f;
        for (int k = 0; k < 5; ++k) {
          const double x = -0.8 + 0.4 * k;
          f.insert(f.end(), {x, a * x + b});
        }
        fibres.emplace_back(2, f);
      }
    fam.separation = delta;
    const auto cfg = dualize_furstenberg_config(fam, fibres, ctx, delta);
    CHECK(cfg.points.size() == fam.size());
    CHECK(cfg.point_separation >= delta / 3);
    // shared fibre points are merged within delta, so incidences hold up to 3 delta
    CHECK(cfg.merged_points > 0);
    CHECK(cfg.max_fibre_distance <= 3 * delta);
    CHECK(cfg.plane_separation > 0.0);
    CHECK_THROWS_AS(dualize_furstenberg_config(fam, {}, ctx, delta), InputError);
  }
}
