#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "fraclab/calibration.hpp"
#include "fraclab/delta_sets.hpp"
#include "fraclab/error.hpp"
#include "fraclab/projections.hpp"
#include "oracles.hpp"

using namespace fraclab;

namespace {

PointCloud segment_points(int count) {
  std::vector<double> c;
  for (int i = 0; i < count; ++i) {
    c.push_back(static_cast<double>(i) / (count - 1));
    c.push_back(0.0);
  }
  return PointCloud(2, c);
}

PointCloud grid_points(int m) {
  std::vector<double> c;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      c.push_back((i + 0.5) / m);
      c.push_back((j + 0.5) / m);
    }
  return PointCloud(2, c, 1.0 / m);
}

std::vector<oracle::P2> as_pairs(const PointCloud& p) {
  std::vector<oracle::P2> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.emplace_back(p.point(i)[0], p.point(i)[1]);
  return out;
}

}  // namespace

TEST_SUITE("delta_sets") {
  TEST_CASE("covering number examples") {
    const std::size_t n51 = covering_number(segment_points(51), 0.25);
    CHECK(n51 >= 2);
    CHECK(n51 <= 3);
    CHECK(oracle::exact_cover(as_pairs(segment_points(11)), 0.25) == 2);
    CHECK(covering_number(PointCloud(2, {0.3, 0.4}), 0.01) == 1);
    CHECK(covering_number(PointCloud(2, {0.3, 0.4}), 10.0) == 1);
    CHECK(covering_number(PointCloud(), 0.1) == 0);
    std::vector<double> far;
    for (int i = 0; i < 10; ++i) far.insert(far.end(), {i * 1.0, 0.0});
    CHECK(covering_number(PointCloud(2, far), 0.49) == 10);
  }

  TEST_CASE("covering number is bracketed by exact covers") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 4 + trial % 9;  // up to 12 points
      std::vector<double> c;
      for (int i = 0; i < 2 * n; ++i) c.push_back(u(gen));
      const PointCloud pts(2, c);
      const double rho = 0.05 + 0.3 * u(gen);
      const auto got = static_cast<int>(covering_number(pts, rho));
      CHECK(oracle::exact_cover(as_pairs(pts), 2 * rho) <= got);
      CHECK(got <= oracle::exact_cover(as_pairs(pts), rho));
    }
  }

  TEST_CASE("Frostman validation of grids and single points") {
    for (int m : {8, 16, 32}) {
      const auto rep = validate_frostman_set(grid_points(m), 1.0 / m, 2.0);
      CHECK(rep.best_constant >= 1.0);
      CHECK(rep.best_constant <= 16.0);
    }
    const auto single = validate_frostman_set(PointCloud(2, {0.5, 0.5}, 0.1), 0.1, 0.0);
    CHECK(single.best_constant == 1.0);
    CHECK_THROWS_AS(validate_frostman_set(grid_points(8), 0.5, 2.0), InputError);
  }

  TEST_CASE("a set concentrated in one ball has a large Frostman constant") {
    // 64 points packed at spacing 1/1024 plus one far point: at s = 1 the
    // r = 1/128 ball holds almost all of the mass
    std::vector<double> c;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) c.insert(c.end(), {i / 1024.0, j / 1024.0});
    c.insert(c.end(), {1.0, 1.0});
    const auto rep = validate_frostman_set(PointCloud(2, c, 1.0 / 1024), 1.0 / 1024, 1.0);
    CHECK(rep.best_constant > 50.0);
  }

  TEST_CASE("product Cantor sets") {
    const auto c1 = gen_product_cantor(CantorSpec{1, 4, {0, 3}, 3});
    CHECK(c1.points.size() == 8);
    CHECK(c1.dimension == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c1.measure.total_mass() == doctest::Approx(1.0).epsilon(1e-12));

    const auto c2 = gen_product_cantor(CantorSpec{2, 4, {0, 1, 3}, 5});
    CHECK(c2.dimension == doctest::Approx(2 * std::log(3.0) / std::log(4.0)).epsilon(1e-14));
    CHECK(c2.points.size() == 59049);  // 9^5
    const auto rep = validate_frostman_set(c2.points, std::pow(4.0, -5), 1.58);
    CHECK(rep.best_constant <= 32.0);

    CHECK_THROWS_AS(gen_product_cantor(CantorSpec{1, 4, {0, 1, 2, 3}, 2}), InputError);
    CHECK_THROWS_AS(gen_product_cantor(CantorSpec{1, 4, {0, 0}, 2}), InputError);
  }

  TEST_CASE("Cantor times ball") {
    const auto cb = gen_cantor_times_ball(2, 1.5, 4);
    CHECK(cb.measure.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(cb.cantor_dimension - 0.5) <= 0.02);
    CHECK(cb.delta == doctest::Approx(std::pow(static_cast<double>(cb.base), -4)));
    // t-Frostman at t = 3/2: the constant does not grow with the level. Radii
    // stay above the 1/32 ball-axis spacing, below which single nodes carry
    // a whole strip of mass.
    std::vector<double> ratios;
    for (int level = 2; level <= 4; ++level) {
      const auto m = gen_cantor_times_ball(2, 1.5, level);
      std::vector<double> radii;
      for (double r = 0.5; r >= 1.0 / 16; r /= 2) radii.push_back(r);
      ratios.push_back(max_ball_mass_ratio(m.measure, 1.5, radii));
    }
    MESSAGE("Cantor x ball Frostman ratios " << ratios[0] << " " << ratios[1] << " " << ratios[2]);
    CHECK(ratios[2] <= 1.25 * ratios[0]);
    CHECK(ratios[2] <= 8.0);

    CHECK_THROWS_AS(choose_cantor_digits(0.05), InputError);
    try {
      choose_cantor_digits(0.05);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("closest") != std::string::npos);
    }
    const auto [base, digits] = choose_cantor_digits(0.5);
    CHECK(std::abs(std::log(static_cast<double>(digits.size())) / std::log(static_cast<double>(base)) - 0.5) <=
          0.02);
  }

  TEST_CASE("sharpness construction counts at k = 8") {
    const SharpnessParams sp{0.5, 1.5, 8, 0.5};
    CHECK(sp.eta() == doctest::Approx(0.25));
    CHECK(sp.delta() == std::ldexp(1.0, -8));
    const auto inst = gen_sharpness_construction(sp);
    CHECK(inst.tubes.size() == 2);
    CHECK(inst.points.size() == 2 * 1024);
    // two-sided arc: |Sigma| = 2 delta^-s, the same order as delta^-s = 16
    CHECK(inst.direction_angles.size() == 32);
    CHECK(inst.lines.size() <= 4 * 1024);
    CHECK(inst.points.separation() >= sp.delta());
    std::set<double> dirs(inst.direction_angles.begin(), inst.direction_angles.end());
    CHECK(dirs.size() == inst.direction_angles.size());
  }

  TEST_CASE("degenerate sharpness parameters") {
    const auto inst = gen_sharpness_construction(SharpnessParams{0.0, 1.0, 6, 0.5});
    CHECK(inst.tubes.size() >= 1);
    CHECK(inst.direction_angles.size() >= 1);
    CHECK(!inst.lines.planes.empty());
    CHECK_THROWS_AS(gen_sharpness_construction(SharpnessParams{1.5, 1.5, 6, 0.5}), InputError);
    CHECK_THROWS_AS(gen_sharpness_construction(SharpnessParams{0.5, 1.5, 6, 0.0}), InputError);
  }

  TEST_CASE("sharpness point sets satisfy the ball lemma") {
    for (auto [s, t] : {std::pair{0.5, 1.5}, std::pair{0.25, 1.25}})
      for (int k = 6; k <= 8; ++k) {
        const SharpnessParams sp{s, t, k, 0.5};
        const auto inst = gen_sharpness_construction(sp);
        const double delta = sp.delta();
        std::vector<double> radii;
        for (int i = 0; i < 10; ++i) radii.push_back(std::pow(delta, i / 9.0));
        // |P n B(c, delta^a)| <= A delta^(a t - t), i.e. (count * r^-t) * delta^t <= A
        const auto scaled = max_ball_counts(inst.points, radii);
        for (double v : scaled) CHECK(v * std::pow(delta, t) <= calibration::kSharpnessBallConstant);
        CHECK(validate_frostman_set(inst.points, delta, t).best_constant <= calibration::kSharpnessFrostman);
      }
  }

  TEST_CASE("random dyadic sets") {
    for (double t : {1.25, 1.5, 1.75}) {
      const int k = 6;
      const auto pts = gen_random_dyadic_set(2, t, k, 17);
      const double lo = std::pow(std::floor(std::pow(2.0, t)), k), hi = std::pow(std::ceil(std::pow(2.0, t)), k);
      CHECK(static_cast<double>(pts.size()) >= lo);
      CHECK(static_cast<double>(pts.size()) <= hi);
      CHECK(pts.min_pairwise_distance() >= std::ldexp(1.0, -k) * (1 - 1e-12));
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (double x : pts.point(i)) {
          CHECK(x > 0.0);
          CHECK(x < 1.0);
        }
      const auto again = gen_random_dyadic_set(2, t, k, 17);
      CHECK(again.coords() == pts.coords());
      CHECK(validate_frostman_set(pts, std::ldexp(1.0, -k), t).best_constant < 20.0);
    }
    // t = d keeps every cell
    CHECK(gen_random_dyadic_set(2, 2.0, 3, 1).size() == 64);
  }

  TEST_CASE("random separated line families") {
    const double sep = 1.0 / 64;
    const auto fam = gen_random_line_family(300, sep, 8);
    CHECK(fam.size() <= 300);
    CHECK(fam.size() >= 250);
    CHECK(fam.separation == sep);
    double min_d = 1e9;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      // meets the unit square: some corner on each side, or passes through
      const auto& l = fam.planes[i];
      double lo = 1e9, hi = -1e9;
      for (double x : {0.0, 1.0})
        for (double y : {0.0, 1.0}) {
          const double sgn = -l.basis()(1, 0) * (x - l.offset()(0)) + l.basis()(0, 0) * (y - l.offset()(1));
          lo = std::min(lo, sgn);
          hi = std::max(hi, sgn);
        }
      CHECK(lo <= 1e-12);
      CHECK(hi >= -1e-12);
      for (std::size_t j = 0; j < i; ++j) min_d = std::min(min_d, grassmann_distance(fam.planes[i], fam.planes[j]));
    }
    CHECK(min_d >= sep);

    const auto cloud = gen_random_dyadic_set(2, 1.5, 6, 3);
    const auto rich = gen_random_line_family(200, sep, 9, &cloud);
    std::size_t through_two = 0;
    for (const auto& l : rich.planes) {
      int hits = 0;
      for (std::size_t i = 0; i < cloud.size(); ++i) hits += l.distance(cloud.point(i)) < 1e-9;
      through_two += hits >= 2;
    }
    CHECK(through_two == rich.size());
  }
}
