#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fraclab/error.hpp"
#include "fraclab/geometry.hpp"
#include "oracles.hpp"

using namespace fraclab;

namespace {

AffinePlane x_axis() { return line_at_angle(0.0); }

double line_angle(const AffinePlane& l) {
  double a = std::atan2(l.basis()(1, 0), l.basis()(0, 0));
  if (a < 0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("point to plane distance") {
    Mat b(3, 2);
    b << 1, 0, 0, 1, 0, 0;
    const AffinePlane plane(b);
    CHECK(dist_point_plane(Vec{{0.0, 0.0, 1.0}}, plane) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dist_point_plane(Vec{{1.0, 1.0}}, line_at_angle(std::numbers::pi / 4)) < 1e-12);
    CHECK(dist_point_plane(Vec{{3.0, 4.0}}, x_axis()) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK_THROWS_AS(dist_point_plane(Vec{{1.0, 2.0, 3.0}}, x_axis()), InputError);
  }

  TEST_CASE("distance agrees with a long double residual on random planes") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    for (int d = 2; d <= 5; ++d)
      for (int n = 1; n < d; ++n) {
        const auto planes = sample_grassmannian(d, n, 20, 100 + d * 10 + n);
        for (const auto& v0 : planes) {
          Vec a(d);
          for (int i = 0; i < d; ++i) a(i) = nd(gen);
          const AffinePlane v = AffinePlane::through(a, v0.basis());
          std::vector<std::vector<double>> basis(n, std::vector<double>(d));
          for (int c = 0; c < n; ++c)
            for (int r = 0; r < d; ++r) basis[c][r] = v.basis()(r, c);
          std::vector<double> off(v.offset().data(), v.offset().data() + d);
          for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> x(d);
            for (double& c : x) c = 2 * nd(gen);
            const double want = static_cast<double>(oracle::residual(x, basis, off));
            CHECK(v.distance(x) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
          }
        }
      }
  }

  TEST_CASE("invalid planes are rejected") {
    Mat b(2, 1);
    b << 1, 1;  // not unit length
    CHECK_THROWS_AS(AffinePlane{b}, InputError);
    Mat e(2, 1);
    e << 1, 0;
    CHECK_THROWS_AS((AffinePlane{e, Vec{{1.0, 0.0}}}), InputError);  // offset along the line
  }

  TEST_CASE("Grassmann distance") {
    CHECK(grassmann_distance(x_axis(), x_axis()) == doctest::Approx(0.0));
    CHECK(grassmann_distance(x_axis(), line_at_angle(std::numbers::pi / 2)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(grassmann_distance(x_axis(), line_at_angle(std::numbers::pi / 4)) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    // |sin| law across angles, plus the offset term
    for (double th : {0.1, 0.7, 1.3, 2.9})
      CHECK(grassmann_distance(x_axis(), line_at_angle(th, 0.25)) ==
            doctest::Approx(std::abs(std::sin(th)) + 0.25).epsilon(1e-13));
    Mat b(3, 1);
    b << 1, 0, 0;
    CHECK_THROWS_AS(grassmann_distance(x_axis(), AffinePlane(b)), InputError);
  }

  TEST_CASE("Grassmannian sampling") {
    const auto five = sample_grassmannian(4, 2, 5, 3);
    REQUIRE(five.size() == 5);
    for (const auto& v : five) {
      const Mat g = v.basis().transpose() * v.basis();
      CHECK((g - Mat::Identity(2, 2)).norm() < 1e-12);
      CHECK(v.is_linear());
    }
    CHECK_THROWS_AS(sample_grassmannian(2, 2, 3, 1), InputError);
    CHECK_THROWS_AS(sample_grassmannian(3, 0, 3, 1), InputError);

    // sample i depends only on (seed, i)
    const auto a = sample_grassmannian(3, 1, 10, 11);
    const auto b = sample_grassmannian(3, 1, 4, 11);
    for (int i = 0; i < 4; ++i) CHECK((a[i].basis() - b[i].basis()).norm() == 0.0);
  }

  TEST_CASE("planar directions are uniform on [0, pi)") {
    const auto planes = sample_grassmannian(2, 1, 10000, 2024);
    std::vector<double> angles;
    for (const auto& l : planes) angles.push_back(line_angle(l));
    CHECK(oracle::ks_uniform(angles, 0.0, std::numbers::pi) < oracle::ks_critical_one(angles.size()));
  }

  TEST_CASE("lines in R^3 are rotation invariant") {
    const auto a = sample_grassmannian(3, 1, 10000, 5);
    const auto b = sample_grassmannian(3, 1, 10000, 6);
    Mat rot = Eigen::AngleAxisd(0.9, Eigen::Vector3d(1, 2, 2).normalized()).toRotationMatrix();
    // |z| of a uniform unit direction is uniform on [0, 1]
    std::vector<double> za, zb;
    for (const auto& l : a) za.push_back(std::abs((rot * l.basis()).col(0)(2)));
    for (const auto& l : b) zb.push_back(std::abs(l.basis()(2, 0)));
    CHECK(oracle::ks_two_sample(za, zb) < oracle::ks_critical_two(za.size(), zb.size()));
    CHECK(oracle::ks_uniform(zb, 0.0, 1.0) < oracle::ks_critical_one(zb.size()));
  }

  TEST_CASE("orthogonal complement") {
    const auto y = orthocomplement(x_axis());
    CHECK(std::abs(y.basis()(0, 0)) < 1e-15);
    CHECK(std::abs(y.basis()(1, 0)) == doctest::Approx(1.0));
    Mat b(3, 2);
    b << 1, 0, 0, 1, 0, 0;
    const auto e3 = orthocomplement(AffinePlane(b));
    CHECK(e3.plane_dim() == 1);
    CHECK(std::abs(e3.basis()(2, 0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(orthocomplement(line_at_angle(0.3, 0.5)), InputError);

    const auto src = sample_grassmannian(2, 1, 10000, 41);
    const auto fresh = sample_grassmannian(2, 1, 10000, 42);
    std::vector<double> pushed, direct;
    for (const auto& l : src) pushed.push_back(line_angle(orthocomplement(l)));
    for (const auto& l : fresh) direct.push_back(line_angle(l));
    CHECK(oracle::ks_two_sample(pushed, direct) < oracle::ks_critical_two(pushed.size(), direct.size()));
  }

  TEST_CASE("point cloud invariants") {
    CHECK_THROWS_AS(PointCloud(2, {0.0, 0.0, 0.1, 0.0}, 0.5), InputError);
    CHECK_THROWS_AS(PointCloud(2, {0.0, 0.0, 3.0, 0.0}, 0.0, 1.0), InputError);
    const PointCloud ok(2, {0.0, 0.0, 1.0, 0.0, 0.0, 2.0});
    CHECK(ok.min_pairwise_distance() == doctest::Approx(1.0));
    CHECK(Resolution(3).delta() == 0.125);
  }
}
