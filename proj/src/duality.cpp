#include "fraclab/duality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "fraclab/error.hpp"
#include "fraclab/random.hpp"

namespace fraclab {

namespace {

constexpr std::uint64_t kCalibrationStream = 0x6475616cULL;  // "dual"

// Unit normal of a hyperplane, oriented so the last component is >= 0.
Vec unit_normal(const AffinePlane& plane) {
  const int d = plane.ambient_dim();
  require(plane.plane_dim() == d - 1, "duality acts on hyperplanes");
  const Eigen::HouseholderQR<Mat> qr(plane.basis());
  Vec nu = (qr.householderQ() * Mat::Identity(d, d)).col(d - 1);
  nu -= plane.basis() * (plane.basis().transpose() * nu);
  nu.normalize();
  if (nu(d - 1) < 0.0) nu = -nu;
  return nu;
}

// Graph coefficients of {y : <nu, y> = c}: y_d = -(nu'/nu_d) y' + c/nu_d.
Vec graph_coefficients(const Vec& nu, double c) {
  const int d = static_cast<int>(nu.size());
  const double nd = nu(d - 1);
  if (!(std::abs(nd) > 1e-12)) throw DomainError("hyperplane contains a vertical line");
  Vec a(d);
  for (int i = 0; i < d - 1; ++i) a(i) = -nu(i) / nd;
  a(d - 1) = c / nd;
  return a;
}

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

AffinePlane horizontal_plane(int d) {
  require(d >= 2 && d <= kMaxDim, "dimension must be in [2, 8]");
  return AffinePlane(Mat::Identity(d, d - 1));
}

AffinePlane dual_plane(std::span<const double> x) {
  const auto d = static_cast<int>(x.size());
  require(d >= 2 && d <= kMaxDim, "dimension must be in [2, 8]");
  Mat dirs = Mat::Zero(d, d - 1);
  for (int i = 0; i < d - 1; ++i) {
    dirs(i, i) = 1.0;
    dirs(d - 1, i) = x[i];
  }
  Vec p = Vec::Zero(d);
  p(d - 1) = x[d - 1];
  return AffinePlane::through(p, dirs);
}

AffinePlane dual_plane(const Vec& x) {
  return dual_plane(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Vec dual_point(const AffinePlane& plane) {
  const int d = plane.ambient_dim();
  const Vec nu = unit_normal(plane);
  const Vec a = graph_coefficients(nu, nu.dot(plane.offset()));
  Vec p = a;
  for (int i = 0; i < d - 1; ++i) p(i) = -a(i);
  return p;
}

double hyperplane_distance(const AffinePlane& v, const AffinePlane& w) {
  require(v.ambient_dim() == w.ambient_dim(), "planes differ in dimension");
  const double c = unit_normal(v).dot(unit_normal(w));
  return std::sqrt(std::max(0.0, 1.0 - c * c)) + (v.offset() - w.offset()).norm();
}

DualityContext calibrate_duality(int d, std::size_t samples, std::uint64_t seed) {
  require(d >= 2 && d <= kMaxDim, "dimension must be in [2, 8]");
  require(samples >= 1, "need at least one sample");
  // Planes in B(V0, r) are parametrised by tilt sin(phi) = r u1 toward a unit
  // direction w in R^(d-1) and offset |a| = (r - sin(phi)) u2 along the
  // normal; d_A to V0 is sin(phi) + |a| <= r.
  Rng rng(derive_seed(seed, kCalibrationStream));
  const std::size_t m = static_cast<std::size_t>(d - 1);
  std::vector<double> u1(samples), u2(samples), dir(samples * m);
  for (std::size_t i = 0; i < samples; ++i) {
    u1[i] = rng.uniform();
    u2[i] = rng.uniform() * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    double s = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      dir[i * m + a] = rng.normal();
      s += dir[i * m + a] * dir[i * m + a];
    }
    s = std::sqrt(s);
    for (std::size_t a = 0; a < m; ++a) dir[i * m + a] /= s;
  }
  auto all_inside = [&](double r) {
    Vec nu(d);
    for (std::size_t i = 0; i < samples; ++i) {
      const double sphi = r * u1[i];
      const double cphi = std::sqrt(1.0 - sphi * sphi);
      for (std::size_t a = 0; a < m; ++a) nu(static_cast<Eigen::Index>(a)) = sphi * dir[i * m + a];
      nu(d - 1) = cphi;
      const Vec x = graph_coefficients(nu, (r - sphi) * u2[i]);
      if (x.norm() > 1.0) return false;
    }
    return true;
  };
  double lo = 0.0, hi = 1.0 - 1e-9;
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    (all_inside(mid) ? lo : hi) = mid;
  }
  return DualityContext{d, 0.5 * lo};
}

DualityReport verify_duality_relations(const PointCloud& points, const PlaneFamily& planes,
                                       const DualityContext& ctx, bool zip, double tol) {
  const int d = ctx.d;
  require(points.dim() == d, "points do not match the duality dimension");
  const AffinePlane v0 = horizontal_plane(d);
  for (std::size_t i = 0; i < points.size(); ++i)
    require(norm_of(points.point(i)) <= 2.0 + kComposedTol, "points must lie in B(2)");
  std::vector<Vec> duals(planes.size());
  for (std::size_t j = 0; j < planes.size(); ++j) {
    require(planes.planes[j].ambient_dim() == d, "plane does not match the duality dimension");
    require(grassmann_distance(planes.planes[j], v0) <= ctx.r_d + kComposedTol,
            "planes must lie in B(V0, r_d)");
    duals[j] = dual_point(planes.planes[j]);
  }
  if (zip) require(points.size() == planes.size(), "zipped check needs equal counts");

  std::vector<AffinePlane> forward;
  forward.reserve(points.size());
  DualityReport rep;
  for (std::size_t i = 0; i < points.size(); ++i) {
    forward.push_back(dual_plane(points.point(i)));
    const Vec back = dual_point(forward.back());
    double err = 0.0;
    for (int a = 0; a < d; ++a) {
      const double want = a < d - 1 ? -points.point(i)[a] : points.point(i)[a];
      err = std::max(err, std::abs(back(a) - want));
    }
    rep.max_roundtrip_error = std::max(rep.max_roundtrip_error, err);
  }

  auto check = [&](std::size_t i, std::size_t j) {
    const double primal = planes.planes[j].distance(points.point(i));
    const double dual = dist_point_plane(duals[j], forward[i]);
    ++rep.pairs;
    const bool in_primal = primal <= tol, in_dual = dual <= tol;
    if ((in_primal && dual > 3.0 * tol) || (in_dual && primal > 3.0 * tol)) ++rep.incidence_mismatches;
    if (primal > 3.0 * dual * (1.0 + 1e-12) + tol || dual > 3.0 * primal * (1.0 + 1e-12) + tol)
      ++rep.factor3_violations;
    if (dual > tol) rep.max_primal_over_dual = std::max(rep.max_primal_over_dual, primal / dual);
    if (primal > tol) rep.max_dual_over_primal = std::max(rep.max_dual_over_primal, dual / primal);
  };
  if (zip) {
    for (std::size_t i = 0; i < points.size(); ++i) check(i, i);
  } else {
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = 0; j < planes.size(); ++j) check(i, j);
  }

  // Bilipschitz ratios on consecutive pairs.
  rep.bilip_forward_lo = rep.bilip_backward_lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += std::pow(points.point(i)[a] - points.point(i + 1)[a], 2);
    if (s == 0.0) continue;
    const double ratio = hyperplane_distance(forward[i], forward[i + 1]) / std::sqrt(s);
    rep.bilip_forward_lo = std::min(rep.bilip_forward_lo, ratio);
    rep.bilip_forward_hi = std::max(rep.bilip_forward_hi, ratio);
  }
  for (std::size_t j = 0; j + 1 < planes.size(); ++j) {
    const double da = hyperplane_distance(planes.planes[j], planes.planes[j + 1]);
    if (da == 0.0) continue;
    const double ratio = (duals[j] - duals[j + 1]).norm() / da;
    rep.bilip_backward_lo = std::min(rep.bilip_backward_lo, ratio);
    rep.bilip_backward_hi = std::max(rep.bilip_backward_hi, ratio);
  }
  if (!std::isfinite(rep.bilip_forward_lo)) rep.bilip_forward_lo = 0.0;
  if (!std::isfinite(rep.bilip_backward_lo)) rep.bilip_backward_lo = 0.0;
  return rep;
}

DualizedConfig dualize_furstenberg_config(const PlaneFamily& family, const std::vector<PointCloud>& fibres,
                                          const DualityContext& ctx, double delta) {
  require(family.size() == fibres.size(), "need one fibre per plane");
  require(!family.planes.empty(), "empty plane family");
  require(delta > 0.0, "delta must be positive");
  const int d = ctx.d;
  const AffinePlane v0 = horizontal_plane(d);
  std::vector<double> coords;
  for (const auto& v : family.planes) {
    require(v.ambient_dim() == d, "plane does not match the duality dimension");
    require(grassmann_distance(v, v0) <= ctx.r_d + kComposedTol, "every plane must lie in B(V0, r_d)");
    const Vec p = dual_point(v);
    coords.insert(coords.end(), p.data(), p.data() + d);
  }
  DualizedConfig out;
  {
    const PointCloud probe(d, coords);
    out.point_separation = probe.min_pairwise_distance();
  }
  out.points = PointCloud(d, std::move(coords), 0.0);

  // Merge fibre points closer than delta to an already kept point, using a
  // hash grid of cell delta.
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;
  std::vector<Vec> kept;
  auto cell_key = [&](const std::array<std::int64_t, kMaxDim>& c) {
    std::uint64_t k = 0x9e3779b97f4a7c15ULL;
    for (int a = 0; a < d; ++a) k = splitmix64(k ^ static_cast<std::uint64_t>(c[a]));
    return k;
  };
  out.incident.resize(family.size());
  for (std::size_t j = 0; j < fibres.size(); ++j) {
    const PointCloud& fibre = fibres[j];
    for (std::size_t i = 0; i < fibre.size(); ++i) {
      auto x = fibre.point(i);
      require(static_cast<int>(x.size()) == d, "fibre point dimension mismatch");
      std::array<std::int64_t, kMaxDim> c{};
      for (int a = 0; a < d; ++a) c[a] = static_cast<std::int64_t>(std::floor(x[a] / delta));
      std::int64_t found = -1;
      std::array<std::int64_t, kMaxDim> off{};
      for (int a = 0; a < d; ++a) off[a] = -1;
      for (;;) {
        std::array<std::int64_t, kMaxDim> nb{};
        for (int a = 0; a < d; ++a) nb[a] = c[a] + off[a];
        auto it = cells.find(cell_key(nb));
        if (it != cells.end())
          for (auto k : it->second) {
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += (kept[k](a) - x[a]) * (kept[k](a) - x[a]);
            if (std::sqrt(s) < delta && (found < 0 || static_cast<std::int64_t>(k) < found))
              found = static_cast<std::int64_t>(k);
          }
        int a = d - 1;
        while (a >= 0 && off[a] == 1) {
          off[a] = -1;
          --a;
        }
        if (a < 0) break;
        ++off[a];
      }
      if (found < 0) {
        found = static_cast<std::int64_t>(kept.size());
        kept.push_back(Eigen::Map<const Vec>(x.data(), d));
        cells[cell_key(c)].push_back(static_cast<std::uint32_t>(found));
      } else {
        ++out.merged_points;
      }
      out.incident[j].push_back(static_cast<std::uint32_t>(found));
    }
    auto& list = out.incident[j];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  for (const auto& x : kept) out.planes.planes.push_back(dual_plane(x));

  std::vector<Vec> normals;
  for (const auto& v : out.planes.planes) normals.push_back(unit_normal(v));
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < normals.size(); ++a)
    for (std::size_t b = a + 1; b < normals.size(); ++b) {
      const double c = normals[a].dot(normals[b]);
      const double dist = std::sqrt(std::max(0.0, 1.0 - c * c)) +
                          (out.planes.planes[a].offset() - out.planes.planes[b].offset()).norm();
      sep = std::min(sep, dist);
    }
  out.plane_separation = std::isfinite(sep) ? sep : 0.0;
  out.planes.separation = out.plane_separation;
  for (std::size_t j = 0; j < out.incident.size(); ++j)
    for (auto k : out.incident[j])
      out.max_fibre_distance = std::max(out.max_fibre_distance, out.planes.planes[k].distance(out.points.point(j)));
  return out;
}

}  // namespace fraclab
