#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fraclab/io.hpp"

namespace fraclab {

struct ExperimentConfig {
  std::string id;
  Json params = Json::object();  // missing keys take the defaults below
  std::filesystem::path out_dir;  // empty: nothing is written
  std::uint64_t seed = 1;
};

struct ExperimentResult {
  Json summary;     // effective params, expected exponents, fits, checks, pass
  std::string csv;  // one row per scale (or per case)
  bool passed = false;
};

/// sharpness-incidence, projection-lp, radial-identity, mattila,
/// ball-scaling, duality-pipeline.
const std::vector<std::string>& experiment_ids();

/// Runs one experiment and, when out_dir is set, writes <id>.csv and
/// <id>.json there. Output depends only on the config (ids, params, seed).
/// Unknown ids raise InputError.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Synthetic mollified cloud used by radial-identity: `count` uniform points
/// in [0,1]^2 drawn from the seed.
PointCloud random_unit_square_cloud(std::size_t count, std::uint64_t seed);

/// Named test functions for the rotation identity. `invariant` tells whether
/// the function is radial.
struct TestFunction {
  std::string name;
  bool invariant = true;
  double support_radius = 1.0;
  double (*f)(std::span<const double>) = nullptr;
};
const std::vector<TestFunction>& rotation_test_functions();

/// int ||pi_L mu||_p^p for mu uniform on the unit disc and any line L.
double disc_projection_lp(double p);

}  // namespace fraclab
