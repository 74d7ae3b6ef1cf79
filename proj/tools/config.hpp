#pragma once

// Run configuration for the fkhom command line. Every block is validated up
// front; errors name the offending JSON path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fkhom/model.hpp"
#include "fkhom/slope.hpp"

namespace fkhom::cli {

struct SimulateConfig {
  Slope p;
  int cells = 4;
  double T = 50.0;
  std::optional<double> dt;
  double dt_safety = 0.5;
  double sample_dt = 0.05;
  double L = 0.0;
  double delta = 0.0;
  double a0 = 0.0;
  double perturbation = 0.0;
  std::size_t snapshot_every = 0;
};

struct EffhamConfig {
  std::vector<Slope> p_grid;
  std::vector<double> L_grid;
  double tol = 1e-4;
  double T_cap = 1000.0;
  double T0 = 4.0;
  int cells = 1;
  double dt_safety = 0.5;
  double perturbation = 0.0;
};

struct HullConfig {
  Slope p;
  double L = 0.0;
  int Z = 64;
  int snapshots = 0;  // 0: chosen from the rotation halfwidth
  double tol = 1e-5;
  double T_cap = 2000.0;
  double dt_safety = 0.5;
  double sample_dt = 0.01;
  int cells = 1;
};

struct ProfileConfig {
  std::string kind = "sine";  // "linear", "sine" or "file"
  double slope = 1.0;
  double amplitude = 0.15;
  double wavenumber = 1.0;
  std::filesystem::path file;
};

struct HomogenizeConfig {
  ProfileConfig u0;
  double T = 1.0;
  double dx = 0.01;
  double x_lo = -5.0;
  double x_hi = 5.0;
  double L = 0.0;
  int record_count = 8;
  std::optional<std::filesystem::path> table_file;
};

struct ConvergeConfig {
  std::vector<double> eps_list;
  double x_lo = -5.0;
  double x_hi = 5.0;
  double T = 1.0;
  double L = 0.0;
  std::optional<ProfileConfig> u0;  // default: the homogenize profile
  int record_count = 8;
  double dt_safety = 0.5;
};

struct RunConfig {
  nlohmann::json raw;
  nlohmann::json model_json;
  ForceModel model;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out_dir;
  std::optional<SimulateConfig> simulate;
  std::optional<EffhamConfig> effham;
  std::optional<HullConfig> hull;
  std::optional<HomogenizeConfig> homogenize;
  std::optional<ConvergeConfig> converge;
};

/// Validates the whole document; relative file paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

RunConfig load_config(const std::filesystem::path& path);

}  // namespace fkhom::cli
