#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "speckle/inversion.hpp"
#include "speckle/optics.hpp"
#include "speckle/scenegen.hpp"

namespace speckle {

// Scheme choice plus optional hyperparameter overrides. Unset step, momentum
// and rho come from recommended_scheme_config for the channel at hand.
struct SchemeSettings {
  Scheme scheme = Scheme::Prirr;
  std::optional<double> step_size;
  std::optional<double> momentum_beta;
  std::optional<double> admm_rho;
  double reg_lambda = 0.0;
  double gate_gamma = 1.0;
  int max_iters = 200;
  double tol = 1e-4;
  double psi_eps = 1e-6;

  // `lipschitz` is estimate_lipschitz of the inversion channel.
  SchemeConfig resolve(double lipschitz) const;
};

enum class Subset { Test, All };

struct SceneConfig {
  std::vector<Category> categories{std::begin(kAllCategories), std::end(kAllCategories)};
  std::size_t size = 64;
  std::size_t count = 10;  // images per category
  Subset subset = Subset::Test;
  std::uint64_t seed = 0;
};

struct ReportConfig {
  std::filesystem::path out_dir = "out";
  std::size_t grid_items = 4;  // triptychs in grid.png
  std::size_t threads = 1;
};

struct ExperimentConfig {
  OpticsConfig optics;
  // Mismatched-operator attack: the inversion assumes this PSF width.
  std::optional<double> psi_psf_sigma;
  SchemeSettings scheme;
  SceneConfig scene;
  ReportConfig report;
};

// Sectioned key = value text:
//   [optics]  psf_sigma albedo base_distance_m distance_m brightness_offset_nits
//             gamma noise_sigma screen_max_nits noise_seed pitch_deg yaw_deg
//             roll_deg horiz_arc_deg vert_arc_deg psi_psf_sigma
//   [scheme]  scheme step_size momentum_beta admm_rho reg_lambda gate_gamma
//             max_iters tol psi_eps
//   [scene]   categories (comma list) size count subset (test | all) seed
//   [report]  out grid threads
// Unknown sections or keys and malformed values throw ConfigError naming the
// key; syntax errors throw FormatError. Missing keys keep their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one "section.key" = value assignment with the parse_config rules.
void apply_setting(ExperimentConfig& cfg, const std::string& qualified_key, const std::string& value);

// Canonical text form; parse_config(to_config_text(c)) reproduces c exactly.
std::string to_config_text(const ExperimentConfig& cfg);

// Range checks across sections; throws ConfigError.
void validate(const ExperimentConfig& cfg);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace speckle
