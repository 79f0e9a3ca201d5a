#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "speckle/config.hpp"
#include "speckle/metrics.hpp"

namespace speckle {

struct CorpusItem {
  Category category = Category::Websight;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string split;  // "train", "val", "test", or "all" when the corpus is too small to split
  Field2D image;
};

// Seed of item `index` of a category; independent across categories.
std::uint64_t item_seed(std::uint64_t corpus_seed, Category category, std::size_t index);

// scene.count images per category, category-major, each labelled with its
// make_split partition (seeded by corpus seed and category).
std::vector<CorpusItem> build_corpus(const SceneConfig& scene);

// The items an experiment evaluates: the test partition, or everything.
std::vector<CorpusItem> evaluation_items(const SceneConfig& scene);

// Simulate one capture and invert it. The inversion models `attack` except
// for the PSF width when `psi_psf_sigma` is set. Observation noise is seeded
// from splitmix64(attack.noise_seed ^ seed), so every condition sees the same
// draw for a given image.
struct ImageRun {
  Field2D truth;
  Field2D observation;
  Field2D estimate;
  InversionResult result;
};
ImageRun run_image(const Field2D& truth, std::uint64_t seed, const OpticsConfig& attack,
                   const std::optional<double>& psi_psf_sigma, const SchemeSettings& scheme);

struct ConditionResult {
  MetricRow row;                  // per-image metrics averaged in item order
  std::vector<double> residuals;  // mean residual per step, finished runs held at their last value
  std::vector<ImageRun> samples;  // the first `keep` runs
};

// Runs every item under one condition on `threads` workers; the merge is in
// item order so results do not depend on the thread count.
ConditionResult evaluate_condition(std::string label, const std::vector<CorpusItem>& items,
                                   const OpticsConfig& attack,
                                   const std::optional<double>& psi_psf_sigma,
                                   const SchemeSettings& scheme, std::size_t threads,
                                   std::size_t keep = 0);

struct ExperimentReport {
  std::string name;
  std::vector<MetricRow> rows;
  std::vector<std::vector<double>> residuals;  // one trace per row
  std::vector<ImageRun> grid;                  // samples from the first row
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::filesystem::path csv_path;
  std::filesystem::path grid_path;
  std::filesystem::path residuals_path;
};

// Rows "scheme/category", scheme-major, for the categories in cfg.scene.
ExperimentReport run_ablation(const std::vector<CorpusItem>& items, const ExperimentConfig& cfg,
                              const std::vector<Scheme>& schemes);

std::vector<double> default_luminance_offsets();  // 0, 25, ..., 300 nits

// One row per brightness offset over all items, scheme from cfg.
ExperimentReport run_luminance_sweep(const std::vector<CorpusItem>& items,
                                     const ExperimentConfig& cfg,
                                     const std::vector<double>& offsets = default_luminance_offsets());

struct GeometryCondition {
  std::string family;  // "orbit", "rotation", "distance"
  std::string label;
  OpticsConfig optics;
};

// Five conditions per family on top of `base`:
//   orbit    (horizontal, vertical) arcs (0,5) (0,15) (0,-5) (10,0) (15,0)
//   rotation (pitch, yaw, roll) (0,0,0) (2,0,0) (5,3,2) (8,5,4) (0,-10,-3)
//   distance 2, 3, 4, 5, 6 m at the identity pose
std::vector<GeometryCondition> geometry_conditions(const OpticsConfig& base);

ExperimentReport run_geometry_sweep(const std::vector<CorpusItem>& items,
                                    const ExperimentConfig& cfg);

// Writes report.csv (condition,psnr,rmse,ssim), residuals.csv
// (condition,iter,residual), grid.png (truth | observation | estimate rows)
// and config.ini into `dir`, recording the paths in the report.
void write_report(ExperimentReport& report, const std::filesystem::path& dir);

std::string report_csv(const std::vector<MetricRow>& rows);

}  // namespace speckle
