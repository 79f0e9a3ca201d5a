#include "speckle/experiments.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "speckle/error.hpp"
#include "speckle/rng.hpp"
#include "speckle/tensor_io.hpp"

namespace speckle {
namespace {

std::size_t category_index(Category c) {
  for (std::size_t i = 0; i < std::size(kAllCategories); ++i)
    if (kAllCategories[i] == c) return i;
  return 0;
}

std::string label_number(double v) { return format_double(v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

Field2D compose_grid(const std::vector<ImageRun>& runs) {
  const std::size_t h = runs.front().truth.height(), w = runs.front().truth.width();
  const std::size_t gap = 2;
  Field2D grid(runs.size() * h + (runs.size() + 1) * gap, 3 * w + 4 * gap, 1.0);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const Field2D* panels[3] = {&runs[r].truth, &runs[r].observation, &runs[r].estimate};
    for (std::size_t p = 0; p < 3; ++p) {
      const std::size_t top = gap + r * (h + gap), left = gap + p * (w + gap);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) grid(top + y, left + x) = (*panels[p])(y, x);
    }
  }
  return grid;
}

ExperimentReport new_report(std::string name, const ExperimentConfig& cfg) {
  ExperimentReport r;
  r.name = std::move(name);
  r.config = cfg;
  r.seed = cfg.scene.seed;
  return r;
}

void add_row(ExperimentReport& report, ConditionResult&& res) {
  report.rows.push_back(std::move(res.row));
  report.residuals.push_back(std::move(res.residuals));
  if (report.grid.empty()) report.grid = std::move(res.samples);
}

}  // namespace

std::uint64_t item_seed(std::uint64_t corpus_seed, Category category, std::size_t index) {
  return splitmix64(corpus_seed ^ splitmix64((static_cast<std::uint64_t>(category_index(category)) << 40) ^
                                             static_cast<std::uint64_t>(index)));
}

std::vector<CorpusItem> build_corpus(const SceneConfig& scene) {
  std::vector<CorpusItem> items;
  for (Category c : scene.categories) {
    std::vector<std::string> labels(scene.count, "all");
    if (scene.count >= 10) {
      const CorpusSplit split = make_split(scene.count, scene.seed ^ (category_index(c) + 1));
      for (std::size_t i : split.train) labels[i] = "train";
      for (std::size_t i : split.val) labels[i] = "val";
      for (std::size_t i : split.test) labels[i] = "test";
    }
    for (std::size_t i = 0; i < scene.count; ++i) {
      const std::uint64_t seed = item_seed(scene.seed, c, i);
      items.push_back({c, i, seed, labels[i], generate({c, scene.size, scene.size, seed}).image.radiance()});
    }
  }
  return items;
}

std::vector<CorpusItem> evaluation_items(const SceneConfig& scene) {
  std::vector<CorpusItem> all = build_corpus(scene);
  if (scene.subset == Subset::All) return all;
  std::vector<CorpusItem> test;
  for (CorpusItem& item : all)
    if (item.split == "test") test.push_back(std::move(item));
  return test;
}

ImageRun run_image(const Field2D& truth, std::uint64_t seed, const OpticsConfig& attack,
                   const std::optional<double>& psi_psf_sigma, const SchemeSettings& scheme) {
  Rng rng(splitmix64(attack.noise_seed ^ seed));
  WallObservation y = apply_transfer(ScreenImage(truth), attack, rng);
  OpticsConfig model = attack;
  if (psi_psf_sigma) model.psf_sigma = *psi_psf_sigma;
  const InversionProblem problem(y, model, scheme.psi_eps);
  const SchemeConfig cfg = scheme.resolve(estimate_lipschitz(problem.channel(), scheme.reg_lambda));
  InversionResult result = run_inversion(problem, cfg);
  Field2D estimate = result.final_estimate;
  for (double& v : estimate.values()) v = std::clamp(v, 0.0, 1.0);
  return {truth, y.irradiance(), std::move(estimate), std::move(result)};
}

ConditionResult evaluate_condition(std::string label, const std::vector<CorpusItem>& items,
                                   const OpticsConfig& attack,
                                   const std::optional<double>& psi_psf_sigma,
                                   const SchemeSettings& scheme, std::size_t threads,
                                   std::size_t keep) {
  if (items.empty()) throw ArgumentError("evaluate_condition: no items for '" + label + "'");
  if (threads == 0) throw ArgumentError("evaluate_condition: threads must be >= 1");
  std::vector<ImageRun> runs(items.size());
  std::vector<MetricRow> scores(items.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto worker = [&](std::size_t id) {
    try {
      for (std::size_t i = next++; i < items.size(); i = next++) {
        runs[i] = run_image(items[i].image, items[i].seed, attack, psi_psf_sigma, scheme);
        scores[i] = score({}, runs[i].truth, runs[i].estimate);
        if (i >= keep) {
          runs[i].truth = runs[i].observation = runs[i].estimate = runs[i].result.final_estimate = Field2D();
        }
      }
    } catch (...) {
      errors[id] = std::current_exception();
      next = items.size();
    }
  };
  const std::size_t n_threads = std::min(threads, items.size());
  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ConditionResult out;
  out.row.condition = std::move(label);
  std::size_t longest = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.row.psnr += scores[i].psnr;
    out.row.rmse += scores[i].rmse;
    out.row.ssim += scores[i].ssim;
    longest = std::max(longest, runs[i].result.residual_history.size());
  }
  const double n = static_cast<double>(items.size());
  out.row.psnr /= n;
  out.row.rmse /= n;
  out.row.ssim /= n;
  out.residuals.assign(longest, 0.0);
  for (const ImageRun& run : runs) {
    const auto& h = run.result.residual_history;
    for (std::size_t k = 0; k < longest; ++k) out.residuals[k] += h[std::min(k, h.size() - 1)] / n;
  }
  for (std::size_t i = 0; i < std::min(keep, runs.size()); ++i) out.samples.push_back(std::move(runs[i]));
  return out;
}

ExperimentReport run_ablation(const std::vector<CorpusItem>& items, const ExperimentConfig& cfg,
                              const std::vector<Scheme>& schemes) {
  if (schemes.empty()) throw ArgumentError("run_ablation: empty scheme set");
  ExperimentReport report = new_report("ablation", cfg);
  for (Scheme s : schemes) {
    SchemeSettings settings = cfg.scheme;
    settings.scheme = s;
    for (Category c : cfg.scene.categories) {
      std::vector<CorpusItem> subset;
      for (const CorpusItem& item : items)
        if (item.category == c) subset.push_back(item);
      const std::string label = std::string(scheme_name(s)) + "/" + std::string(category_name(c));
      add_row(report, evaluate_condition(label, subset, cfg.optics, cfg.psi_psf_sigma, settings,
                                         cfg.report.threads, cfg.report.grid_items));
    }
  }
  return report;
}

std::vector<double> default_luminance_offsets() {
  std::vector<double> offsets;
  for (int k = 0; k <= 12; ++k) offsets.push_back(25.0 * k);
  return offsets;
}

ExperimentReport run_luminance_sweep(const std::vector<CorpusItem>& items,
                                     const ExperimentConfig& cfg,
                                     const std::vector<double>& offsets) {
  ExperimentReport report = new_report("luminance", cfg);
  for (double offset : offsets) {
    OpticsConfig optics = cfg.optics;
    optics.brightness_offset_nits = offset;
    add_row(report, evaluate_condition("offset=" + label_number(offset), items, optics,
                                       cfg.psi_psf_sigma, cfg.scheme, cfg.report.threads,
                                       cfg.report.grid_items));
  }
  return report;
}

std::vector<GeometryCondition> geometry_conditions(const OpticsConfig& base) {
  std::vector<GeometryCondition> out;
  const std::pair<double, double> orbits[] = {{0, 5}, {0, 15}, {0, -5}, {10, 0}, {15, 0}};
  for (auto [h, v] : orbits) {
    OpticsConfig o = base;
    o.pose = Pose{};
    o.pose.horiz_arc_deg = h;
    o.pose.vert_arc_deg = v;
    out.push_back({"orbit", "orbit h=" + label_number(h) + " v=" + label_number(v), o});
  }
  const std::array<double, 3> rotations[] = {{0, 0, 0}, {2, 0, 0}, {5, 3, 2}, {8, 5, 4}, {0, -10, -3}};
  for (const auto& r : rotations) {
    OpticsConfig o = base;
    o.pose = Pose{r[0], r[1], r[2], 0.0, 0.0};
    out.push_back({"rotation",
                   "rotation p=" + label_number(r[0]) + " y=" + label_number(r[1]) + " r=" + label_number(r[2]),
                   o});
  }
  for (double d : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    OpticsConfig o = base;
    o.pose = Pose{};
    o.distance_m = d;
    out.push_back({"distance", "distance " + label_number(d) + "m", o});
  }
  return out;
}

ExperimentReport run_geometry_sweep(const std::vector<CorpusItem>& items,
                                    const ExperimentConfig& cfg) {
  ExperimentReport report = new_report("geometry", cfg);
  for (const GeometryCondition& g : geometry_conditions(cfg.optics)) {
    add_row(report, evaluate_condition(g.label, items, g.optics, cfg.psi_psf_sigma, cfg.scheme,
                                       cfg.report.threads, cfg.report.grid_items));
  }
  return report;
}

std::string report_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream out;
  out << "condition,psnr,rmse,ssim\n";
  for (const MetricRow& r : rows) {
    out << r.condition << "," << format_double(r.psnr) << "," << format_double(r.rmse) << ","
        << format_double(r.ssim) << "\n";
  }
  return out.str();
}

void write_report(ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  report.csv_path = dir / "report.csv";
  write_text(report.csv_path, report_csv(report.rows));

  std::ostringstream res;
  res << "condition,iter,residual\n";
  for (std::size_t r = 0; r < report.rows.size(); ++r)
    for (std::size_t k = 0; k < report.residuals[r].size(); ++k)
      res << report.rows[r].condition << "," << k + 1 << "," << format_double(report.residuals[r][k]) << "\n";
  report.residuals_path = dir / "residuals.csv";
  write_text(report.residuals_path, res.str());

  if (!report.grid.empty()) {
    report.grid_path = dir / "grid.png";
    write_png_gray(report.grid_path, compose_grid(report.grid));
  }
  write_text(dir / "config.ini", to_config_text(report.config));
}

}  // namespace speckle
