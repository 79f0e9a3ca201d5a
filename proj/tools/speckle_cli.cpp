#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "speckle/error.hpp"
#include "speckle/experiments.hpp"
#include "speckle/icsr.hpp"
#include "speckle/rng.hpp"
#include "speckle/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace speckle;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  std::optional<std::size_t> threads;
};

struct SchemeFlags {
  std::optional<std::string> scheme;
  std::optional<double> eta, beta, rho, lambda, gamma, tol, psi_eps, psi_psf_sigma;
  std::optional<int> iters;
};

void add_scheme_flags(CLI::App* cmd, SchemeFlags& f) {
  cmd->add_option("--scheme", f.scheme, "prirr | admm | nag | heavyball");
  cmd->add_option("--eta", f.eta, "step size");
  cmd->add_option("--beta", f.beta, "momentum coefficient");
  cmd->add_option("--rho", f.rho, "ADMM penalty");
  cmd->add_option("--lambda", f.lambda, "Tikhonov weight");
  cmd->add_option("--gamma", f.gamma, "PRIRR residual gate sharpness");
  cmd->add_option("--iters", f.iters, "maximum iterations");
  cmd->add_option("--tol", f.tol, "relative residual tolerance");
  cmd->add_option("--psi-eps", f.psi_eps, "Wiener regularizer of the inverse approximation");
  cmd->add_option("--psi-psf-sigma", f.psi_psf_sigma, "PSF width assumed by the inversion");
}

ExperimentConfig resolve_config(const GlobalFlags& g, const SchemeFlags& s) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  for (const std::string& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "--set expects section.key=value");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) {
    cfg.scene.seed = *g.seed;
    cfg.optics.noise_seed = *g.seed;
  }
  if (g.threads) cfg.report.threads = *g.threads;
  if (!g.out.empty()) cfg.report.out_dir = g.out;
  if (s.scheme) apply_setting(cfg, "scheme.scheme", *s.scheme);
  if (s.eta) cfg.scheme.step_size = *s.eta;
  if (s.beta) cfg.scheme.momentum_beta = *s.beta;
  if (s.rho) cfg.scheme.admm_rho = *s.rho;
  if (s.lambda) cfg.scheme.reg_lambda = *s.lambda;
  if (s.gamma) cfg.scheme.gate_gamma = *s.gamma;
  if (s.iters) cfg.scheme.max_iters = *s.iters;
  if (s.tol) cfg.scheme.tol = *s.tol;
  if (s.psi_eps) cfg.scheme.psi_eps = *s.psi_eps;
  if (s.psi_psf_sigma) cfg.psi_psf_sigma = *s.psi_psf_sigma;
  validate(cfg);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

void print_rows(const std::vector<MetricRow>& rows) {
  std::printf("%-28s %10s %10s %8s\n", "condition", "psnr", "rmse", "ssim");
  for (const MetricRow& r : rows) {
    std::printf("%-28s %10.4f %10.4f %8.5f\n", r.condition.c_str(), r.psnr, r.rmse, r.ssim);
  }
}

void finish(ExperimentReport& report) {
  write_report(report, report.config.report.out_dir);
  print_rows(report.rows);
  std::printf("wrote %s\n", report.csv_path.string().c_str());
}

std::string residual_csv(const std::string& label, const std::vector<double>& h) {
  std::ostringstream out;
  out << "condition,iter,residual\n";
  for (std::size_t k = 0; k < h.size(); ++k) out << label << "," << k + 1 << "," << format_double(h[k]) << "\n";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Screen reconstruction from diffuse wall reflections"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "sectioned key=value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "corpus and noise seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.sets, "override one config key, section.key=value");
  app.add_option("--threads", g.threads, "worker threads");

  SchemeFlags s;

  auto* simulate = app.add_subcommand("simulate", "render a screen image through the optical channel");
  std::string sim_input, sim_category = "websight";
  std::size_t sim_index = 0;
  simulate->add_option("--input", sim_input, "screen image tensor (default: generated scene)");
  simulate->add_option("--category", sim_category, "scene category when generating");
  simulate->add_option("--index", sim_index, "corpus index when generating");

  auto* invert = app.add_subcommand("invert", "reconstruct a screen image from an observation");
  std::string inv_input, inv_truth;
  invert->add_option("--input", inv_input, "observation tensor")->required()->check(CLI::ExistingFile);
  invert->add_option("--truth", inv_truth, "ground-truth tensor for scoring")->check(CLI::ExistingFile);
  add_scheme_flags(invert, s);

  auto* ablate = app.add_subcommand("ablate", "compare the four schemes across categories");
  std::vector<std::string> schemes{"prirr", "admm", "nag", "heavyball"};
  ablate->add_option("--schemes", schemes, "schemes to compare")->delimiter(',');
  add_scheme_flags(ablate, s);

  auto* lum = app.add_subcommand("sweep-luminance", "brightness offsets 0..300 nits");
  add_scheme_flags(lum, s);
  auto* geo = app.add_subcommand("sweep-geometry", "orbit, rotation and distance perturbations");
  add_scheme_flags(geo, s);

  auto* gen = app.add_subcommand("gen", "write a procedural scene corpus");
  std::vector<std::string> gen_categories;
  std::optional<std::size_t> gen_count, gen_size;
  gen->add_option("--category", gen_categories, "categories (default from config)")->delimiter(',');
  gen->add_option("--count", gen_count, "images per category");
  gen->add_option("--size", gen_size, "image extent, a power of two in [32, 256]");

  auto* icsr = app.add_subcommand("icsr-check", "ICSR gradient check against finite differences");
  int icsr_trials = 50;
  double icsr_h = 1e-6;
  icsr->add_option("--trials", icsr_trials, "seeded trials");
  icsr->add_option("--fd-step", icsr_h, "central-difference step");

  auto* eval = app.add_subcommand("eval", "score an estimate against ground truth");
  std::string eval_truth, eval_estimate, eval_label = "eval";
  eval->add_option("--truth", eval_truth, "ground-truth tensor")->required()->check(CLI::ExistingFile);
  eval->add_option("--estimate", eval_estimate, "estimate tensor")->required()->check(CLI::ExistingFile);
  eval->add_option("--label", eval_label, "condition label");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = resolve_config(g, s);
    const fs::path out = cfg.report.out_dir;

    if (*simulate) {
      Field2D truth;
      std::uint64_t seed = 0;
      if (!sim_input.empty()) {
        truth = load_field(sim_input);
      } else {
        const Category c = parse_category(sim_category);
        seed = item_seed(cfg.scene.seed, c, sim_index);
        truth = generate({c, cfg.scene.size, cfg.scene.size, seed}).image.radiance();
      }
      Rng rng(splitmix64(cfg.optics.noise_seed ^ seed));
      const WallObservation y = apply_transfer(ScreenImage(truth), cfg.optics, rng);
      fs::create_directories(out);
      save_field(out / "truth.irr4", ScreenImage(truth).radiance());
      save_field(out / "observation.irr4", y.irradiance());
      write_png_gray(out / "truth.png", ScreenImage(truth).radiance());
      write_png_gray(out / "observation.png", y.irradiance());
      write_text(out / "config.ini", to_config_text(cfg));
      std::printf("wrote %s\n", (out / "observation.irr4").string().c_str());
    } else if (*invert) {
      const WallObservation y(load_field(inv_input));
      OpticsConfig model = cfg.optics;
      if (cfg.psi_psf_sigma) model.psf_sigma = *cfg.psi_psf_sigma;
      const InversionProblem problem(y, model, cfg.scheme.psi_eps);
      const SchemeConfig sc = cfg.scheme.resolve(estimate_lipschitz(problem.channel(), cfg.scheme.reg_lambda));
      const InversionResult result = run_inversion(problem, sc);
      Field2D estimate = result.final_estimate;
      for (double& v : estimate.values()) v = std::clamp(v, 0.0, 1.0);
      fs::create_directories(out);
      save_field(out / "estimate.irr4", estimate);
      write_png_gray(out / "estimate.png", estimate);
      write_text(out / "residuals.csv", residual_csv(std::string(scheme_name(sc.scheme)), result.residual_history));
      write_text(out / "config.ini", to_config_text(cfg));
      std::printf("%s: %d iterations, converged %s, final residual %.3e\n",
                  std::string(scheme_name(sc.scheme)).c_str(), result.iterations_run,
                  result.converged ? "yes" : "no", result.residual_history.back());
      if (!inv_truth.empty()) {
        const std::vector<MetricRow> rows{score(std::string(scheme_name(sc.scheme)), load_field(inv_truth), estimate)};
        write_text(out / "report.csv", report_csv(rows));
        print_rows(rows);
      }
    } else if (*ablate) {
      std::vector<Scheme> set;
      for (const std::string& name : schemes) set.push_back(parse_scheme(name));
      ExperimentReport report = run_ablation(evaluation_items(cfg.scene), cfg, set);
      finish(report);
    } else if (*lum) {
      ExperimentReport report = run_luminance_sweep(evaluation_items(cfg.scene), cfg);
      finish(report);
    } else if (*geo) {
      ExperimentReport report = run_geometry_sweep(evaluation_items(cfg.scene), cfg);
      finish(report);
    } else if (*gen) {
      SceneConfig scene = cfg.scene;
      if (!gen_categories.empty()) {
        scene.categories.clear();
        for (const std::string& c : gen_categories) scene.categories.push_back(parse_category(c));
      }
      if (gen_count) scene.count = *gen_count;
      if (gen_size) scene.size = *gen_size;
      validate(SceneSpec{scene.categories.front(), scene.size, scene.size, 0});
      fs::create_directories(out);
      std::ostringstream manifest;
      manifest << "index,category,seed,split\n";
      for (const CorpusItem& item : build_corpus(scene)) {
        char stem[64];
        std::snprintf(stem, sizeof stem, "%s_%04zu", std::string(category_name(item.category)).c_str(), item.index);
        save_field(out / (std::string(stem) + ".irr4"), item.image);
        write_png_gray(out / (std::string(stem) + ".png"), item.image);
        manifest << item.index << "," << category_name(item.category) << "," << item.seed << "," << item.split << "\n";
      }
      write_text(out / "manifest.csv", manifest.str());
      std::printf("wrote %zu images to %s\n", scene.count * scene.categories.size(), out.string().c_str());
    } else if (*icsr) {
      const GradientCheckReport r = icsr_gradient_check(icsr_trials, cfg.scene.seed, icsr_h);
      fs::create_directories(out);
      write_text(out / "icsr_check.csv", "trials,components,max_rel_error,max_loss_deviation\n" +
                                             std::to_string(r.trials) + "," + std::to_string(r.components) + "," +
                                             format_double(r.max_rel_error) + "," +
                                             format_double(r.max_loss_deviation) + "\n");
      std::printf("trials %d, components %zu, max relative error %.3e, loss deviation %.3e\n", r.trials,
                  r.components, r.max_rel_error, r.max_loss_deviation);
    } else if (*eval) {
      const std::vector<MetricRow> rows{score(eval_label, load_field(eval_truth), load_field(eval_estimate))};
      fs::create_directories(out);
      write_text(out / "report.csv", report_csv(rows));
      print_rows(rows);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error [%s]: %s\n", e.field().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
