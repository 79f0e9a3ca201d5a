#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "speckle/error.hpp"
#include "speckle/experiments.hpp"
#include "speckle/rng.hpp"

using namespace speckle;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.scene.size = 32;
  cfg.scene.count = 2;
  cfg.scene.subset = Subset::All;
  cfg.scheme.max_iters = 5;
  cfg.report.grid_items = 2;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool rows_equal(const MetricRow& a, const MetricRow& b) {
  return a.psnr == b.psnr && a.rmse == b.rmse && a.ssim == b.ssim;
}

}  // namespace

TEST_CASE("config parses every section") {
  const ExperimentConfig c = parse_config(R"(
# comment
[optics]
psf_sigma = 1.5
noise_sigma = 0.01
yaw_deg = 3
psi_psf_sigma = 2
[scheme]
scheme = nag
step_size = 0.25
max_iters = 42
tol = 0
[scene]
categories = chart, password
size = 32
count = 12
subset = test
seed = 9
[report]
out = results
grid = 3
threads = 2
)");
  CHECK(c.optics.psf_sigma == 1.5);
  CHECK(c.optics.noise_sigma == 0.01);
  CHECK(c.optics.pose.yaw_deg == 3.0);
  CHECK(c.psi_psf_sigma == 2.0);
  CHECK(c.scheme.scheme == Scheme::Nag);
  CHECK(c.scheme.step_size == 0.25);
  CHECK_FALSE(c.scheme.momentum_beta.has_value());
  CHECK(c.scheme.max_iters == 42);
  CHECK(c.scheme.tol == 0.0);
  CHECK(c.scene.categories == std::vector<Category>{Category::Chart, Category::Password});
  CHECK(c.scene.size == 32);
  CHECK(c.scene.count == 12);
  CHECK(c.scene.seed == 9);
  CHECK(c.report.out_dir == "results");
  CHECK(c.report.grid_items == 3);
  CHECK(c.report.threads == 2);
}

TEST_CASE("config text round trips") {
  ExperimentConfig c;
  c.optics.psf_sigma = 0.1 + 0.2;
  c.optics.noise_seed = 123456789012345ULL;
  c.optics.pose.roll_deg = -4.25;
  c.scheme.momentum_beta = 1.0 / 3.0;
  c.scheme.scheme = Scheme::Admm;
  c.scene.categories = {Category::Screen};
  c.scene.count = 11;
  const ExperimentConfig back = parse_config(to_config_text(c));
  CHECK(back.optics == c.optics);
  CHECK(back.scheme.momentum_beta == c.scheme.momentum_beta);
  CHECK(back.scheme.scheme == Scheme::Admm);
  CHECK(back.scene.categories == c.scene.categories);
  CHECK(to_config_text(back) == to_config_text(c));
}

TEST_CASE("config errors name the key") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of("[optics]\npsf_sigma = wide\n") == "optics.psf_sigma");
  CHECK(field_of("[optics]\nfocus = 1\n") == "optics.focus");
  CHECK(field_of("[lens]\nx = 1\n") == "lens");
  CHECK(field_of("[scheme]\nscheme = sgd\n") == "scheme.scheme");
  CHECK(field_of("[scene]\nsize = 48\n") == "size");
  CHECK(field_of("[scene]\ncount = 5\n") == "scene.count");
  CHECK(field_of("[scene]\nsubset = some\n") == "scene.subset");
  CHECK(field_of("[optics]\nalbedo = 2\n") == "albedo");
  CHECK(field_of("[report]\nthreads = 0\n") == "report.threads");
  CHECK_THROWS_AS(parse_config("[optics\n"), FormatError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.ini"), ConfigError);
}

TEST_CASE("scheme settings resolve against the recommended preset") {
  SchemeSettings s;
  s.scheme = Scheme::HeavyBall;
  const SchemeConfig base = s.resolve(4.0);
  CHECK(base.step_size == recommended_scheme_config(Scheme::HeavyBall, 4.0).step_size);
  s.step_size = 0.01;
  s.tol = 0.0;
  const SchemeConfig over = s.resolve(4.0);
  CHECK(over.step_size == 0.01);
  CHECK(over.momentum_beta == base.momentum_beta);
  CHECK(over.tol == 0.0);
}

TEST_CASE("corpus is deterministic and split per category") {
  SceneConfig scene;
  scene.size = 32;
  scene.count = 10;
  const auto a = build_corpus(scene), b = build_corpus(scene);
  REQUIRE(a.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].split == b[i].split);
  }
  const auto test = evaluation_items(scene);
  CHECK(test.size() == 4);
  for (const auto& item : test) CHECK(item.split == "test");
  CHECK(item_seed(0, Category::Chart, 3) != item_seed(0, Category::Screen, 3));
  CHECK(item_seed(0, Category::Chart, 3) != item_seed(1, Category::Chart, 3));
}

TEST_CASE("condition results do not depend on thread count") {
  const ExperimentConfig cfg = small_config();
  const auto items = evaluation_items(cfg.scene);
  const auto one = evaluate_condition("c", items, cfg.optics, std::nullopt, cfg.scheme, 1, 1);
  const auto four = evaluate_condition("c", items, cfg.optics, std::nullopt, cfg.scheme, 4, 1);
  CHECK(rows_equal(one.row, four.row));
  CHECK(one.residuals == four.residuals);
  REQUIRE(one.samples.size() == 1);
  CHECK(one.samples[0].estimate == four.samples[0].estimate);
  CHECK_THROWS_AS(evaluate_condition("c", {}, cfg.optics, std::nullopt, cfg.scheme, 1), ArgumentError);
}

TEST_CASE("ablation row accounting") {
  const ExperimentConfig cfg = small_config();
  const auto items = evaluation_items(cfg.scene);
  const auto single = run_ablation(items, cfg, {Scheme::Admm});
  REQUIRE(single.rows.size() == 4);
  CHECK(single.rows[0].condition == "admm/websight");
  CHECK(single.rows[3].condition == "admm/screen");
  const auto all = run_ablation(items, cfg, {Scheme::Prirr, Scheme::Admm, Scheme::Nag, Scheme::HeavyBall});
  CHECK(all.rows.size() == 16);
  CHECK(all.residuals.size() == 16);
  CHECK(rows_equal(all.rows[4], single.rows[0]));
  CHECK_THROWS_AS(run_ablation(items, cfg, {}), ArgumentError);
}

TEST_CASE("noiseless ablation recovers well") {
  ExperimentConfig cfg = small_config();
  cfg.scene.size = 64;
  cfg.scheme.max_iters = 50;
  const auto rep = run_ablation(evaluation_items(cfg.scene), cfg,
                                {Scheme::Prirr, Scheme::Admm, Scheme::Nag, Scheme::HeavyBall});
  for (const MetricRow& r : rep.rows) {
    CAPTURE(r.condition);
    CHECK(r.psnr >= 35.0);
  }
}

TEST_CASE("luminance sweep baseline and trend") {
  ExperimentConfig cfg = small_config();
  cfg.scene.categories = {Category::Chart};
  const auto items = evaluation_items(cfg.scene);
  const auto sweep = run_luminance_sweep(items, cfg);
  REQUIRE(sweep.rows.size() == 13);
  CHECK(sweep.rows.front().condition == "offset=0");
  CHECK(sweep.rows.back().condition == "offset=300");
  const auto base = run_ablation(items, cfg, {cfg.scheme.scheme});
  CHECK(rows_equal(sweep.rows.front(), base.rows.front()));
  for (std::size_t i = 1; i < sweep.rows.size(); ++i) CHECK(sweep.rows[i].psnr <= sweep.rows[i - 1].psnr + 0.1);
}

TEST_CASE("geometry sweep layout and identity row") {
  const ExperimentConfig cfg = small_config();
  const auto conds = geometry_conditions(cfg.optics);
  REQUIRE(conds.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) CHECK(conds[i].family == (i < 5 ? "orbit" : i < 10 ? "rotation" : "distance"));
  CHECK(conds[5].optics == cfg.optics);
  CHECK(conds[10].optics == cfg.optics);
  CHECK(conds[14].optics.distance_m == 6.0);
  CHECK(conds[8].optics.pose == Pose{8, 5, 4, 0, 0});

  const auto items = evaluation_items(cfg.scene);
  const auto rep = run_geometry_sweep(items, cfg);
  REQUIRE(rep.rows.size() == 15);
  const auto base = evaluate_condition("base", items, cfg.optics, std::nullopt, cfg.scheme, 1);
  CHECK(rows_equal(rep.rows[5], base.row));
  CHECK(rows_equal(rep.rows[10], base.row));
}

TEST_CASE("mismatched psf override changes the inversion only") {
  ExperimentConfig cfg = small_config();
  const auto items = evaluation_items(cfg.scene);
  const auto known = evaluate_condition("k", items, cfg.optics, std::nullopt, cfg.scheme, 1, 1);
  const auto same = evaluate_condition("k", items, cfg.optics, cfg.optics.psf_sigma, cfg.scheme, 1, 1);
  const auto wrong = evaluate_condition("w", items, cfg.optics, 2.0, cfg.scheme, 1, 1);
  CHECK(rows_equal(known.row, same.row));
  CHECK(wrong.samples[0].observation == known.samples[0].observation);
  CHECK(wrong.row.psnr < known.row.psnr);
}

TEST_CASE("reports are written and reproducible") {
  const ExperimentConfig cfg = small_config();
  const auto dir = std::filesystem::temp_directory_path() / "speckle_test_report";
  std::filesystem::remove_all(dir);
  auto items = evaluation_items(cfg.scene);
  auto first = run_ablation(items, cfg, {Scheme::Prirr});
  write_report(first, dir / "a");
  auto second = run_ablation(evaluation_items(cfg.scene), cfg, {Scheme::Prirr});
  write_report(second, dir / "b");
  for (const char* f : {"report.csv", "residuals.csv", "grid.png", "config.ini"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const std::string csv = slurp(first.csv_path);
  CHECK(csv.rfind("condition,psnr,rmse,ssim\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(slurp(first.residuals_path).rfind("condition,iter,residual\n", 0) == 0);
  CHECK(to_config_text(load_config(dir / "a" / "config.ini")) == to_config_text(cfg));
  std::filesystem::remove_all(dir);
}

TEST_CASE("single settings apply by qualified key") {
  ExperimentConfig c;
  apply_setting(c, "optics.noise_sigma", "0.02");
  apply_setting(c, "scheme.scheme", "admm");
  CHECK(c.optics.noise_sigma == 0.02);
  CHECK(c.scheme.scheme == Scheme::Admm);
  CHECK_THROWS_AS(apply_setting(c, "noise_sigma", "1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "optics.blur", "1"), ConfigError);
}

TEST_CASE("full brightness offset sits at the noise floor") {
  ExperimentConfig cfg = small_config();
  cfg.optics.noise_sigma = 1e-3;
  cfg.optics.noise_seed = 5;
  cfg.scheme.psi_eps = 1e-2;
  const auto items = evaluation_items(cfg.scene);
  const auto sweep = run_luminance_sweep(items, cfg, {0.0, 300.0});

  // Oracle: a zero-signal capture built by hand from the same noise stream.
  double floor_psnr = 0.0;
  for (const CorpusItem& item : items) {
    Rng rng(splitmix64(cfg.optics.noise_seed ^ item.seed));
    Field2D v(item.image.height(), item.image.width());
    for (double& s : v.values()) s = std::max(0.0, cfg.optics.noise_sigma * rng.normal());
    const InversionProblem problem(WallObservation(v), cfg.optics, cfg.scheme.psi_eps);
    Field2D est = run_inversion(problem, cfg.scheme.resolve(estimate_lipschitz(problem.channel(), 0.0))).final_estimate;
    for (double& s : est.values()) s = std::clamp(s, 0.0, 1.0);
    floor_psnr += psnr(item.image, est) / static_cast<double>(items.size());
  }
  CHECK(std::abs(sweep.rows[1].psnr - floor_psnr) <= 3.0);
  CHECK(sweep.rows[1].psnr < sweep.rows[0].psnr);
}
