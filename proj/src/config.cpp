#include "speckle/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "speckle/error.hpp"

namespace speckle {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

std::vector<Category> to_categories(const std::string& key, const std::string& text) {
  std::vector<Category> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_category(trim(item)));
    } catch (const ArgumentError& e) {
      throw ConfigError(key, e.what());
    }
  }
  if (out.empty()) throw ConfigError(key, "needs at least one category");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class F>
Setter number(F field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    field(c) = to_double(k, v);
  };
}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"optics",
       {
           {"psf_sigma", number([](ExperimentConfig& c) -> double& { return c.optics.psf_sigma; })},
           {"albedo", number([](ExperimentConfig& c) -> double& { return c.optics.albedo; })},
           {"base_distance_m", number([](ExperimentConfig& c) -> double& { return c.optics.base_distance_m; })},
           {"distance_m", number([](ExperimentConfig& c) -> double& { return c.optics.distance_m; })},
           {"brightness_offset_nits",
            number([](ExperimentConfig& c) -> double& { return c.optics.brightness_offset_nits; })},
           {"gamma", number([](ExperimentConfig& c) -> double& { return c.optics.gamma; })},
           {"noise_sigma", number([](ExperimentConfig& c) -> double& { return c.optics.noise_sigma; })},
           {"screen_max_nits", number([](ExperimentConfig& c) -> double& { return c.optics.screen_max_nits; })},
           {"noise_seed",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.optics.noise_seed = to_u64(k, v); }},
           {"pitch_deg", number([](ExperimentConfig& c) -> double& { return c.optics.pose.pitch_deg; })},
           {"yaw_deg", number([](ExperimentConfig& c) -> double& { return c.optics.pose.yaw_deg; })},
           {"roll_deg", number([](ExperimentConfig& c) -> double& { return c.optics.pose.roll_deg; })},
           {"horiz_arc_deg", number([](ExperimentConfig& c) -> double& { return c.optics.pose.horiz_arc_deg; })},
           {"vert_arc_deg", number([](ExperimentConfig& c) -> double& { return c.optics.pose.vert_arc_deg; })},
           {"psi_psf_sigma",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.psi_psf_sigma = to_double(k, v); }},
       }},
      {"scheme",
       {
           {"scheme",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              try {
                c.scheme.scheme = parse_scheme(trim(v));
              } catch (const ArgumentError& e) {
                throw ConfigError(k, e.what());
              }
            }},
           {"step_size",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.scheme.step_size = to_double(k, v); }},
           {"momentum_beta",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.scheme.momentum_beta = to_double(k, v);
            }},
           {"admm_rho",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.scheme.admm_rho = to_double(k, v); }},
           {"reg_lambda", number([](ExperimentConfig& c) -> double& { return c.scheme.reg_lambda; })},
           {"gate_gamma", number([](ExperimentConfig& c) -> double& { return c.scheme.gate_gamma; })},
           {"max_iters",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const std::uint64_t n = to_u64(k, v);
              if (n > 1000000) throw ConfigError(k, "must be <= 1000000");
              c.scheme.max_iters = static_cast<int>(n);
            }},
           {"tol", number([](ExperimentConfig& c) -> double& { return c.scheme.tol; })},
           {"psi_eps", number([](ExperimentConfig& c) -> double& { return c.scheme.psi_eps; })},
       }},
      {"scene",
       {
           {"categories",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.scene.categories = to_categories(k, v);
            }},
           {"size", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.scene.size = to_u64(k, v); }},
           {"count", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.scene.count = to_u64(k, v); }},
           {"subset",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const std::string t = trim(v);
              if (t == "test") c.scene.subset = Subset::Test;
              else if (t == "all") c.scene.subset = Subset::All;
              else throw ConfigError(k, "expected 'test' or 'all', got '" + v + "'");
            }},
           {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.scene.seed = to_u64(k, v); }},
       }},
      {"report",
       {
           {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.report.out_dir = trim(v); }},
           {"grid",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.report.grid_items = to_u64(k, v); }},
           {"threads",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.report.threads = to_u64(k, v); }},
       }},
  };
  return table;
}

}  // namespace

SchemeConfig SchemeSettings::resolve(double lipschitz) const {
  SchemeConfig cfg = recommended_scheme_config(scheme, lipschitz);
  if (step_size) cfg.step_size = *step_size;
  if (momentum_beta) cfg.momentum_beta = *momentum_beta;
  if (admm_rho) cfg.admm_rho = *admm_rho;
  cfg.reg_lambda = reg_lambda;
  cfg.gate_gamma = gate_gamma;
  cfg.max_iters = max_iters;
  cfg.tol = tol;
  cfg.psi_eps = psi_eps;
  validate(cfg);
  return cfg;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError(section, "unknown config section");
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside a section");
    for (const auto& [key, value] : body) {
      const std::string qualified = section + "." + key;
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError(qualified, "unknown config key");
      setter->second(cfg, qualified, value.data());
    }
  }
  validate(cfg);
  return cfg;
}

void apply_setting(ExperimentConfig& cfg, const std::string& qualified_key, const std::string& value) {
  const auto dot = qualified_key.find('.');
  const auto& table = setters();
  const auto sec = table.find(qualified_key.substr(0, dot));
  if (dot == std::string::npos || sec == table.end()) {
    throw ConfigError(qualified_key, "expected section.key");
  }
  const auto setter = sec->second.find(qualified_key.substr(dot + 1));
  if (setter == sec->second.end()) throw ConfigError(qualified_key, "unknown config key");
  setter->second(cfg, qualified_key, value);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto d = [](double v) { return format_double(v); };
  const OpticsConfig& o = c.optics;
  out << "[optics]\n"
      << "psf_sigma = " << d(o.psf_sigma) << "\n"
      << "albedo = " << d(o.albedo) << "\n"
      << "base_distance_m = " << d(o.base_distance_m) << "\n"
      << "distance_m = " << d(o.distance_m) << "\n"
      << "brightness_offset_nits = " << d(o.brightness_offset_nits) << "\n"
      << "gamma = " << d(o.gamma) << "\n"
      << "noise_sigma = " << d(o.noise_sigma) << "\n"
      << "screen_max_nits = " << d(o.screen_max_nits) << "\n"
      << "noise_seed = " << o.noise_seed << "\n"
      << "pitch_deg = " << d(o.pose.pitch_deg) << "\n"
      << "yaw_deg = " << d(o.pose.yaw_deg) << "\n"
      << "roll_deg = " << d(o.pose.roll_deg) << "\n"
      << "horiz_arc_deg = " << d(o.pose.horiz_arc_deg) << "\n"
      << "vert_arc_deg = " << d(o.pose.vert_arc_deg) << "\n";
  if (c.psi_psf_sigma) out << "psi_psf_sigma = " << d(*c.psi_psf_sigma) << "\n";
  const SchemeSettings& s = c.scheme;
  out << "\n[scheme]\n"
      << "scheme = " << scheme_name(s.scheme) << "\n";
  if (s.step_size) out << "step_size = " << d(*s.step_size) << "\n";
  if (s.momentum_beta) out << "momentum_beta = " << d(*s.momentum_beta) << "\n";
  if (s.admm_rho) out << "admm_rho = " << d(*s.admm_rho) << "\n";
  out << "reg_lambda = " << d(s.reg_lambda) << "\n"
      << "gate_gamma = " << d(s.gate_gamma) << "\n"
      << "max_iters = " << s.max_iters << "\n"
      << "tol = " << d(s.tol) << "\n"
      << "psi_eps = " << d(s.psi_eps) << "\n";
  out << "\n[scene]\ncategories = ";
  for (std::size_t i = 0; i < c.scene.categories.size(); ++i) {
    out << (i ? "," : "") << category_name(c.scene.categories[i]);
  }
  out << "\nsize = " << c.scene.size << "\n"
      << "count = " << c.scene.count << "\n"
      << "subset = " << (c.scene.subset == Subset::Test ? "test" : "all") << "\n"
      << "seed = " << c.scene.seed << "\n";
  out << "\n[report]\n"
      << "out = " << c.report.out_dir.string() << "\n"
      << "grid = " << c.report.grid_items << "\n"
      << "threads = " << c.report.threads << "\n";
  return out.str();
}

void validate(const ExperimentConfig& c) {
  validate(c.optics);
  if (c.psi_psf_sigma && !(std::isfinite(*c.psi_psf_sigma) && *c.psi_psf_sigma >= 0.0)) {
    throw ConfigError("optics.psi_psf_sigma", "must be >= 0");
  }
  SchemeConfig probe = c.scheme.resolve(1.0);
  (void)probe;
  validate(SceneSpec{c.scene.categories.front(), c.scene.size, c.scene.size, 0});
  if (c.scene.count == 0) throw ConfigError("scene.count", "must be >= 1");
  if (c.scene.subset == Subset::Test && c.scene.count < 10) {
    throw ConfigError("scene.count", "the test subset needs at least 10 images per category");
  }
  if (c.report.threads == 0) throw ConfigError("report.threads", "must be >= 1");
}

}  // namespace speckle
