#include "speckle/inversion.hpp"

#include <cmath>
#include <string>

#include "speckle/error.hpp"
#include "speckle/grid_ops.hpp"
#include "speckle/rng.hpp"

namespace speckle {
namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}

void check_state(const IterateState& s, const InversionProblem& p) {
  if (s.estimate.height() != p.height() || s.estimate.width() != p.width() ||
      !s.momentum.same_shape(s.estimate)) {
    throw DimensionError("iterate state does not match the observation");
  }
}

IterateState advanced(const IterateState& state, const InversionProblem& problem, Field2D x) {
  IterateState next = state;
  next.estimate = std::move(x);
  next.k = state.k + 1;
  next.residual_history.push_back(problem.relative_residual(next.estimate));
  return next;
}

// NAG and Heavy-Ball share everything except where the gradient is taken.
IterateState inertial_step(const IterateState& state, const InversionProblem& problem,
                           const SchemeConfig& cfg, bool lookahead) {
  validate(cfg);
  check_state(state, problem);
  const Field2D& x = state.estimate;
  Field2D next(x.height(), x.width());
  if (lookahead) {
    Field2D y = x;
    axpy(cfg.momentum_beta, state.momentum, y);
    next = y;
    axpy(-cfg.step_size, problem.gradient(y, cfg.reg_lambda), next);
  } else {
    next = x;
    axpy(-cfg.step_size, problem.gradient(x, cfg.reg_lambda), next);
    axpy(cfg.momentum_beta, state.momentum, next);
  }
  IterateState out = advanced(state, problem, std::move(next));
  out.momentum = out.estimate - x;
  return out;
}

}  // namespace

std::string_view scheme_name(Scheme s) noexcept {
  switch (s) {
    case Scheme::Prirr: return "prirr";
    case Scheme::Admm: return "admm";
    case Scheme::Nag: return "nag";
    case Scheme::HeavyBall: return "heavyball";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::Prirr, Scheme::Admm, Scheme::Nag, Scheme::HeavyBall}) {
    if (scheme_name(s) == name) return s;
  }
  throw ArgumentError("unknown scheme '" + std::string(name) +
                      "' (expected prirr, admm, nag or heavyball)");
}

void validate(const SchemeConfig& c) {
  require(std::isfinite(c.step_size) && c.step_size > 0.0, "step_size", "must be > 0");
  require(c.momentum_beta >= 0.0 && c.momentum_beta < 1.0, "momentum_beta", "must be in [0, 1)");
  require(std::isfinite(c.admm_rho) && c.admm_rho > 0.0, "admm_rho", "must be > 0");
  require(std::isfinite(c.reg_lambda) && c.reg_lambda >= 0.0, "reg_lambda", "must be >= 0");
  require(std::isfinite(c.gate_gamma) && c.gate_gamma >= 0.0, "gate_gamma", "must be >= 0");
  require(c.max_iters >= 1, "max_iters", "must be >= 1");
  require(c.tol >= 0.0, "tol", "must be >= 0");
  require(std::isfinite(c.psi_eps) && c.psi_eps > 0.0, "psi_eps", "must be > 0");
}

InversionProblem::InversionProblem(const WallObservation& y, const OpticsConfig& cfg,
                                   double psi_eps)
    : channel_(cfg, y.irradiance().height(), y.irradiance().width()),
      y_lin_(linearize(y, cfg.gamma)),
      y_norm_(norm2(y_lin_)),
      psi_eps_(psi_eps) {
  if (!(psi_eps > 0.0)) throw ArgumentError("InversionProblem: psi_eps must be > 0");
}

Field2D InversionProblem::psi_y() const { return channel_.invert(y_lin_, psi_eps_); }

Field2D InversionProblem::data_residual(const Field2D& x) const {
  return y_lin_ - channel_.apply(x);
}

double InversionProblem::relative_residual(const Field2D& x) const {
  const double r = norm2(data_residual(x));
  return y_norm_ > 0.0 ? r / y_norm_ : r;
}

double InversionProblem::objective(const Field2D& x, double lambda) const {
  const double r = norm2(data_residual(x));
  const double n = norm2(x);
  return 0.5 * r * r + 0.5 * lambda * n * n;
}

Field2D InversionProblem::gradient(const Field2D& x, double lambda) const {
  Field2D g = channel_.adjoint(channel_.apply(x) - y_lin_);
  if (lambda != 0.0) axpy(lambda, x, g);
  return g;
}

double residual_gate(double rho, double gamma) noexcept { return std::exp(-gamma * rho * rho); }

double estimate_lipschitz(const LinearChannel& channel, double lambda, int iters,
                          std::uint64_t seed) {
  Rng rng(seed);
  Field2D v(channel.height(), channel.width());
  for (double& s : v.values()) s = rng.normal();
  v *= 1.0 / norm2(v);
  double estimate = 0.0;
  for (int i = 0; i < iters; ++i) {
    Field2D w = channel.adjoint(channel.apply(v));
    axpy(lambda, v, w);
    estimate = norm2(w);
    if (estimate == 0.0) return lambda;
    v = (1.0 / estimate) * std::move(w);
  }
  return estimate;
}

SchemeConfig recommended_scheme_config(Scheme scheme, double lipschitz) {
  if (!(lipschitz > 0.0)) throw ArgumentError("recommended_scheme_config: lipschitz must be > 0");
  SchemeConfig c;
  c.scheme = scheme;
  switch (scheme) {
    case Scheme::Prirr:
      // The feedback operator Psi A has spectrum in (0, 1].
      c.step_size = 0.3;
      c.momentum_beta = 0.2;
      break;
    case Scheme::Admm:
      c.admm_rho = 0.1 * lipschitz;
      break;
    case Scheme::Nag:
      c.step_size = 0.5 / lipschitz;
      c.momentum_beta = 0.15;
      break;
    case Scheme::HeavyBall:
      c.step_size = 0.5 / lipschitz;
      c.momentum_beta = 0.08;
      break;
  }
  return c;
}

IterateState initial_state(const InversionProblem& problem, const SchemeConfig& cfg,
                           const std::optional<Field2D>& initial) {
  validate(cfg);
  IterateState s;
  const Field2D psi = problem.psi_y();
  s.estimate = initial ? *initial : psi;
  s.momentum = Field2D(problem.height(), problem.width());
  check_state(s, problem);
  if (cfg.scheme == Scheme::Prirr) {
    static constexpr double kBinomial[] = {0.25, 0.5, 0.25};
    s.momentum = convolve_separable(psi - s.estimate, kBinomial, kBinomial);
  }
  if (cfg.scheme == Scheme::Admm) {
    s.aux = s.estimate;
    s.dual = Field2D(problem.height(), problem.width());
  }
  return s;
}

IterateState prirr_step(const IterateState& state, const InversionProblem& problem,
                        const SchemeConfig& cfg) {
  validate(cfg);
  check_state(state, problem);
  const Field2D d = problem.data_residual(state.estimate);
  const double y_norm = norm2(problem.y_lin());
  const double rho = y_norm > 0.0 ? norm2(d) / y_norm : norm2(d);
  const double g = residual_gate(rho, cfg.gate_gamma);

  // Psi is linear before its clamp, so Psi(y) - Psi(A x) = Psi(y - A x).
  const Field2D r = problem.channel().invert_unclamped(d, problem.psi_eps());
  Field2D m = cfg.momentum_beta * state.momentum;
  axpy(1.0 - cfg.momentum_beta, r, m);

  Field2D x = state.estimate;
  axpy(cfg.step_size * g, m, x);
  axpy(cfg.step_size * (1.0 - g), r, x);
  IterateState out = advanced(state, problem, std::move(x));
  out.momentum = std::move(m);
  return out;
}

IterateState heavyball_step(const IterateState& state, const InversionProblem& problem,
                            const SchemeConfig& cfg) {
  return inertial_step(state, problem, cfg, false);
}

IterateState nag_step(const IterateState& state, const InversionProblem& problem,
                      const SchemeConfig& cfg) {
  return inertial_step(state, problem, cfg, true);
}

IterateState admm_step(const IterateState& state, const InversionProblem& problem,
                       const SchemeConfig& cfg) {
  if (!(cfg.admm_rho > 0.0)) throw ArgumentError("admm_step: rho must be > 0");
  validate(cfg);
  check_state(state, problem);
  const std::size_t h = problem.height(), w = problem.width();
  const Field2D z = state.aux.empty() ? state.estimate : state.aux;
  const Field2D u = state.dual.empty() ? Field2D(h, w) : state.dual;
  if (!z.same_shape(state.estimate) || !u.same_shape(state.estimate)) {
    throw DimensionError("admm_step: split variables do not match the estimate");
  }
  const double rho = cfg.admm_rho;

  Field2D rhs = problem.channel().adjoint(problem.y_lin());
  axpy(rho, z - u, rhs);
  Field2D x = problem.channel().solve_normal(rhs, rho, state.estimate);

  Field2D z_next = (rho / (cfg.reg_lambda + rho)) * (x + u);
  Field2D u_next = u + x - z_next;
  IterateState out = advanced(state, problem, std::move(x));
  out.aux = std::move(z_next);
  out.dual = std::move(u_next);
  return out;
}

IterateState scheme_step(const IterateState& state, const InversionProblem& problem,
                         const SchemeConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::Prirr: return prirr_step(state, problem, cfg);
    case Scheme::Admm: return admm_step(state, problem, cfg);
    case Scheme::Nag: return nag_step(state, problem, cfg);
    case Scheme::HeavyBall: return heavyball_step(state, problem, cfg);
  }
  throw ArgumentError("scheme_step: unknown scheme");
}

IterateState prirr_step(const IterateState& state, const WallObservation& y,
                        const OpticsConfig& optics, const SchemeConfig& cfg) {
  return prirr_step(state, InversionProblem(y, optics, cfg.psi_eps), cfg);
}
IterateState heavyball_step(const IterateState& state, const WallObservation& y,
                            const OpticsConfig& optics, const SchemeConfig& cfg) {
  return heavyball_step(state, InversionProblem(y, optics, cfg.psi_eps), cfg);
}
IterateState nag_step(const IterateState& state, const WallObservation& y,
                      const OpticsConfig& optics, const SchemeConfig& cfg) {
  return nag_step(state, InversionProblem(y, optics, cfg.psi_eps), cfg);
}
IterateState admm_step(const IterateState& state, const WallObservation& y,
                       const OpticsConfig& optics, const SchemeConfig& cfg) {
  return admm_step(state, InversionProblem(y, optics, cfg.psi_eps), cfg);
}

InversionResult run_inversion(const InversionProblem& problem, const SchemeConfig& cfg,
                              const std::optional<Field2D>& initial) {
  validate(cfg);
  IterateState state = initial_state(problem, cfg, initial);
  InversionResult result;
  do {
    state = scheme_step(state, problem, cfg);
    result.converged = state.residual_history.back() <= cfg.tol;
  } while (!result.converged && state.k < cfg.max_iters);
  result.final_estimate = std::move(state.estimate);
  result.iterations_run = state.k;
  result.residual_history = std::move(state.residual_history);
  return result;
}

InversionResult run_inversion(const WallObservation& y, const OpticsConfig& optics,
                              const SchemeConfig& cfg, const std::optional<Field2D>& initial) {
  validate(cfg);
  return run_inversion(InversionProblem(y, optics, cfg.psi_eps), cfg, initial);
}

}  // namespace speckle
