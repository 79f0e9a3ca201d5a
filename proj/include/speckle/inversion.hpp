#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "speckle/field.hpp"
#include "speckle/optics.hpp"

namespace speckle {

enum class Scheme { Prirr, Admm, Nag, HeavyBall };

std::string_view scheme_name(Scheme s) noexcept;  // "prirr", "admm", "nag", "heavyball"
Scheme parse_scheme(std::string_view name);       // ArgumentError on unknown names

struct SchemeConfig {
  Scheme scheme = Scheme::Prirr;
  double step_size = 1.0;
  double momentum_beta = 0.5;
  double admm_rho = 1.0;
  double reg_lambda = 0.0;
  double gate_gamma = 1.0;  // PRIRR only
  int max_iters = 200;
  double tol = 1e-4;
  double psi_eps = 1e-6;  // Wiener regularizer of the feedback inverse
};

// Throws ConfigError naming the offending field.
void validate(const SchemeConfig& cfg);

struct IterateState {
  Field2D estimate;
  // PRIRR: the feedback moving average m. NAG / Heavy-Ball: the last
  // displacement x_k - x_{k-1}. Unused by ADMM.
  Field2D momentum;
  int k = 0;
  std::vector<double> residual_history;  // residual of the estimate after each step
  Field2D aux;   // ADMM split variable z
  Field2D dual;  // ADMM scaled dual u
};

struct InversionResult {
  Field2D final_estimate;
  int iterations_run = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

// A linearized inverse problem: the observation mapped back through the
// camera response (y_lin = y^gamma) and the linear channel A = s B W. The
// schemes minimize f(x) = 1/2 |A x - y_lin|^2 + lambda/2 |x|^2.
class InversionProblem {
 public:
  InversionProblem(const WallObservation& y, const OpticsConfig& cfg, double psi_eps = 1e-6);

  const LinearChannel& channel() const noexcept { return channel_; }
  const Field2D& y_lin() const noexcept { return y_lin_; }
  double psi_eps() const noexcept { return psi_eps_; }
  std::size_t height() const noexcept { return y_lin_.height(); }
  std::size_t width() const noexcept { return y_lin_.width(); }

  // The clamped inverse approximation of the observation.
  Field2D psi_y() const;
  // y_lin - A x
  Field2D data_residual(const Field2D& x) const;
  // |y_lin - A x| / |y_lin|; the absolute norm when y_lin is zero.
  double relative_residual(const Field2D& x) const;
  double objective(const Field2D& x, double lambda) const;
  Field2D gradient(const Field2D& x, double lambda) const;

 private:
  LinearChannel channel_;
  Field2D y_lin_;
  double y_norm_;
  double psi_eps_;
};

// exp(-gamma * rho^2)
double residual_gate(double rho, double gamma) noexcept;

// Largest eigenvalue of A^T A + lambda I by power iteration from a seeded
// random start. 1 / L is the classic safe gradient step.
double estimate_lipschitz(const LinearChannel& channel, double lambda, int iters = 50,
                          std::uint64_t seed = 0);

// Hyperparameters that keep every eigenmode of the identity-pose quadratic
// overdamped (eta * lambda_i <= (1 - sqrt(beta))^2 for Heavy-Ball and the
// PRIRR moving average, ((1 - beta) / (1 + beta))^2 for NAG), so the objective
// decreases monotonically. `lipschitz` is estimate_lipschitz of the channel.
SchemeConfig recommended_scheme_config(Scheme scheme, double lipschitz);

// Starting state for a scheme. `initial` defaults to the clamped inverse
// approximation of y. PRIRR seeds its moving average with a 3x3 binomial
// smoothing of (psi_y - x0); ADMM starts with z = x0 and u = 0.
IterateState initial_state(const InversionProblem& problem, const SchemeConfig& cfg,
                           const std::optional<Field2D>& initial = std::nullopt);

IterateState prirr_step(const IterateState& state, const InversionProblem& problem,
                        const SchemeConfig& cfg);
IterateState heavyball_step(const IterateState& state, const InversionProblem& problem,
                            const SchemeConfig& cfg);
IterateState nag_step(const IterateState& state, const InversionProblem& problem,
                      const SchemeConfig& cfg);
IterateState admm_step(const IterateState& state, const InversionProblem& problem,
                       const SchemeConfig& cfg);
// Dispatches on cfg.scheme.
IterateState scheme_step(const IterateState& state, const InversionProblem& problem,
                         const SchemeConfig& cfg);

// Conveniences that build the problem from the raw observation.
IterateState prirr_step(const IterateState& state, const WallObservation& y,
                        const OpticsConfig& optics, const SchemeConfig& cfg);
IterateState heavyball_step(const IterateState& state, const WallObservation& y,
                            const OpticsConfig& optics, const SchemeConfig& cfg);
IterateState nag_step(const IterateState& state, const WallObservation& y,
                      const OpticsConfig& optics, const SchemeConfig& cfg);
IterateState admm_step(const IterateState& state, const WallObservation& y,
                       const OpticsConfig& optics, const SchemeConfig& cfg);

// Steps until the relative residual reaches cfg.tol or cfg.max_iters steps
// have run. At least one step is always taken.
InversionResult run_inversion(const InversionProblem& problem, const SchemeConfig& cfg,
                              const std::optional<Field2D>& initial = std::nullopt);
InversionResult run_inversion(const WallObservation& y, const OpticsConfig& optics,
                              const SchemeConfig& cfg,
                              const std::optional<Field2D>& initial = std::nullopt);

}  // namespace speckle
