#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mcboost/dynamics.hpp"
#include "mcboost/linalg.hpp"

namespace mcboost::metrics {

// Empirical multicalibration error vector (1/n) B^T (y - f).
Vector empirical_mce(const Matrix& b, const Vector& y, const Vector& f);

// ||B|| * gap / (n * eta): the bound tying the multicalibration error to the
// movement of the predictions under unit weights.
double mce_upper_bound(double b_norm, double gap, std::size_t n, double eta);

// sqrt(eta) * ||y - f0|| / sqrt(T): the sublinear bound on the minimum gap.
double sublinear_bound(double eta, double init_res_norm, std::size_t rounds);

// 1 - eta + eta * L_A * ||y - f0||: per-round gap contraction factor under a
// Lipschitz projector map.
double linear_kappa(double eta, double l_a, double init_res_norm);

struct RelaxedConstants {
  double c_w = 0.0;       // sum (1 - w_t)
  double c_w_sq = 0.0;    // sum (1 - w_t)^2
  double rho = 0.0;
  double rho_tilde = 0.0;
  double gamma = 0.0;
};

// Constants in the relaxed-weights rate bound. Series are truncated at
// `horizon` terms; for the default power-law schedule an integral tail bound
// is added on top of the partial sums.
RelaxedConstants relaxed_constants(const dynamics::RelaxedSchedule& schedule,
                                   std::size_t horizon, double eta, const Vector& y,
                                   const Vector& f0);

// Contraction factor sqrt(1 - 2*gamma*eta*(1 - ((1+gamma)^2/gamma)*eta)) of
// the mixed strong/weak update. Requires eta in (0, 2*gamma/(1+gamma)^2);
// note the factor drops below 1 only on the lower half of that interval.
double hybrid_kappa(double eta, double gamma_mix);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double kappa_hat = 1.0;
  std::size_t window_start = 0;
  std::size_t window_end = 0;  // inclusive
};

// OLS of log(gap_t) on t over the inclusive window [start, end]. All gaps in
// the window must be positive and the window must span at least 3 rounds.
// If the log-gaps have zero variance the fit is exact by convention: slope 0,
// r2 = 1.
RateFit fit_log_linear(const std::vector<double>& gaps, std::size_t start, std::size_t end);

// Default window: drop the first two rounds (burn-in) and everything from the
// first gap that falls below 1e3 * eps * y_norm (log of numerical zero).
// Returns nullopt-like (0,0) window via the bool when fewer than 3 rounds
// survive.
std::pair<bool, std::pair<std::size_t, std::size_t>> default_fit_window(
    const std::vector<double>& gaps, double y_norm);

double mse(const Vector& y, const Vector& f);
double lyapunov(const Vector& y, const Vector& f);

}  // namespace mcboost::metrics
