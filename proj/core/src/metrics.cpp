#include "mcboost/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mcboost::metrics {

Vector empirical_mce(const Matrix& b, const Vector& y, const Vector& f) {
  require(y.size() == f.size(), "empirical_mce: y and f lengths disagree");
  require(b.rows() == y.size(), "empirical_mce: B row count must equal n");
  const Vector r = subtract(y, f);
  return scaled(matvec_t(b, r), 1.0 / static_cast<double>(y.size()));
}

double mce_upper_bound(double b_norm, double gap, std::size_t n, double eta) {
  require(n >= 1, "mce_upper_bound: n must be at least 1");
  require(eta > 0.0, "mce_upper_bound: eta must be positive");
  return b_norm * gap / (static_cast<double>(n) * eta);
}

double sublinear_bound(double eta, double init_res_norm, std::size_t rounds) {
  require(rounds >= 1, "sublinear_bound: T must be at least 1");
  require(eta > 0.0 && eta <= 1.0, "sublinear_bound: eta must be in (0,1]");
  return std::sqrt(eta) * init_res_norm / std::sqrt(static_cast<double>(rounds));
}

double linear_kappa(double eta, double l_a, double init_res_norm) {
  require(eta > 0.0 && eta <= 1.0, "linear_kappa: eta must be in (0,1]");
  require(l_a >= 0.0, "linear_kappa: L_A must be nonnegative");
  return 1.0 - eta + eta * l_a * init_res_norm;
}

RelaxedConstants relaxed_constants(const dynamics::RelaxedSchedule& schedule,
                                   std::size_t horizon, double eta, const Vector& y,
                                   const Vector& f0) {
  require(horizon >= 1, "relaxed_constants: horizon must be at least 1");
  require(y.size() == f0.size(), "relaxed_constants: y and f0 lengths disagree");
  require(eta > 0.0 && eta <= 1.0, "relaxed_constants: eta must be in (0,1]");

  RelaxedConstants out;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double w = schedule(t);
    if (!(w > 0.0 && w <= 1.0)) {
      throw ContractViolation("relaxed_constants: schedule value " + std::to_string(w) +
                              " at round " + std::to_string(t) + " is outside (0,1]");
    }
    const double d = 1.0 - w;
    out.c_w += d;
    out.c_w_sq += d * d;
  }
  if (schedule.kind == dynamics::RelaxedSchedule::Kind::PowerLawCubic) {
    // Integral tails of sum (t+2)^-3 and sum (t+2)^-6 past the horizon.
    const double h = static_cast<double>(horizon) + 2.0;
    out.c_w += 1.0 / (2.0 * h * h);
    out.c_w_sq += 1.0 / (5.0 * h * h * h * h * h);
  }

  const double ny = norm2(y);
  const double nr0 = norm2(subtract(y, f0));
  out.rho = std::max(2.0 * ny * ny, (ny + nr0) * nr0);
  out.rho_tilde = ny + std::max(nr0, ny);

  const double a = 2.0 * eta * out.rho * out.c_w;
  const double b = out.rho_tilde * out.c_w_sq;
  const double gamma_sq = a + 2.0 * std::sqrt(nr0 * nr0 + a) * std::sqrt(b) + b;
  out.gamma = std::sqrt(std::max(0.0, gamma_sq));
  return out;
}

double hybrid_kappa(double eta, double gamma_mix) {
  require(gamma_mix > 0.0, "hybrid_kappa: gamma_mix must be positive");
  const double upper = 2.0 * gamma_mix / ((1.0 + gamma_mix) * (1.0 + gamma_mix));
  if (!(eta > 0.0 && eta < upper)) {
    throw ContractViolation("hybrid_kappa: eta must lie in (0, 2*gamma/(1+gamma)^2) = (0, " +
                            std::to_string(upper) + ")");
  }
  const double inner =
      1.0 - ((1.0 + gamma_mix) * (1.0 + gamma_mix) / gamma_mix) * eta;
  return std::sqrt(std::max(0.0, 1.0 - 2.0 * gamma_mix * eta * inner));
}

RateFit fit_log_linear(const std::vector<double>& gaps, std::size_t start, std::size_t end) {
  require(end < gaps.size(), "fit_log_linear: window end exceeds the gap sequence");
  require(start <= end, "fit_log_linear: empty window");
  const std::size_t len = end - start + 1;
  require(len >= 3, "fit_log_linear: window must span at least 3 rounds");

  std::vector<double> logs(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double g = gaps[start + i];
    if (!(g > 0.0)) {
      throw ContractViolation("fit_log_linear: nonpositive gap at round " +
                              std::to_string(start + i) + "; shrink the window");
    }
    logs[i] = std::log(g);
  }
  double mean_t = 0.0, mean_l = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    mean_t += static_cast<double>(start + i);
    mean_l += logs[i];
  }
  mean_t /= static_cast<double>(len);
  mean_l /= static_cast<double>(len);
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double dt = static_cast<double>(start + i) - mean_t;
    const double dl = logs[i] - mean_l;
    stt += dt * dt;
    stl += dt * dl;
    sll += dl * dl;
  }
  RateFit fit;
  fit.window_start = start;
  fit.window_end = end;
  if (sll == 0.0) {
    // all log-gaps identical: the flat line fits exactly
    fit.slope = 0.0;
    fit.intercept = mean_l;
    fit.r2 = 1.0;
    fit.kappa_hat = 1.0;
    return fit;
  }
  fit.slope = stl / stt;
  fit.intercept = mean_l - fit.slope * mean_t;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double pred = fit.intercept + fit.slope * static_cast<double>(start + i);
    ss_res += (logs[i] - pred) * (logs[i] - pred);
  }
  fit.r2 = std::clamp(1.0 - ss_res / sll, 0.0, 1.0);
  fit.kappa_hat = std::exp(fit.slope);
  return fit;
}

std::pair<bool, std::pair<std::size_t, std::size_t>> default_fit_window(
    const std::vector<double>& gaps, double y_norm) {
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + y_norm);
  std::size_t start = std::min<std::size_t>(2, gaps.size());
  std::size_t end = start;
  for (std::size_t i = start; i < gaps.size(); ++i) {
    if (gaps[i] <= floor) break;
    end = i;
  }
  if (end < start || end - start + 1 < 3) return {false, {0, 0}};
  return {true, {start, end}};
}

double mse(const Vector& y, const Vector& f) {
  require(y.size() == f.size(), "mse: length mismatch");
  const Vector r = subtract(y, f);
  return dot(r, r) / static_cast<double>(y.size());
}

double lyapunov(const Vector& y, const Vector& f) {
  require(y.size() == f.size(), "lyapunov: length mismatch");
  const Vector r = subtract(y, f);
  return 0.5 * dot(r, r);
}

}  // namespace mcboost::metrics
