#include "mcboost/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mcboost/hypothesis.hpp"
#include "mcboost/metrics.hpp"

namespace mcboost::verify {

namespace {

using dynamics::RoundRecord;
using dynamics::Trace;
using nlohmann::json;

constexpr double kIdentityTol = 1e-9;    // identities proved as equalities
constexpr double kInequalityTol = 1e-12; // proved inequalities hold to roundoff

struct Context {
  const Trace& trace;
  const dynamics::UpdateRule& rule;
  const dynamics::OracleMode& mode;
  std::optional<Matrix> x;
  bool exact;
  bool unit_like;  // unit rule, or relaxed with all recorded weights == 1
  std::string rule_kind;
  double eta;
  std::size_t steps;  // number of transitions = rounds.size() - 1
  std::vector<double> res_norm;  // ||y - f_t|| per record
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

CheckResult not_applicable(std::string name, std::string property, std::string why) {
  return CheckResult{std::move(name), std::move(property), "not-applicable", 0.0,
                     std::move(why)};
}

CheckResult judged(std::string name, std::string property, double worst_excess, double tol,
                   std::string detail) {
  CheckResult c;
  c.name = std::move(name);
  c.property = std::move(property);
  c.worst_violation = worst_excess - tol;
  c.status = c.worst_violation <= 0.0 ? "pass" : "fail";
  c.detail = std::move(detail);
  return c;
}

// --- individual checks -----------------------------------------------------

CheckResult check_records(const Context& ctx) {
  const auto& rounds = ctx.trace.rounds;
  const double n = static_cast<double>(ctx.trace.y.size());
  double worst = 0.0;
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < rounds.size(); ++t) {
    const Vector r = subtract(ctx.trace.y, rounds[t].f);
    const double rr = dot(r, r);
    double e = std::abs(rounds[t].train_mse - rr / n) / (1.0 + rr / n);
    e = std::max(e, std::abs(rounds[t].lyapunov - 0.5 * rr) / (1.0 + 0.5 * rr));
    if (t + 1 < rounds.size()) {
      const double gap = norm2(subtract(rounds[t + 1].f, rounds[t].f));
      e = std::max(e, std::abs(rounds[t].gap - gap) / (1.0 + gap));
      if (rounds[t].mce_bound) {
        const double bound = rounds[t].spectral_b * rounds[t].gap / (n * ctx.eta);
        e = std::max(e, std::abs(*rounds[t].mce_bound - bound) / (1.0 + bound));
      }
    }
    if (e > worst) {
      worst = e;
      worst_round = t;
    }
  }
  const double term =
      norm2(subtract(ctx.trace.terminal_f, rounds.back().f)) / (1.0 + norm2(ctx.trace.y));
  worst = std::max(worst, term);
  return judged("record-consistency", "recorded per-round scalars match the state vectors",
                worst, kIdentityTol, "worst mismatch at round " + std::to_string(worst_round));
}

CheckResult check_loss_monotone(const Context& ctx) {
  if (!(ctx.unit_like || ctx.rule_kind == "adaptive")) {
    return not_applicable("loss-monotone", "||y - f_{t+1}|| <= ||y - f_t||",
                          "guaranteed only for unit and adaptive rescaling");
  }
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t + 1 < ctx.trace.rounds.size(); ++t) {
    const double excess =
        (ctx.res_norm[t + 1] - ctx.res_norm[t]) / (1.0 + ctx.res_norm[t]);
    if (excess > worst) {
      worst = excess;
      worst_round = t;
    }
  }
  return judged("loss-monotone", "||y - f_{t+1}|| <= ||y - f_t|| every round", worst, 1e-12,
                "worst transition " + std::to_string(worst_round) + "->" +
                    std::to_string(worst_round + 1));
}

CheckResult check_gap_rate(const Context& ctx) {
  if (!ctx.unit_like) {
    return not_applicable("gap-rate-sublinear",
                          "min_t gap_t <= sqrt(eta)*||y-f0||/sqrt(T)",
                          "stated for unit rescaling only");
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < ctx.steps; ++t) min_gap = std::min(min_gap, ctx.trace.rounds[t].gap);
  const double bound = metrics::sublinear_bound(ctx.eta, ctx.res_norm[0], ctx.steps);
  const double excess = (min_gap - bound) / (1.0 + bound);
  return judged("gap-rate-sublinear", "min_t gap_t <= sqrt(eta)*||y-f0||/sqrt(T)", excess,
                1e-9, "min gap " + fmt(min_gap) + " vs bound " + fmt(bound));
}

CheckResult check_mce_gap_bound(const Context& ctx) {
  if (!ctx.unit_like) {
    return not_applicable("mce-gap-bound", "||mce_t||_2 <= ||B_t|| gap_t / (n eta)",
                          "stated for unit rescaling only");
  }
  if (!ctx.exact) {
    return not_applicable("mce-gap-bound", "||mce_t||_2 <= ||B_t|| gap_t / (n eta)",
                          "holds under the exact-projection oracle only");
  }
  const double n = static_cast<double>(ctx.trace.y.size());
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const RoundRecord& rec = ctx.trace.rounds[t];
    const double bound = rec.spectral_b * rec.gap / (n * ctx.eta);
    const double excess = (rec.mce_l2 - bound) / (1.0 + bound);
    if (excess > worst) {
      worst = excess;
      worst_round = t;
    }
  }
  return judged("mce-gap-bound", "||mce_t||_2 <= ||B_t|| gap_t / (n eta) every round", worst,
                kInequalityTol, "worst round " + std::to_string(worst_round));
}

CheckResult check_lyapunov_decrement(const Context& ctx) {
  if (!ctx.unit_like || !ctx.exact) {
    return not_applicable("lyapunov-decrement",
                          "V(f_t)-V(f_{t+1}) = (1/eta)(1-eta/2) gap_t^2",
                          ctx.exact ? "stated for unit rescaling only"
                                    : "holds under the exact-projection oracle only");
  }
  const double coeff = (1.0 / ctx.eta) * (1.0 - 0.5 * ctx.eta);
  double worst = 0.0;
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const double lhs = ctx.trace.rounds[t].lyapunov - ctx.trace.rounds[t + 1].lyapunov;
    const double rhs = coeff * ctx.trace.rounds[t].gap * ctx.trace.rounds[t].gap;
    const double err = std::abs(lhs - rhs) / (1.0 + ctx.trace.rounds[t].lyapunov);
    if (err > worst) {
      worst = err;
      worst_round = t;
    }
  }
  return judged("lyapunov-decrement", "V(f_t)-V(f_{t+1}) = (1/eta)(1-eta/2) gap_t^2", worst,
                kIdentityTol, "worst round " + std::to_string(worst_round));
}

CheckResult check_gap_contraction(const Context& ctx) {
  const std::string prop = "gap_{t+1} <= kappa * gap_t with measured Lipschitz constant";
  if (!ctx.unit_like) return not_applicable("gap-contraction", prop, "stated for unit rescaling");
  if (!ctx.exact) {
    return not_applicable("gap-contraction", prop,
                          "holds under the exact-projection oracle only");
  }
  if (!ctx.x) return not_applicable("gap-contraction", prop, "feature matrix unavailable");
  const auto& exact = std::get<dynamics::ExactProjection>(ctx.mode);
  if (!exact.cls.all_links_lipschitz()) {
    return not_applicable("gap-contraction", prop, "class has non-Lipschitz links");
  }
  if (ctx.steps < 2) return not_applicable("gap-contraction", prop, "needs at least 2 steps");

  // movement below the noise floor carries no Lipschitz information: the
  // projector difference is then dominated by decomposition roundoff
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() *
                       (1.0 + norm2(ctx.trace.y));
  double l_a = 0.0;
  for (std::size_t t = 1; t < ctx.steps; ++t) {
    const Vector& prev = ctx.trace.rounds[t - 1].f;
    const Vector& cur = ctx.trace.rounds[t].f;
    if (norm2(subtract(cur, prev)) <= floor) continue;
    l_a = std::max(l_a, hypothesis::measured_lipschitz_A(exact.cls, *ctx.x, prev, cur,
                                                         exact.rank_tol));
  }
  const double kappa = metrics::linear_kappa(ctx.eta, l_a, ctx.res_norm[0]);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = 1;
  for (std::size_t t = 1; t < ctx.steps; ++t) {
    if (ctx.trace.rounds[t - 1].gap <= floor) continue;  // converged
    const double rhs = kappa * ctx.trace.rounds[t - 1].gap;
    const double excess = (ctx.trace.rounds[t].gap - rhs) / (1.0 + rhs);
    if (excess > worst) {
      worst = excess;
      worst_round = t;
    }
  }
  return judged("gap-contraction", prop, worst, 1e-9,
                "measured L_A " + fmt(l_a) + ", kappa " + fmt(kappa) + ", worst round " +
                    std::to_string(worst_round));
}

CheckResult check_relaxed_loss_bound(const Context& ctx) {
  const std::string prop = "||y-f_t|| <= rho_t ||y-f0|| + (1-rho_t) ||y||";
  if (ctx.rule_kind != "relaxed" && ctx.rule_kind != "unit") {
    return not_applicable("relaxed-loss-bound", prop, "stated for unit/relaxed rescaling");
  }
  const double ny = norm2(ctx.trace.y);
  double rho = 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t + 1 < ctx.trace.rounds.size(); ++t) {
    rho *= ctx.trace.rounds[t].weight_used;
    const double bound = rho * ctx.res_norm[0] + (1.0 - rho) * ny;
    const double excess = (ctx.res_norm[t + 1] - bound) / (1.0 + bound);
    if (excess > worst) {
      worst = excess;
      worst_round = t + 1;
    }
  }
  return judged("relaxed-loss-bound", prop, worst, 1e-9,
                "worst round " + std::to_string(worst_round));
}

CheckResult check_relaxed_gap_rate(const Context& ctx) {
  const std::string prop = "min_t gap_t <= (sqrt(eta)||y-f0|| + gamma)/sqrt(T)";
  if (ctx.rule_kind != "relaxed") {
    return not_applicable("relaxed-gap-rate", prop, "stated for relaxed rescaling");
  }
  if (!ctx.exact) {
    return not_applicable("relaxed-gap-rate", prop,
                          "holds under the exact-projection oracle only");
  }
  const auto* relaxed = std::get_if<dynamics::RelaxedRule>(&ctx.rule);
  if (relaxed == nullptr ||
      relaxed->schedule.kind != dynamics::RelaxedSchedule::Kind::PowerLawCubic) {
    return not_applicable("relaxed-gap-rate", prop,
                          "series constants need the default power-law schedule");
  }
  const metrics::RelaxedConstants rc = metrics::relaxed_constants(
      relaxed->schedule, 1000000, ctx.eta, ctx.trace.y, ctx.trace.rounds[0].f);
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < ctx.steps; ++t) min_gap = std::min(min_gap, ctx.trace.rounds[t].gap);
  const double bound = (std::sqrt(ctx.eta) * ctx.res_norm[0] + rc.gamma) /
                       std::sqrt(static_cast<double>(ctx.steps));
  const double excess = (min_gap - bound) / (1.0 + bound);
  return judged("relaxed-gap-rate", prop, excess, 1e-9,
                "min gap " + fmt(min_gap) + " vs bound " + fmt(bound) + " (gamma " +
                    fmt(rc.gamma) + ")");
}

CheckResult check_relaxed_mce_identity(const Context& ctx) {
  const std::string prop =
      "mce_t = ((1-w)/(eta w n)) B^T f_t + (1/(eta w n)) B^T (f_{t+1}-f_t)";
  if (ctx.rule_kind != "relaxed" && ctx.rule_kind != "unit") {
    return not_applicable("relaxed-mce-identity", prop, "stated for unit/relaxed rescaling");
  }
  if (!ctx.exact) {
    return not_applicable("relaxed-mce-identity", prop,
                          "holds under the exact-projection oracle only");
  }
  if (!ctx.x) return not_applicable("relaxed-mce-identity", prop, "feature matrix unavailable");
  const auto& exact = std::get<dynamics::ExactProjection>(ctx.mode);
  const double n = static_cast<double>(ctx.trace.y.size());
  double worst = 0.0;
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const RoundRecord& rec = ctx.trace.rounds[t];
    const Matrix b = hypothesis::eval_B(exact.cls, *ctx.x, rec.f);
    const Vector mce = metrics::empirical_mce(b, ctx.trace.y, rec.f);
    const double w = rec.weight_used;
    const Vector bt_f = matvec_t(b, rec.f);
    const Vector bt_df = matvec_t(b, subtract(ctx.trace.rounds[t + 1].f, rec.f));
    double err = 0.0;
    for (std::size_t j = 0; j < mce.size(); ++j) {
      const double rhs =
          ((1.0 - w) / (ctx.eta * w * n)) * bt_f[j] + (1.0 / (ctx.eta * w * n)) * bt_df[j];
      err = std::max(err, std::abs(mce[j] - rhs) / (1.0 + std::abs(rhs)));
    }
    if (err > worst) {
      worst = err;
      worst_round = t;
    }
  }
  return judged("relaxed-mce-identity", prop, worst, kIdentityTol,
                "worst round " + std::to_string(worst_round));
}

CheckResult check_adaptive_weights(const Context& ctx) {
  const std::string prop = "omega_t >= 0 every round; omega_t trends to 1";
  if (ctx.rule_kind != "adaptive") {
    return not_applicable("adaptive-weight-nonneg", prop, "stated for adaptive rescaling");
  }
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const double excess = -ctx.trace.rounds[t].weight_used;
    if (excess > worst) {
      worst = excess;
      worst_round = t;
    }
  }
  // Trend diagnostics (not gated): distance of the final weight from 1 and
  // monotonicity of |y . phi_t| / ||phi_t|| recovered from f_{t+1} = w phi_t.
  const double last_w = ctx.trace.rounds[ctx.steps - 1].weight_used;
  std::size_t trend_breaks = 0;
  double prev = -1.0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const Vector& fn = ctx.trace.rounds[t + 1].f;
    const double nf = norm2(fn);
    if (nf == 0.0) continue;
    const double corr = std::abs(dot(ctx.trace.y, fn)) / nf;
    if (prev >= 0.0 && corr < prev - 1e-9 * (1.0 + prev)) ++trend_breaks;
    prev = corr;
  }
  return judged("adaptive-weight-nonneg", prop, worst, 1e-12,
                "worst round " + std::to_string(worst_round) + "; |w_last - 1| = " +
                    fmt(std::abs(last_w - 1.0)) + "; direction-alignment decreases: " +
                    std::to_string(trend_breaks));
}

// Window of consecutive steps inside the small-residual regime whose
// successor residual sits above the numerical noise floor.
std::pair<std::size_t, std::size_t> quadratic_window(const Context& ctx) {
  const double ny = norm2(ctx.trace.y);
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + ny);
  std::size_t best_start = 0, best_len = 0, start = 0, len = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const bool ok = ctx.res_norm[t] <= 0.01 * ny && ctx.res_norm[t] > 0.0 &&
                    ctx.res_norm[t + 1] >= floor;
    if (ok) {
      if (len == 0) start = t;
      ++len;
      if (len > best_len) {
        best_len = len;
        best_start = start;
      }
    } else {
      len = 0;
    }
  }
  return {best_start, best_len};
}

CheckResult check_adaptive_quadratic(const Context& ctx) {
  const std::string prop =
      "||r_{t+1}||/||r_t||^2 bounded by a run constant in the small-residual regime";
  if (ctx.rule_kind != "adaptive") {
    return not_applicable("adaptive-quadratic-ratio", prop, "stated for adaptive rescaling");
  }
  if (!ctx.exact || ctx.eta != 1.0) {
    return not_applicable("adaptive-quadratic-ratio", prop,
                          "stated for the exact-projection oracle at eta = 1");
  }
  const auto [start, len] = quadratic_window(ctx);
  if (len < 5) {
    return not_applicable("adaptive-quadratic-ratio", prop,
                          "fewer than 5 consecutive small-residual rounds (have " +
                              std::to_string(len) + ")");
  }
  std::vector<double> ratios(len);
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t t = start + i;
    ratios[i] = ctx.res_norm[t + 1] / (ctx.res_norm[t] * ctx.res_norm[t]);
  }
  // Run constant: twice the worse of the first two observed ratios.
  const double c_run = 2.0 * std::max(ratios[0], ratios[1]);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = start;
  for (std::size_t i = 0; i < len; ++i) {
    const double excess = (ratios[i] - c_run) / (1.0 + c_run);
    if (excess > worst) {
      worst = excess;
      worst_round = start + i;
    }
  }
  return judged("adaptive-quadratic-ratio", prop, worst, kInequalityTol,
                "window [" + std::to_string(start) + "," + std::to_string(start + len - 1) +
                    "], C = " + fmt(c_run) + ", worst round " + std::to_string(worst_round));
}

CheckResult check_residual_recurrence(const Context& ctx) {
  const std::string prop = "closed-form residual recurrence matches the recorded trajectory";
  if (ctx.rule_kind != "adaptive") {
    return not_applicable("residual-recurrence", prop, "stated for adaptive rescaling");
  }
  if (!ctx.exact || ctx.eta != 1.0) {
    return not_applicable("residual-recurrence", prop,
                          "stated for the exact-projection oracle at eta = 1");
  }
  if (!ctx.x) return not_applicable("residual-recurrence", prop, "feature matrix unavailable");
  const auto& exact = std::get<dynamics::ExactProjection>(ctx.mode);
  const double ny = norm2(ctx.trace.y);
  double worst = 0.0;
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const RoundRecord& rec = ctx.trace.rounds[t];
    const Vector r = subtract(ctx.trace.y, rec.f);
    const Matrix b = hypothesis::eval_B(exact.cls, *ctx.x, rec.f);
    const Vector ar = projector_apply(b, r, exact.rank_tol);
    const Vector q = subtract(r, ar);
    const Vector phi = subtract(ctx.trace.y, q);
    const double denom = dot(phi, phi);
    if (denom == 0.0) continue;  // degenerate state, rescaled to zero
    const double y_phi = dot(ctx.trace.y, phi);
    const double f_q = dot(rec.f, q);
    Vector pred(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      pred[i] = (y_phi * q[i] - f_q * ctx.trace.y[i]) / denom;
    }
    const Vector actual = subtract(ctx.trace.y, ctx.trace.rounds[t + 1].f);
    const double err = norm2(subtract(pred, actual)) / (1.0 + ny);
    if (err > worst) {
      worst = err;
      worst_round = t;
    }
  }
  return judged("residual-recurrence", prop, worst, 1e-10,
                "worst round " + std::to_string(worst_round));
}

CheckResult check_hybrid_contraction(const Context& ctx) {
  const std::string prop =
      "||y-f_{t+1}|| <= kappa ||y-f_t|| + eta gamma ||y - strong_pred||";
  if (ctx.rule_kind != "hybrid") {
    return not_applicable("hybrid-contraction", prop, "stated for the hybrid update");
  }
  if (!ctx.exact) {
    return not_applicable("hybrid-contraction", prop,
                          "holds under the exact-projection oracle only");
  }
  const auto* hybrid = std::get_if<dynamics::HybridRule>(&ctx.rule);
  if (hybrid == nullptr || hybrid->strong_pred.empty()) {
    return not_applicable("hybrid-contraction", prop, "strong predictor unavailable");
  }
  const double gamma = hybrid->gamma_mix;
  const double upper = 2.0 * gamma / ((1.0 + gamma) * (1.0 + gamma));
  if (!(ctx.eta > 0.0 && ctx.eta < upper)) {
    return not_applicable("hybrid-contraction", prop,
                          "eta outside the guarantee range (0, " + fmt(upper) + ")");
  }
  const double kappa = metrics::hybrid_kappa(ctx.eta, gamma);
  const double slack =
      ctx.eta * gamma * norm2(subtract(ctx.trace.y, hybrid->strong_pred));
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_round = 0;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    const double rhs = kappa * ctx.res_norm[t] + slack;
    const double excess = (ctx.res_norm[t + 1] - rhs) / (1.0 + rhs);
    if (excess > worst) {
      worst = excess;
      worst_round = t;
    }
  }
  return judged("hybrid-contraction", prop, worst, kInequalityTol,
                "kappa " + fmt(kappa) + ", slack " + fmt(slack) + ", worst round " +
                    std::to_string(worst_round));
}

}  // namespace

VerificationReport check_trace(const Trace& trace, const dynamics::UpdateRule& rule,
                               const dynamics::OracleMode& mode,
                               const std::optional<Matrix>& x_aux) {
  if (trace.rounds.empty()) throw ContractViolation("check_trace: trace has no rounds");
  if (trace.rounds.size() < 2) {
    throw ContractViolation("check_trace: trace needs at least one transition");
  }
  for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
    if (trace.rounds[i].t != i) {
      throw ContractViolation("check_trace: round indices are not consecutive from 0");
    }
    if (trace.rounds[i].f.size() != trace.y.size()) {
      throw ContractViolation("check_trace: prediction length mismatch at round " +
                              std::to_string(i));
    }
  }

  Context ctx{trace, rule, mode, x_aux, false, false, dynamics::rule_name(rule),
              trace.config.eta, trace.rounds.size() - 1, {}};
  if (!ctx.x && trace.aux_x) ctx.x = trace.aux_x;
  ctx.exact = std::holds_alternative<dynamics::ExactProjection>(mode);
  bool weights_all_one = true;
  for (std::size_t t = 0; t < ctx.steps; ++t) {
    if (trace.rounds[t].weight_used != 1.0) weights_all_one = false;
  }
  ctx.unit_like =
      ctx.rule_kind == "unit" || (ctx.rule_kind == "relaxed" && weights_all_one);
  ctx.res_norm.resize(trace.rounds.size());
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    ctx.res_norm[t] = norm2(subtract(trace.y, trace.rounds[t].f));
  }

  VerificationReport report;
  report.checks.push_back(check_records(ctx));
  report.checks.push_back(check_loss_monotone(ctx));
  report.checks.push_back(check_gap_rate(ctx));
  report.checks.push_back(check_mce_gap_bound(ctx));
  report.checks.push_back(check_lyapunov_decrement(ctx));
  report.checks.push_back(check_gap_contraction(ctx));
  report.checks.push_back(check_relaxed_loss_bound(ctx));
  report.checks.push_back(check_relaxed_gap_rate(ctx));
  report.checks.push_back(check_relaxed_mce_identity(ctx));
  report.checks.push_back(check_adaptive_weights(ctx));
  report.checks.push_back(check_adaptive_quadratic(ctx));
  report.checks.push_back(check_residual_recurrence(ctx));
  report.checks.push_back(check_hybrid_contraction(ctx));
  report.overall_pass = std::all_of(report.checks.begin(), report.checks.end(),
                                    [](const CheckResult& c) { return c.status != "fail"; });
  return report;
}

VerificationReport check_trace(const Trace& trace, const std::optional<Matrix>& x_aux) {
  const dynamics::RunSettings& c = trace.config;
  dynamics::UpdateRule rule = dynamics::UnitRule{};
  if (c.rule == "relaxed") {
    dynamics::RelaxedRule r;
    if (c.schedule_label != r.schedule.label) {
      r.schedule = dynamics::RelaxedSchedule::custom(
          c.schedule_label, [](std::size_t) -> double {
            throw ContractViolation("schedule reconstructed from label only");
          });
    }
    rule = r;
  } else if (c.rule == "adaptive") {
    rule = dynamics::AdaptiveRule{};
  } else if (c.rule == "hybrid") {
    rule = dynamics::HybridRule{c.gamma_mix, c.strong_pred};
  } else if (c.rule != "unit") {
    throw ContractViolation("check_trace: unknown rule '" + c.rule + "' in trace config");
  }
  dynamics::OracleMode mode = dynamics::BoostedTrees{c.n_trees, c.learn_rate, c.max_depth,
                                                     c.min_leaf};
  if (c.oracle == "exact") {
    mode = dynamics::ExactProjection{hypothesis::class_from_config(c.class_config),
                                     c.rank_tol};
  } else if (c.oracle != "trees") {
    throw ContractViolation("check_trace: unknown oracle '" + c.oracle + "' in trace config");
  }
  return check_trace(trace, rule, mode, x_aux);
}

double penrose_check(const Matrix& m, const Matrix& mp) {
  if (mp.rows() != m.cols() || mp.cols() != m.rows()) {
    throw ContractViolation("penrose_check: candidate pseudoinverse has the wrong shape");
  }
  const Matrix m_mp = matmul(m, mp);
  const Matrix mp_m = matmul(mp, m);
  double worst = 0.0;
  worst = std::max(worst, max_abs_diff(matmul(m_mp, m), m));
  worst = std::max(worst, max_abs_diff(matmul(mp_m, mp), mp));
  worst = std::max(worst, max_abs_diff(transpose(m_mp), m_mp));
  worst = std::max(worst, max_abs_diff(transpose(mp_m), mp_m));
  return worst;
}

double rank_one_update_spectrum_check(const Matrix& a, const Vector& v, double eta) {
  require(a.rows() == a.cols(), "rank_one_update_spectrum_check: A must be square");
  require(a.rows() == v.size(), "rank_one_update_spectrum_check: v length mismatch");
  require(eta > 0.0 && eta <= 1.0, "rank_one_update_spectrum_check: eta must be in (0,1]");
  const std::size_t n = a.rows();
  const double scale = max_abs(a);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      require(std::abs(a(i, j) - a(j, i)) <= tol_at_scale(1e-9, scale),
              "rank_one_update_spectrum_check: A is not symmetric");
    }
  }
  require(max_abs_diff(matmul(a, a), a) <= tol_at_scale(1e-9, scale),
          "rank_one_update_spectrum_check: A is not idempotent");
  const double vnorm = norm2(v);
  require(std::abs(vnorm - 1.0) <= 1e-9, "rank_one_update_spectrum_check: v must be unit");

  // rank(A) from the trace of the projector
  double tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr += a(i, i);
  const auto rank = static_cast<std::size_t>(std::llround(tr));

  const Vector av = matvec(a, v);
  Vector iav = subtract(v, av);  // (I - A) v
  const double beta = dot(iav, iav);

  // eta*A + (I - eta*A) v v^T has the same spectrum as the symmetric matrix
  // eta*A + (Cv)(Cv)^T with C = I - (1 - sqrt(1-eta)) A: C^2 = I - eta*A and
  // C commutes with A, so for eta < 1 this is an exact similarity; at eta = 1
  // the two matrices are block-triangular with identical diagonal blocks.
  const double shrink = 1.0 - std::sqrt(std::max(0.0, 1.0 - eta));
  Vector cv = v;
  axpy(cv, -shrink, av);
  Matrix m_sym(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m_sym(i, j) = eta * a(i, j) + cv[i] * cv[j];
  }
  const std::vector<double> spectrum = sym_eigenvalues(m_sym);
  double psd_violation = 0.0;
  for (double ev : spectrum) psd_violation = std::max(psd_violation, -ev);

  // Closed-form values with signed multiplicities; the 0-count may cancel the
  // spurious extra entry the closed form carries (it lists n+1 eigenvalues).
  constexpr double kMerge = 1e-6;
  std::vector<std::pair<double, long>> predicted;
  auto add = [&](double value, long count) {
    for (auto& [pv, pc] : predicted) {
      if (std::abs(pv - value) <= kMerge) {
        pc += count;
        return;
      }
    }
    predicted.emplace_back(value, count);
  };
  add(1.0, 1);
  add(eta * beta, 1);
  add(eta, static_cast<long>(rank));
  add(0.0, static_cast<long>(n) - 1 - static_cast<long>(rank));

  std::vector<double> predicted_vals;
  for (const auto& [pv, pc] : predicted) {
    if (pc > 0) predicted_vals.push_back(pv);
  }
  std::vector<double> actual_vals;
  for (double ev : spectrum) {
    bool merged = false;
    for (double& av2 : actual_vals) {
      if (std::abs(av2 - ev) <= kMerge) {
        merged = true;
        break;
      }
    }
    if (!merged) actual_vals.push_back(ev);
  }
  auto hausdorff = [](const std::vector<double>& xs, const std::vector<double>& ys) {
    double worst = 0.0;
    for (double x : xs) {
      double best = std::numeric_limits<double>::infinity();
      for (double y : ys) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  const double dev =
      std::max(hausdorff(predicted_vals, actual_vals), hausdorff(actual_vals, predicted_vals));
  return std::max(dev, psd_violation);
}

std::string report_to_json(const VerificationReport& report) {
  json j;
  j["overall"] = report.overall_pass ? "pass" : "fail";
  j["checks"] = json::array();
  for (const CheckResult& c : report.checks) {
    j["checks"].push_back(json{{"name", c.name},
                               {"property", c.property},
                               {"status", c.status},
                               {"worst_violation", c.worst_violation},
                               {"detail", c.detail}});
  }
  return j.dump(2);
}

std::string report_to_text(const VerificationReport& report) {
  std::ostringstream os;
  std::size_t name_w = 4;
  for (const CheckResult& c : report.checks) name_w = std::max(name_w, c.name.size());
  os << "overall: " << (report.overall_pass ? "pass" : "fail") << "\n";
  for (const CheckResult& c : report.checks) {
    os << "  " << c.name << std::string(name_w - c.name.size() + 2, ' ');
    os << c.status;
    if (c.status != "not-applicable") {
      os << "  worst_violation=" << fmt(c.worst_violation);
    }
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace mcboost::verify
