#include "mcboost/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace mcboost::dynamics {

namespace {

using nlohmann::json;

Matrix augment_with_predictions(const Matrix& x, const Vector& f) {
  require(x.rows() == f.size(), "augment: row count mismatch");
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto src = x.row(i);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[x.cols()] = f[i];  // prediction is the last column
  }
  return out;
}

// Everything the round loop needs from one oracle call at state f.
struct OracleEval {
  Vector update;            // projection of the residual / fitted prediction
  Vector mce;               // (1/n) B^T (y - f)
  double spectral_b = 0.0;  // ||B(f)||_2
  std::optional<Vector> theta;                 // exact mode coefficients
  std::optional<trees::TreeEnsemble> ensemble; // tree mode round ensemble
};

OracleEval evaluate_oracle(const Matrix& x, const Vector& y, const Vector& f,
                           const OracleMode& mode) {
  const Vector r = subtract(y, f);
  const double n = static_cast<double>(y.size());
  OracleEval ev;
  if (const auto* exact = std::get_if<ExactProjection>(&mode)) {
    const Matrix b = hypothesis::eval_B(exact->cls, x, f);
    const SvdResult d = svd(b, exact->rank_tol);
    ev.update = projector_apply(d, r);
    ev.spectral_b = d.singular_values.empty() ? 0.0 : d.singular_values.front();
    ev.mce = scaled(matvec_t(b, r), 1.0 / n);
    Vector theta(b.cols(), 0.0);
    for (std::size_t k = 0; k < d.numeric_rank; ++k) {
      double coeff = 0.0;
      for (std::size_t i = 0; i < b.rows(); ++i) coeff += d.u(i, k) * r[i];
      coeff /= d.singular_values[k];
      for (std::size_t j = 0; j < b.cols(); ++j) theta[j] += coeff * d.vt(k, j);
    }
    ev.theta = std::move(theta);
  } else {
    const auto& cfg = std::get<BoostedTrees>(mode);
    const Matrix xa = augment_with_predictions(x, f);
    trees::TreeEnsemble ens =
        trees::gbm_fit(xa, r, cfg.n_trees, cfg.learn_rate, cfg.max_depth, cfg.min_leaf);
    ev.update = trees::predict(ens, xa);
    const Matrix b = trees::tree_evaluation_matrix(ens, xa);
    ev.spectral_b = spectral_norm(b);
    ev.mce = scaled(matvec_t(b, r), 1.0 / n);
    ev.ensemble = std::move(ens);
  }
  return ev;
}

double linf_norm(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct RuleOutcome {
  Vector f_next;
  double weight = 1.0;
};

RuleOutcome apply_rule(const Vector& y, const Vector& f, const OracleEval& ev,
                       const UpdateRule& rule, double eta, std::size_t t) {
  RuleOutcome out;
  if (std::holds_alternative<UnitRule>(rule)) {
    out.f_next = f;
    axpy(out.f_next, eta, ev.update);
    out.weight = 1.0;
  } else if (const auto* relaxed = std::get_if<RelaxedRule>(&rule)) {
    const double w = relaxed->schedule(t);
    if (!(w > 0.0 && w <= 1.0)) {
      throw ContractViolation("relaxed schedule value " + std::to_string(w) + " at round " +
                              std::to_string(t) + " is outside (0,1]");
    }
    Vector cand = f;
    axpy(cand, eta, ev.update);
    out.f_next = scaled(cand, w);
    out.weight = w;
  } else if (std::holds_alternative<AdaptiveRule>(rule)) {
    Vector phi = f;
    axpy(phi, eta, ev.update);
    const double w = adaptive_weight(y, phi);
    out.f_next = scaled(phi, w);
    out.weight = w;
  } else {
    const auto& hybrid = std::get<HybridRule>(rule);
    require(hybrid.strong_pred.size() == f.size(),
            "hybrid rule: strong predictor length must match n");
    out.f_next = f;
    axpy(out.f_next, eta, ev.update);
    for (std::size_t i = 0; i < f.size(); ++i) {
      out.f_next[i] += eta * hybrid.gamma_mix * (hybrid.strong_pred[i] - f[i]);
    }
    out.weight = 1.0;
  }
  return out;
}

// Test-side replica of the round update: exact mode re-evaluates the class on
// the test rows and reuses the fitted coefficients; tree mode applies the
// fitted ensemble to the augmented test rows. The train-side weight w is a
// scalar rescaling of the predictor and applies unchanged.
Vector propagate_test(const Matrix& x_test, const Vector& f_test, const OracleEval& ev,
                      const OracleMode& mode, const UpdateRule& rule, double eta, double w,
                      const Vector& strong_pred_test) {
  Vector update;
  if (const auto* exact = std::get_if<ExactProjection>(&mode)) {
    const Matrix b = hypothesis::eval_B(exact->cls, x_test, f_test);
    update = matvec(b, *ev.theta);
  } else {
    update = trees::predict(*ev.ensemble, augment_with_predictions(x_test, f_test));
  }
  if (std::holds_alternative<HybridRule>(rule)) {
    const double gamma = std::get<HybridRule>(rule).gamma_mix;
    require(strong_pred_test.size() == f_test.size(),
            "hybrid rule: test strong predictor length must match test n");
    Vector out = f_test;
    for (std::size_t i = 0; i < f_test.size(); ++i) {
      out[i] += eta * (update[i] + gamma * (strong_pred_test[i] - f_test[i]));
    }
    return out;
  }
  Vector cand = f_test;
  axpy(cand, eta, update);
  return scaled(cand, w);
}

void test_metrics_at_state(const Matrix& x_test, const Vector& y_test, const Vector& f_test,
                           const OracleEval& ev, const OracleMode& mode, TestSeries& series) {
  const Vector r = subtract(y_test, f_test);
  const double n = static_cast<double>(y_test.size());
  series.mse.push_back(dot(r, r) / n);
  Vector mce;
  if (const auto* exact = std::get_if<ExactProjection>(&mode)) {
    const Matrix b = hypothesis::eval_B(exact->cls, x_test, f_test);
    mce = scaled(matvec_t(b, r), 1.0 / n);
  } else {
    const Matrix b = trees::tree_evaluation_matrix(*ev.ensemble,
                                                   augment_with_predictions(x_test, f_test));
    mce = scaled(matvec_t(b, r), 1.0 / n);
  }
  series.mce_l2.push_back(norm2(mce));
  series.mce_linf.push_back(linf_norm(mce));
}

json vector_to_json(const Vector& v) { return json(v); }

Vector vector_from_json(const json& j) { return j.get<Vector>(); }

void format_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

double relaxed_default_schedule(std::size_t t) {
  const double base = static_cast<double>(t) + 2.0;
  return 1.0 - 1.0 / (base * base * base);
}

double RelaxedSchedule::operator()(std::size_t t) const {
  if (kind == Kind::PowerLawCubic) return relaxed_default_schedule(t);
  require(static_cast<bool>(fn), "RelaxedSchedule: custom schedule has no function");
  return fn(t);
}

RelaxedSchedule RelaxedSchedule::power_law_cubic() { return RelaxedSchedule{}; }

RelaxedSchedule RelaxedSchedule::custom(std::string label,
                                        std::function<double(std::size_t)> fn) {
  RelaxedSchedule s;
  s.kind = Kind::Custom;
  s.fn = std::move(fn);
  s.label = std::move(label);
  return s;
}

std::string rule_name(const UpdateRule& rule) {
  if (std::holds_alternative<UnitRule>(rule)) return "unit";
  if (std::holds_alternative<RelaxedRule>(rule)) return "relaxed";
  if (std::holds_alternative<AdaptiveRule>(rule)) return "adaptive";
  return "hybrid";
}

std::string mode_name(const OracleMode& mode) {
  return std::holds_alternative<ExactProjection>(mode) ? "exact" : "trees";
}

double adaptive_weight(const Vector& y, const Vector& phi) {
  require(y.size() == phi.size(), "adaptive_weight: length mismatch");
  const double denom = dot(phi, phi);
  if (denom == 0.0) return 0.0;  // degenerate direction: rescale to zero
  return dot(y, phi) / denom;
}

std::pair<Vector, double> step(const Matrix& x, const Vector& y, const Vector& f,
                               const UpdateRule& rule, const OracleMode& mode, double eta,
                               std::size_t t) {
  require(eta > 0.0 && eta <= 1.0, "step: eta must be in (0,1]");
  require(x.rows() == y.size() && y.size() == f.size(), "step: dimension mismatch");
  const OracleEval ev = evaluate_oracle(x, y, f, mode);
  RuleOutcome out = apply_rule(y, f, ev, rule, eta, t);
  return {std::move(out.f_next), out.weight};
}

Vector hybrid_step(const Matrix& x, const Vector& y, const Vector& f, const OracleMode& mode,
                   double eta, double gamma_mix, const Vector& strong_pred) {
  require(gamma_mix > 0.0, "hybrid_step: gamma_mix must be positive");
  require(strong_pred.size() == f.size(), "hybrid_step: strong predictor length mismatch");
  HybridRule rule{gamma_mix, strong_pred};
  auto [f_next, w] = step(x, y, f, UpdateRule{rule}, mode, eta, 0);
  (void)w;
  return f_next;
}

Vector residual_recurrence(const Vector& y, const Matrix& a, const Vector& r) {
  require(a.rows() == a.cols(), "residual_recurrence: A must be square");
  require(a.rows() == y.size() && y.size() == r.size(),
          "residual_recurrence: dimension mismatch");
  const double scale = max_abs(a);
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol_at_scale(1e-9, scale)) {
        throw ContractViolation("residual_recurrence: A is not symmetric");
      }
    }
  }
  const Matrix a2 = matmul(a, a);
  if (max_abs_diff(a2, a) > tol_at_scale(1e-9, scale)) {
    throw ContractViolation("residual_recurrence: A is not idempotent");
  }
  const Vector ar = matvec(a, r);
  Vector q = subtract(r, ar);           // (I - A) r
  Vector phi = subtract(y, q);          // y - (I - A) r
  const double denom = dot(phi, phi);
  if (denom == 0.0) {
    throw ContractViolation("residual_recurrence: degenerate geometry (zero denominator)");
  }
  const Vector f = subtract(y, r);
  const double y_phi = dot(y, phi);
  const double f_q = dot(f, q);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (y_phi * q[i] - f_q * y[i]) / denom;
  return out;
}

Trace run(const Matrix& x, const Vector& y, const Vector& f0, const UpdateRule& rule,
          const OracleMode& mode, double eta, std::size_t rounds, const RunOptions& options) {
  require(rounds >= 1, "run: need at least one round");
  require(eta > 0.0 && eta <= 1.0, "run: eta must be in (0,1]");
  require(x.rows() == y.size() && y.size() == f0.size(), "run: dimension mismatch");
  require_finite(y, "run: y");
  require_finite(f0, "run: f0");

  Trace trace;
  trace.config = options.config;
  trace.config.rule = rule_name(rule);
  trace.config.oracle = mode_name(mode);
  trace.config.eta = eta;
  trace.config.rounds = rounds;
  if (const auto* relaxed = std::get_if<RelaxedRule>(&rule)) {
    trace.config.schedule_label = relaxed->schedule.label;
  }
  if (const auto* hybrid = std::get_if<HybridRule>(&rule)) {
    trace.config.gamma_mix = hybrid->gamma_mix;
    trace.config.strong_pred = hybrid->strong_pred;
  }
  if (const auto* exact = std::get_if<ExactProjection>(&mode)) {
    trace.config.class_config = hypothesis::to_config(exact->cls);
    trace.config.rank_tol = exact->rank_tol;
  } else {
    const auto& cfg = std::get<BoostedTrees>(mode);
    trace.config.n_trees = cfg.n_trees;
    trace.config.learn_rate = cfg.learn_rate;
    trace.config.max_depth = cfg.max_depth;
    trace.config.min_leaf = cfg.min_leaf;
  }
  trace.y = y;
  if (x.rows() * x.cols() <= options.embed_x_limit) trace.aux_x = x;

  const double n = static_cast<double>(y.size());
  const bool is_unit = std::holds_alternative<UnitRule>(rule);
  Vector f = f0;
  std::optional<TestSeries> test_series;
  Vector f_test;
  if (options.test) {
    require(options.test->x.rows() == options.test->y.size() &&
                options.test->y.size() == options.test->f0.size(),
            "run: test set dimension mismatch");
    test_series = TestSeries{};
    f_test = options.test->f0;
  }

  try {
    for (std::size_t t = 0; t < rounds; ++t) {
      const OracleEval ev = evaluate_oracle(x, y, f, mode);
      if (test_series) {
        test_metrics_at_state(options.test->x, options.test->y, f_test, ev, mode,
                              *test_series);
      }
      RuleOutcome out = apply_rule(y, f, ev, rule, eta, t);
      const Vector r = subtract(y, f);
      RoundRecord rec;
      rec.t = t;
      rec.f = f;
      rec.weight_used = out.weight;
      rec.gap = norm2(subtract(out.f_next, f));
      rec.train_mse = dot(r, r) / n;
      rec.mce_l2 = norm2(ev.mce);
      rec.mce_linf = linf_norm(ev.mce);
      rec.lyapunov = 0.5 * dot(r, r);
      rec.spectral_b = ev.spectral_b;
      if (is_unit) rec.mce_bound = ev.spectral_b * rec.gap / (n * eta);
      require_finite(rec.f, "run: predictions at round " + std::to_string(t));
      trace.rounds.push_back(std::move(rec));

      if (test_series) {
        f_test = propagate_test(options.test->x, f_test, ev, mode, rule, eta, out.weight,
                                options.test->strong_pred);
      }
      f = std::move(out.f_next);
    }
    // Terminal record: oracle evaluated once more for the state metrics only.
    const OracleEval ev = evaluate_oracle(x, y, f, mode);
    if (test_series) {
      test_metrics_at_state(options.test->x, options.test->y, f_test, ev, mode, *test_series);
    }
    const Vector r = subtract(y, f);
    RoundRecord rec;
    rec.t = rounds;
    rec.f = f;
    rec.weight_used = 1.0;
    rec.gap = 0.0;
    rec.train_mse = dot(r, r) / n;
    rec.mce_l2 = norm2(ev.mce);
    rec.mce_linf = linf_norm(ev.mce);
    rec.lyapunov = 0.5 * dot(r, r);
    rec.spectral_b = ev.spectral_b;
    require_finite(rec.f, "run: terminal predictions");
    trace.rounds.push_back(std::move(rec));
  } catch (const NumericFailure& e) {
    trace.terminal_f = f;
    throw RunAborted(std::string("run aborted: ") + e.what(), trace);
  } catch (const ContractViolation& e) {
    if (trace.rounds.empty()) throw;  // bad inputs, nothing recorded yet
    trace.terminal_f = f;
    throw RunAborted(std::string("run aborted: ") + e.what(), trace);
  }

  trace.terminal_f = f;
  trace.test = std::move(test_series);
  return trace;
}

std::string trace_to_json(const Trace& trace) {
  json j;
  const RunSettings& c = trace.config;
  j["config"] = {{"dataset_id", c.dataset_id},
                 {"dataset_path", c.dataset_path},
                 {"rule", c.rule},
                 {"oracle", c.oracle},
                 {"schedule", c.schedule_label},
                 {"gamma_mix", c.gamma_mix},
                 {"class_config", c.class_config},
                 {"rank_tol", c.rank_tol},
                 {"n_trees", c.n_trees},
                 {"learn_rate", c.learn_rate},
                 {"max_depth", c.max_depth},
                 {"min_leaf", c.min_leaf},
                 {"eta", c.eta},
                 {"rounds", c.rounds},
                 {"seed", c.seed},
                 {"init", c.init},
                 {"notes", c.notes}};
  if (!c.strong_pred.empty()) j["config"]["strong_pred"] = vector_to_json(c.strong_pred);
  j["y"] = vector_to_json(trace.y);
  j["rounds"] = json::array();
  for (const RoundRecord& r : trace.rounds) {
    json jr = {{"t", r.t},
               {"f", vector_to_json(r.f)},
               {"weight_used", r.weight_used},
               {"gap", r.gap},
               {"train_mse", r.train_mse},
               {"mce_l2", r.mce_l2},
               {"mce_linf", r.mce_linf},
               {"lyapunov", r.lyapunov},
               {"spectral_b", r.spectral_b}};
    if (r.mce_bound) jr["mce_bound"] = *r.mce_bound;
    j["rounds"].push_back(std::move(jr));
  }
  j["terminal_f"] = vector_to_json(trace.terminal_f);
  if (trace.aux_x) {
    j["aux_x"] = {{"rows", trace.aux_x->rows()},
                  {"cols", trace.aux_x->cols()},
                  {"data", trace.aux_x->data()}};
  }
  if (trace.test) {
    j["test"] = {{"mse", trace.test->mse},
                 {"mce_l2", trace.test->mce_l2},
                 {"mce_linf", trace.test->mce_linf}};
  }
  return j.dump(2);
}

Trace trace_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("trace_from_json: parse error: ") + e.what());
  }
  try {
    Trace trace;
    const json& jc = j.at("config");
    RunSettings& c = trace.config;
    c.dataset_id = jc.value("dataset_id", std::string("unspecified"));
    c.dataset_path = jc.value("dataset_path", std::string());
    c.rule = jc.at("rule").get<std::string>();
    c.oracle = jc.at("oracle").get<std::string>();
    c.schedule_label = jc.value("schedule", std::string());
    c.gamma_mix = jc.value("gamma_mix", 0.0);
    c.class_config = jc.value("class_config", std::string());
    c.rank_tol = jc.value("rank_tol", kDefaultRankTol);
    c.n_trees = jc.value("n_trees", std::size_t{100});
    c.learn_rate = jc.value("learn_rate", 0.1);
    c.max_depth = jc.value("max_depth", std::size_t{3});
    c.min_leaf = jc.value("min_leaf", std::size_t{1});
    c.eta = jc.at("eta").get<double>();
    c.rounds = jc.at("rounds").get<std::size_t>();
    c.seed = jc.value("seed", std::uint64_t{0});
    c.init = jc.value("init", std::string());
    c.notes = jc.value("notes", std::string());
    if (jc.contains("strong_pred")) c.strong_pred = vector_from_json(jc.at("strong_pred"));
    trace.y = vector_from_json(j.at("y"));
    for (const json& jr : j.at("rounds")) {
      RoundRecord r;
      r.t = jr.at("t").get<std::size_t>();
      r.f = vector_from_json(jr.at("f"));
      r.weight_used = jr.at("weight_used").get<double>();
      r.gap = jr.at("gap").get<double>();
      r.train_mse = jr.at("train_mse").get<double>();
      r.mce_l2 = jr.at("mce_l2").get<double>();
      r.mce_linf = jr.at("mce_linf").get<double>();
      r.lyapunov = jr.at("lyapunov").get<double>();
      r.spectral_b = jr.at("spectral_b").get<double>();
      if (jr.contains("mce_bound")) r.mce_bound = jr.at("mce_bound").get<double>();
      trace.rounds.push_back(std::move(r));
    }
    trace.terminal_f = vector_from_json(j.at("terminal_f"));
    if (j.contains("aux_x")) {
      const json& jx = j.at("aux_x");
      trace.aux_x = Matrix(jx.at("rows").get<std::size_t>(), jx.at("cols").get<std::size_t>(),
                           jx.at("data").get<std::vector<double>>());
    }
    if (j.contains("test")) {
      TestSeries ts;
      ts.mse = j.at("test").at("mse").get<Vector>();
      ts.mce_l2 = j.at("test").at("mce_l2").get<Vector>();
      ts.mce_linf = j.at("test").at("mce_linf").get<Vector>();
      trace.test = std::move(ts);
    }
    if (trace.rounds.empty()) throw ContractViolation("trace_from_json: no rounds");
    for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
      if (trace.rounds[i].t != i) {
        throw ContractViolation("trace_from_json: round indices are not consecutive from 0");
      }
    }
    return trace;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("trace_from_json: malformed trace: ") + e.what());
  }
}

std::string trace_to_csv(const Trace& trace) {
  std::ostringstream os;
  os << "t,weight_used,gap,train_mse,mce_l2,mce_linf,lyapunov,mce_bound,spectral_b";
  const bool has_test = trace.test.has_value();
  if (has_test) os << ",test_mse,test_mce_l2,test_mce_linf";
  os << "\n";
  for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
    const RoundRecord& r = trace.rounds[i];
    os << r.t << ",";
    format_double(os, r.weight_used);
    os << ",";
    format_double(os, r.gap);
    os << ",";
    format_double(os, r.train_mse);
    os << ",";
    format_double(os, r.mce_l2);
    os << ",";
    format_double(os, r.mce_linf);
    os << ",";
    format_double(os, r.lyapunov);
    os << ",";
    if (r.mce_bound) format_double(os, *r.mce_bound);
    os << ",";
    format_double(os, r.spectral_b);
    if (has_test && i < trace.test->mse.size()) {
      os << ",";
      format_double(os, trace.test->mse[i]);
      os << ",";
      format_double(os, trace.test->mce_l2[i]);
      os << ",";
      format_double(os, trace.test->mce_linf[i]);
    } else if (has_test) {
      os << ",,,";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace mcboost::dynamics
