#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mcboost/hypothesis.hpp"
#include "mcboost/linalg.hpp"
#include "mcboost/trees.hpp"

namespace mcboost::dynamics {

// Default rescaling schedule used by the relaxed rule: w_t = 1 - (t+2)^-3.
double relaxed_default_schedule(std::size_t t);

struct RelaxedSchedule {
  enum class Kind { PowerLawCubic, Custom };
  Kind kind = Kind::PowerLawCubic;
  std::function<double(std::size_t)> fn;  // Custom only
  std::string label = "1-(t+2)^-3";

  double operator()(std::size_t t) const;

  static RelaxedSchedule power_law_cubic();
  static RelaxedSchedule custom(std::string label, std::function<double(std::size_t)> fn);
};

struct UnitRule {};
struct RelaxedRule {
  RelaxedSchedule schedule = RelaxedSchedule::power_law_cubic();
};
struct AdaptiveRule {};
struct HybridRule {
  double gamma_mix = 1.0;
  Vector strong_pred;
};
using UpdateRule = std::variant<UnitRule, RelaxedRule, AdaptiveRule, HybridRule>;

struct ExactProjection {
  hypothesis::FactorizedClass cls;
  double rank_tol = kDefaultRankTol;
};
struct BoostedTrees {
  std::size_t n_trees = 100;
  double learn_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_leaf = 1;
};
using OracleMode = std::variant<ExactProjection, BoostedTrees>;

std::string rule_name(const UpdateRule& rule);
std::string mode_name(const OracleMode& mode);

// Closed-form line-search weight: y.phi / ||phi||^2, 0 when phi = 0.
double adaptive_weight(const Vector& y, const Vector& phi);

// One round of the update. Needs the feature matrix because both oracle
// modes evaluate weak learners on (x_i, f_i) pairs.
std::pair<Vector, double> step(const Matrix& x, const Vector& y, const Vector& f,
                               const UpdateRule& rule, const OracleMode& mode, double eta,
                               std::size_t t);

// Mixed update f + eta * (oracle(y - f) + gamma_mix * (strong_pred - f)).
Vector hybrid_step(const Matrix& x, const Vector& y, const Vector& f, const OracleMode& mode,
                   double eta, double gamma_mix, const Vector& strong_pred);

// Next-round residual of the adaptive rule at eta = 1, as a closed form in
// (y, A, r) with A an orthogonal projector (checked). Derivation: with
// q = (I - A) r and phi = y - q, the rescaled update y - w*phi with
// w = y.phi/||phi||^2 simplifies to ((y.phi) q - (f.q) y) / ||phi||^2.
Vector residual_recurrence(const Vector& y, const Matrix& a, const Vector& r);

// Per-state record. Step-scoped fields (weight_used, gap, mce_bound)
// describe the transition leaving this state; the terminal record carries
// gap 0 and weight 1.
struct RoundRecord {
  std::size_t t = 0;
  Vector f;
  double weight_used = 1.0;
  double gap = 0.0;
  double train_mse = 0.0;
  double mce_l2 = 0.0;
  double mce_linf = 0.0;
  double lyapunov = 0.0;
  std::optional<double> mce_bound;  // unit rule, non-terminal records only
  double spectral_b = 0.0;
};

struct TestSeries {
  Vector mse;
  Vector mce_l2;
  Vector mce_linf;
};

struct RunSettings {
  std::string dataset_id = "unspecified";
  std::string dataset_path;
  std::string rule = "unit";
  std::string oracle = "exact";
  std::string schedule_label;   // relaxed
  double gamma_mix = 0.0;       // hybrid
  Vector strong_pred;           // hybrid
  std::string class_config;     // exact
  double rank_tol = kDefaultRankTol;
  std::size_t n_trees = 100;
  double learn_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_leaf = 1;
  double eta = 1.0;
  std::size_t rounds = 20;
  std::uint64_t seed = 0;
  std::string init = "zeros";
  std::string notes;
};

struct Trace {
  RunSettings config;
  Vector y;
  std::vector<RoundRecord> rounds;  // states 0..T, record t holds f_t
  Vector terminal_f;
  std::optional<Matrix> aux_x;      // embedded when small, for re-verification
  std::optional<TestSeries> test;
};

struct RunOptions {
  // Present when test-set series should be tracked alongside the run.
  struct TestSet {
    Matrix x;
    Vector y;
    Vector f0;
    Vector strong_pred;  // hybrid only
  };
  std::optional<TestSet> test;
  // Feature matrices up to this many entries are embedded into the trace.
  std::size_t embed_x_limit = 200000;
  RunSettings config;  // labels copied into the trace config
};

// A step failure mid-run surfaces as RunAborted carrying the partial trace.
class RunAborted : public NumericFailure {
 public:
  RunAborted(const std::string& what, Trace partial)
      : NumericFailure(what), partial_trace(std::move(partial)) {}
  Trace partial_trace;
};

Trace run(const Matrix& x, const Vector& y, const Vector& f0, const UpdateRule& rule,
          const OracleMode& mode, double eta, std::size_t rounds,
          const RunOptions& options = {});

std::string trace_to_json(const Trace& trace);
Trace trace_from_json(const std::string& text);
std::string trace_to_csv(const Trace& trace);

}  // namespace mcboost::dynamics
