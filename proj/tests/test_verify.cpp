#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcboost/data.hpp"
#include "mcboost/dynamics.hpp"
#include "mcboost/verify.hpp"

using namespace mcboost;
using namespace mcboost::dynamics;
using namespace mcboost::verify;

namespace {

OracleMode mean_class_mode() {
  hypothesis::FactorizedClass cls({hypothesis::FeatureMap::constant(1.0)},
                                  {hypothesis::LinkMap::constant(1.0)});
  return ExactProjection{std::move(cls), 1e-12};
}

OracleMode lipschitz_mode() {
  hypothesis::FactorizedClass cls(
      {hypothesis::FeatureMap::constant(1.0), hypothesis::FeatureMap::coordinate(0)},
      {hypothesis::LinkMap::constant(1.0),
       hypothesis::LinkMap::clamped_linear(0.3, 0.0, -4.0, 4.0)});
  return ExactProjection{std::move(cls), 1e-12};
}

struct Instance {
  Matrix x;
  Vector y;
  Vector f0;
};

Instance make_instance(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  Instance inst;
  inst.x = Matrix(n, 1);
  inst.y.resize(n);
  inst.f0.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.x(i, 0) = uniform_in(rng, -1.0, 1.0);
    inst.y[i] = 1.0 + 0.5 * std::sin(3.0 * inst.x(i, 0));
    inst.f0[i] = 0.2 * normal01(rng);
  }
  return inst;
}

const CheckResult& find_check(const VerificationReport& report, const std::string& name) {
  for (const CheckResult& c : report.checks) {
    if (c.name == name) return c;
  }
  REQUIRE_MESSAGE(false, "check not found: " << name);
  static CheckResult dummy;
  return dummy;
}

Matrix random_projector(std::mt19937_64& rng, std::size_t n, std::size_t rank) {
  Matrix b(n, rank);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < rank; ++j) b(i, j) = normal01(rng);
  return projector_matrix(b);
}

Vector random_unit(std::mt19937_64& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = normal01(rng);
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

}  // namespace

TEST_CASE("unit-rule mean-class trace passes every applicable check") {
  const data::ToyInstance toy = data::toy_mean_instance();
  const Trace trace = run(toy.x, toy.y, toy.f0, UnitRule{}, mean_class_mode(), 1.0, 2);
  const VerificationReport report = check_trace(trace, UnitRule{}, mean_class_mode());
  CHECK(report.overall_pass);
  CHECK(find_check(report, "loss-monotone").status == "pass");
  CHECK(find_check(report, "gap-rate-sublinear").status == "pass");
  CHECK(find_check(report, "mce-gap-bound").status == "pass");
  CHECK(find_check(report, "lyapunov-decrement").status == "pass");
  CHECK(find_check(report, "relaxed-mce-identity").status == "pass");
  CHECK(find_check(report, "adaptive-weight-nonneg").status == "not-applicable");
}

TEST_CASE("corrupting the loss at round 3 flips monotonicity to fail") {
  const Instance inst = make_instance(11, 16);
  Trace trace = run(inst.x, inst.y, inst.f0, UnitRule{}, lipschitz_mode(), 1.0, 6);
  for (double& v : trace.rounds[3].f) v += 0.8;  // push predictions away from y
  // keep the derived scalars consistent so only monotonicity trips
  const Vector r = subtract(trace.y, trace.rounds[3].f);
  const double n = static_cast<double>(trace.y.size());
  trace.rounds[3].train_mse = dot(r, r) / n;
  trace.rounds[3].lyapunov = 0.5 * dot(r, r);
  trace.rounds[3].gap = norm2(subtract(trace.rounds[4].f, trace.rounds[3].f));
  trace.rounds[2].gap = norm2(subtract(trace.rounds[3].f, trace.rounds[2].f));
  trace.rounds[3].mce_bound.reset();
  trace.rounds[2].mce_bound.reset();

  const VerificationReport report = check_trace(trace, UnitRule{}, lipschitz_mode());
  CHECK(!report.overall_pass);
  const CheckResult& mono = find_check(report, "loss-monotone");
  CHECK(mono.status == "fail");
  CHECK(mono.worst_violation > 0.0);
  CHECK(mono.detail.find("->3") != std::string::npos);
}

TEST_CASE("relaxed trace with the all-ones schedule reports exactly like unit") {
  const Instance inst = make_instance(13, 12);
  const OracleMode mode = lipschitz_mode();
  const Trace unit_trace = run(inst.x, inst.y, inst.f0, UnitRule{}, mode, 1.0, 5);
  RelaxedRule ones;
  ones.schedule = RelaxedSchedule::custom("1", [](std::size_t) { return 1.0; });
  const Trace relaxed_trace = run(inst.x, inst.y, inst.f0, ones, mode, 1.0, 5);

  const VerificationReport r_unit = check_trace(unit_trace, UnitRule{}, mode);
  const VerificationReport r_relaxed = check_trace(relaxed_trace, ones, mode);
  REQUIRE(r_unit.checks.size() == r_relaxed.checks.size());
  CHECK(r_unit.overall_pass);
  CHECK(r_relaxed.overall_pass);
  for (std::size_t i = 0; i < r_unit.checks.size(); ++i) {
    // custom schedule blocks only the series-based rate constant
    if (r_unit.checks[i].name == "relaxed-gap-rate") continue;
    CHECK(r_unit.checks[i].name == r_relaxed.checks[i].name);
    CHECK(r_unit.checks[i].status == r_relaxed.checks[i].status);
    CHECK(r_unit.checks[i].worst_violation ==
          doctest::Approx(r_relaxed.checks[i].worst_violation).epsilon(1e-12));
  }
}

TEST_CASE("boosted-tree traces downgrade exact-only identities to not-applicable") {
  const Instance inst = make_instance(17, 30);
  const OracleMode mode = BoostedTrees{10, 0.2, 2, 1};
  const Trace trace = run(inst.x, inst.y, inst.f0, UnitRule{}, mode, 1.0, 4);
  const VerificationReport report = check_trace(trace, UnitRule{}, mode);
  CHECK(report.overall_pass);
  CHECK(find_check(report, "lyapunov-decrement").status == "not-applicable");
  CHECK(find_check(report, "mce-gap-bound").status == "not-applicable");
  CHECK(find_check(report, "relaxed-mce-identity").status == "not-applicable");
  CHECK(find_check(report, "gap-contraction").status == "not-applicable");
  CHECK(find_check(report, "loss-monotone").status == "pass");
  CHECK(find_check(report, "gap-rate-sublinear").status == "pass");
}

TEST_CASE("relaxed-rule checks pass on a relaxed run and fail when weights are forged") {
  const Instance inst = make_instance(19, 14);
  const OracleMode mode = lipschitz_mode();
  Trace trace = run(inst.x, inst.y, inst.f0, RelaxedRule{}, mode, 1.0, 8);
  const VerificationReport ok = check_trace(trace, RelaxedRule{}, mode);
  CHECK(ok.overall_pass);
  CHECK(find_check(ok, "relaxed-loss-bound").status == "pass");
  CHECK(find_check(ok, "relaxed-gap-rate").status == "pass");
  CHECK(find_check(ok, "relaxed-mce-identity").status == "pass");

  // forging a tiny weight breaks the recorded-identity between weights and
  // the mce identity evaluated from the states
  trace.rounds[2].weight_used = 0.2;
  const VerificationReport bad = check_trace(trace, RelaxedRule{}, mode);
  CHECK(!bad.overall_pass);
  CHECK(find_check(bad, "relaxed-mce-identity").status == "fail");
}

TEST_CASE("adaptive checks pass and fault injection flips them") {
  const Instance inst = make_instance(23, 10);
  const OracleMode mode = lipschitz_mode();
  Trace trace = run(inst.x, inst.y, inst.f0, AdaptiveRule{}, mode, 1.0, 6);
  const VerificationReport ok = check_trace(trace, AdaptiveRule{}, mode);
  CHECK(ok.overall_pass);
  CHECK(find_check(ok, "adaptive-weight-nonneg").status == "pass");
  CHECK(find_check(ok, "residual-recurrence").status == "pass");

  SUBCASE("negative weight is caught") {
    trace.rounds[1].weight_used = -0.01;
    const VerificationReport bad = check_trace(trace, AdaptiveRule{}, mode);
    CHECK(find_check(bad, "adaptive-weight-nonneg").status == "fail");
  }
  SUBCASE("drifted predictions break the recurrence") {
    for (double& v : trace.rounds[2].f) v += 0.05;
    const VerificationReport bad = check_trace(trace, AdaptiveRule{}, mode);
    CHECK(find_check(bad, "residual-recurrence").status == "fail");
  }
}

TEST_CASE("record corruption is caught by the consistency check") {
  const Instance inst = make_instance(29, 8);
  Trace trace = run(inst.x, inst.y, inst.f0, UnitRule{}, lipschitz_mode(), 1.0, 3);
  trace.rounds[1].train_mse *= 1.5;
  const VerificationReport report = check_trace(trace, UnitRule{}, lipschitz_mode());
  CHECK(find_check(report, "record-consistency").status == "fail");
}

TEST_CASE("gap contraction check runs when the class is Lipschitz") {
  const Instance inst = make_instance(31, 12);
  Vector f0 = inst.y;
  for (double& v : f0) v -= 0.05;  // small initial residual keeps kappa < 1
  const Trace trace = run(inst.x, inst.y, f0, UnitRule{}, lipschitz_mode(), 1.0, 6);
  const VerificationReport report = check_trace(trace, UnitRule{}, lipschitz_mode());
  const CheckResult& c = find_check(report, "gap-contraction");
  CHECK(c.status == "pass");
}

TEST_CASE("hybrid contraction check") {
  const Instance inst = make_instance(37, 10);
  const double gamma = 0.5;
  const double eta = gamma / (2.0 * (1.0 + gamma) * (1.0 + gamma));
  std::mt19937_64 rng(5);
  Vector strong = inst.y;
  for (double& v : strong) v += 0.05 * normal01(rng);  // imperfect strong learner
  const HybridRule rule{gamma, strong};
  const OracleMode mode = lipschitz_mode();
  Trace trace = run(inst.x, inst.y, inst.f0, rule, mode, eta, 6);
  const VerificationReport report = check_trace(trace, rule, mode);
  CHECK(report.overall_pass);
  CHECK(find_check(report, "hybrid-contraction").status == "pass");

  // a forged state violating the contraction inequality must be caught
  for (double& v : trace.rounds[3].f) v = -5.0;
  const Vector r = subtract(trace.y, trace.rounds[3].f);
  trace.rounds[3].train_mse = dot(r, r) / static_cast<double>(r.size());
  trace.rounds[3].lyapunov = 0.5 * dot(r, r);
  trace.rounds[3].gap = norm2(subtract(trace.rounds[4].f, trace.rounds[3].f));
  trace.rounds[2].gap = norm2(subtract(trace.rounds[3].f, trace.rounds[2].f));
  const VerificationReport bad = check_trace(trace, rule, mode);
  CHECK(find_check(bad, "hybrid-contraction").status == "fail");

  // outside the guarantee range the check declares itself not applicable
  Trace wide = run(inst.x, inst.y, inst.f0, HybridRule{gamma, strong}, mode, 0.9, 4);
  const VerificationReport na = check_trace(wide, HybridRule{gamma, strong}, mode);
  CHECK(find_check(na, "hybrid-contraction").status == "not-applicable");
}

TEST_CASE("fault injection flips the remaining unit-rule checks") {
  const Instance inst = make_instance(83, 12);
  const OracleMode mode = lipschitz_mode();
  const Trace clean = run(inst.x, inst.y, inst.f0, UnitRule{}, mode, 1.0, 6);
  REQUIRE(check_trace(clean, UnitRule{}, mode).overall_pass);

  SUBCASE("inflated gaps break the sublinear rate bound") {
    Trace bad = clean;
    for (auto& rec : bad.rounds) rec.gap = 100.0 * (1.0 + norm2(bad.y));
    CHECK(find_check(check_trace(bad, UnitRule{}, mode), "gap-rate-sublinear").status ==
          "fail");
  }
  SUBCASE("forged mce breaks the gap bound") {
    Trace bad = clean;
    bad.rounds[1].mce_l2 = 100.0 * (1.0 + *bad.rounds[1].mce_bound);
    CHECK(find_check(check_trace(bad, UnitRule{}, mode), "mce-gap-bound").status == "fail");
  }
  SUBCASE("forged lyapunov value breaks the decrement identity") {
    Trace bad = clean;
    bad.rounds[2].lyapunov *= 3.0;
    CHECK(find_check(check_trace(bad, UnitRule{}, mode), "lyapunov-decrement").status ==
          "fail");
  }
  SUBCASE("an inflated late gap breaks the contraction chain") {
    Trace bad = clean;
    bad.rounds[2].gap = 50.0 * (bad.rounds[1].gap + 1.0);
    CHECK(find_check(check_trace(bad, UnitRule{}, mode), "gap-contraction").status == "fail");
  }
}

TEST_CASE("fault injection flips the relaxed-rule bounds") {
  const Instance inst = make_instance(89, 12);
  const OracleMode mode = lipschitz_mode();
  Trace trace = run(inst.x, inst.y, inst.f0, RelaxedRule{}, mode, 1.0, 8);
  REQUIRE(check_trace(trace, RelaxedRule{}, mode).overall_pass);

  SUBCASE("predictions drifting far from the target break the loss bound") {
    for (double& v : trace.rounds[4].f) v += 100.0;
    CHECK(find_check(check_trace(trace, RelaxedRule{}, mode), "relaxed-loss-bound").status ==
          "fail");
  }
  SUBCASE("uniformly large recorded gaps break the rate bound") {
    for (auto& rec : trace.rounds) rec.gap = 100.0 * (1.0 + norm2(trace.y));
    CHECK(find_check(check_trace(trace, RelaxedRule{}, mode), "relaxed-gap-rate").status ==
          "fail");
  }
}

TEST_CASE("fault injection flips the adaptive quadratic-ratio check") {
  // engineered instance whose residual direction lies in the class span at
  // the target: enters the small-residual regime and stays there
  std::mt19937_64 rng(777);
  const std::size_t n = 8;
  Vector y(n);
  Matrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = uniform_in(rng, 1.0, 3.0);
    x(i, 0) = uniform_in(rng, -1.0, 1.0);
  }
  const double slope = 2.0;
  hypothesis::FactorizedClass cls(
      {hypothesis::FeatureMap::constant(1.0), hypothesis::FeatureMap::coordinate(0)},
      {hypothesis::LinkMap::constant(1.0), hypothesis::LinkMap::linear(slope, 0.0)});
  Vector w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.8 + 1.1 * x(i, 0) + 0.6 * slope * x(i, 0) * y[i];
  }
  const double proj = dot(y, w) / dot(y, y);
  for (std::size_t i = 0; i < n; ++i) w[i] -= proj * y[i];
  const double wn = norm2(w);
  for (double& v : w) v /= wn;
  const double ny = norm2(y);
  Vector f0 = y;
  axpy(f0, -0.009 * ny, w);
  const OracleMode mode = ExactProjection{cls, 1e-12};
  Trace trace = run(x, y, f0, AdaptiveRule{}, mode, 1.0, 12);

  const VerificationReport ok = check_trace(trace, AdaptiveRule{}, mode);
  REQUIRE(find_check(ok, "adaptive-quadratic-ratio").status == "pass");

  // blow up a mid-window residual while staying inside the regime: the ratio
  // at the previous round jumps far above the run constant
  Vector& f5 = trace.rounds[5].f;
  axpy(f5, 0.005 * ny, w);
  const VerificationReport bad = check_trace(trace, AdaptiveRule{}, mode);
  CHECK(find_check(bad, "adaptive-quadratic-ratio").status == "fail");
}

TEST_CASE("report determinism and serialization") {
  const Instance inst = make_instance(41, 9);
  const Trace trace = run(inst.x, inst.y, inst.f0, UnitRule{}, lipschitz_mode(), 1.0, 4);
  const VerificationReport r1 = check_trace(trace, UnitRule{}, lipschitz_mode());
  const VerificationReport r2 = check_trace(trace, UnitRule{}, lipschitz_mode());
  CHECK(report_to_json(r1) == report_to_json(r2));
  const std::string text = report_to_text(r1);
  CHECK(text.find("overall: pass") != std::string::npos);
  CHECK(text.find("loss-monotone") != std::string::npos);
}

TEST_CASE("config-based reconstruction checks a trace loaded from json") {
  const Instance inst = make_instance(43, 10);
  const Trace trace = run(inst.x, inst.y, inst.f0, RelaxedRule{}, lipschitz_mode(), 1.0, 5);
  const Trace loaded = trace_from_json(trace_to_json(trace));
  const VerificationReport report = check_trace(loaded);
  CHECK(report.overall_pass);
  CHECK(find_check(report, "relaxed-gap-rate").status == "pass");
}

TEST_CASE("penrose check examples") {
  CHECK(penrose_check(Matrix::identity(3), Matrix::identity(3)) == 0.0);
  std::mt19937_64 rng(47);
  Matrix m(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = normal01(rng);
  CHECK(penrose_check(m, pinv(m)) <= 1e-8 * (1.0 + spectral_norm(m)));
  // the transpose of a non-orthogonal matrix is not its pseudoinverse
  CHECK(penrose_check(m, transpose(m)) > 1e-3);
}

TEST_CASE("rank-one update spectrum: identity projector") {
  std::mt19937_64 rng(53);
  const Vector v = random_unit(rng, 4);
  CHECK(rank_one_update_spectrum_check(Matrix::identity(4), v, 1.0) <= 1e-9);
}

TEST_CASE("rank-one update spectrum: zero projector exposes the spurious value") {
  // closed form lists eta with multiplicity 1 via the (I-A)v term plus
  // rank(A) = 0 copies, but the true spectrum is {1, 0, ..., 0}
  std::mt19937_64 rng(59);
  const Vector v = random_unit(rng, 3);
  const double dev = rank_one_update_spectrum_check(Matrix(3, 3, 0.0), v, 0.5);
  CHECK(dev == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("rank-one update spectrum: seeded projector battery") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5;
    const std::size_t rank = 2;
    const Matrix a = random_projector(rng, n, rank);
    const Vector v = random_unit(rng, n);
    const double eta = 0.7;
    CHECK(rank_one_update_spectrum_check(a, v, eta) <= 1e-8);
  }
}

TEST_CASE("rank-one update spectrum rejects bad inputs") {
  std::mt19937_64 rng(67);
  const Vector v = random_unit(rng, 3);
  CHECK_THROWS_AS(rank_one_update_spectrum_check(Matrix(3, 3, 0.5), v, 1.0),
                  ContractViolation);
  CHECK_THROWS_AS(rank_one_update_spectrum_check(Matrix::identity(3), {1.0, 1.0, 0.0}, 1.0),
                  ContractViolation);
}

TEST_CASE("malformed traces are rejected") {
  const Instance inst = make_instance(71, 6);
  Trace trace = run(inst.x, inst.y, inst.f0, UnitRule{}, lipschitz_mode(), 1.0, 2);
  trace.rounds[1].t = 5;
  CHECK_THROWS_AS(check_trace(trace, UnitRule{}, lipschitz_mode()), ContractViolation);
}
