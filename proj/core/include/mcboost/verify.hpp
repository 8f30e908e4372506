#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcboost/dynamics.hpp"
#include "mcboost/linalg.hpp"

namespace mcboost::verify {

struct CheckResult {
  std::string name;
  std::string property;  // short statement of the inequality or identity
  std::string status;    // "pass" | "fail" | "not-applicable"
  // Normalized worst excess minus the check tolerance; <= 0 means the
  // property held with slack on every round.
  double worst_violation = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool overall_pass = true;
};

// Evaluates every applicable invariant of the recorded run. Identities that
// only hold under the exact-projection oracle are reported not-applicable on
// boosted-tree traces. `x_aux` supplies the feature matrix when the trace
// does not embed it; checks that need it degrade to not-applicable when it
// is missing.
VerificationReport check_trace(const dynamics::Trace& trace, const dynamics::UpdateRule& rule,
                               const dynamics::OracleMode& mode,
                               const std::optional<Matrix>& x_aux = std::nullopt);

// Reconstructs rule and mode from the trace's config snapshot.
VerificationReport check_trace(const dynamics::Trace& trace,
                               const std::optional<Matrix>& x_aux = std::nullopt);

// Max-entry residual over the four Moore-Penrose conditions for candidate
// pseudoinverse mp of m.
double penrose_check(const Matrix& m, const Matrix& mp);

// Compares the numerically computed spectrum of eta*A + (I - eta*A) v v^T
// (A an orthogonal projector, v unit) against its closed-form value multiset
// {1, eta*||(I-A)v||^2, eta x rank(A), 0 x (n-1-rank(A))}. The listed
// multiplicities total n+1 for an n x n matrix, so both sides are collapsed
// to distinct values (duplicates merged within 1e-6, nonpositive residual
// counts dropped) and the symmetric worst-case distance between the value
// sets is returned. Eigenvalues below -1e-9 also surface in the returned
// deviation (the matrix is positive semidefinite in exact arithmetic).
double rank_one_update_spectrum_check(const Matrix& a, const Vector& v, double eta);

std::string report_to_json(const VerificationReport& report);
std::string report_to_text(const VerificationReport& report);

}  // namespace mcboost::verify
