#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcboost/linalg.hpp"

namespace mcboost::hypothesis {

// Feature-side map h : R^d -> R.
struct FeatureMap {
  enum class Kind { Constant, Coordinate, Threshold, Custom };

  Kind kind = Kind::Constant;
  double value = 1.0;       // Constant
  std::size_t coord = 0;    // Coordinate / Threshold
  double threshold = 0.0;   // Threshold
  std::function<double(std::span<const double>)> fn;  // Custom (not serializable)
  std::string descriptor = "constant 1";

  double eval(std::span<const double> x) const;

  static FeatureMap constant(double v = 1.0);
  static FeatureMap coordinate(std::size_t j);
  // indicator x_j >= tau
  static FeatureMap threshold_indicator(std::size_t j, double tau);
  static FeatureMap custom(std::string descriptor,
                           std::function<double(std::span<const double>)> fn);
};

// Prediction-side link g : R -> R with a declared Lipschitz constant.
struct LinkMap {
  enum class Kind { Constant, Linear, ClampedLinear, StepIndicator, Custom };

  Kind kind = Kind::Constant;
  double a = 0.0;
  double b = 1.0;           // Constant stores its value here
  double lo = 0.0;
  double hi = 0.0;
  double tau = 0.0;
  double lipschitz = 0.0;   // declared L_G
  bool is_lipschitz = true; // step indicators are admitted but flagged false
  std::function<double(double)> fn;  // Custom (not serializable)
  std::string descriptor = "constant 1";

  double eval(double u) const;

  static LinkMap constant(double c = 1.0);
  static LinkMap linear(double a, double b = 0.0);
  static LinkMap clamped_linear(double a, double b, double lo, double hi);
  // indicator u >= tau; not Lipschitz, refused by bound_LB
  static LinkMap step_indicator(double tau);
  static LinkMap custom(std::string descriptor, std::function<double(double)> fn,
                        double lipschitz, bool is_lipschitz = true);
};

// Finite product class b(x, u) = h_i(x) * g_j(u). Column order is fixed:
// the pair (h_i, g_j) occupies column i * k + j (0-based), matching the
// row-block layout of h(x) (x) g(u).
struct FactorizedClass {
  std::vector<FeatureMap> h_maps;
  std::vector<LinkMap> g_maps;

  FactorizedClass() = default;
  FactorizedClass(std::vector<FeatureMap> h, std::vector<LinkMap> g);

  std::size_t m() const { return h_maps.size(); }
  std::size_t k() const { return g_maps.size(); }
  std::size_t width() const { return h_maps.size() * g_maps.size(); }  // p
  bool all_links_lipschitz() const;
};

// Built-in class: intercept plus every coordinate on the feature side,
// constant plus identity on the link side.
FactorizedClass intercept_slope_class(std::size_t d);
// As above but with the identity link replaced by a clamped linear link,
// so every g is Lipschitz with the given slope.
FactorizedClass clamped_slope_class(std::size_t d, double slope, double lo, double hi);

// Evaluation matrix: row i = h(x_i) (x) g(f_i), shape n x p.
// Throws ContractViolation naming the offending map and row if any entry is
// non-finite.
Matrix eval_B(const FactorizedClass& cls, const Matrix& x, const Vector& f);

// (max_i ||h(x_i)||_2) * sqrt(k) * max declared L_G. Refuses classes with any
// non-Lipschitz link.
double bound_LB(const FactorizedClass& cls, const Matrix& x);

// (2/delta) * (1 + c * M^2 / delta^2) * L_B with c = (1 + sqrt(5)) / 2.
double bound_LA(double l_b, double delta, double m);

// Empirical Lipschitz ratio ||A(u) - A(v)||_2 / ||u - v||_2 of the projector
// map at two prediction vectors.
double measured_lipschitz_A(const FactorizedClass& cls, const Matrix& x, const Vector& u,
                            const Vector& v, double rank_tol = kDefaultRankTol);

// Plain-text class descriptor, one map per line:
//   h constant <v> | h coord <j> | h thresh <j> <tau>
//   g constant <c> | g linear <a> <b> | g clamp <a> <b> <lo> <hi> | g step <tau>
std::string to_config(const FactorizedClass& cls);
FactorizedClass class_from_config(const std::string& text);

}  // namespace mcboost::hypothesis
