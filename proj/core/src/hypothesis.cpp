#include "mcboost/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcboost::hypothesis {

double FeatureMap::eval(std::span<const double> x) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Coordinate:
      require(coord < x.size(), "FeatureMap '" + descriptor + "': coordinate out of range");
      return x[coord];
    case Kind::Threshold:
      require(coord < x.size(), "FeatureMap '" + descriptor + "': coordinate out of range");
      return x[coord] >= threshold ? 1.0 : 0.0;
    case Kind::Custom:
      return fn(x);
  }
  return 0.0;
}

FeatureMap FeatureMap::constant(double v) {
  FeatureMap m;
  m.kind = Kind::Constant;
  m.value = v;
  m.descriptor = "constant " + std::to_string(v);
  return m;
}

FeatureMap FeatureMap::coordinate(std::size_t j) {
  FeatureMap m;
  m.kind = Kind::Coordinate;
  m.coord = j;
  m.descriptor = "coordinate " + std::to_string(j);
  return m;
}

FeatureMap FeatureMap::threshold_indicator(std::size_t j, double tau) {
  FeatureMap m;
  m.kind = Kind::Threshold;
  m.coord = j;
  m.threshold = tau;
  m.descriptor = "indicator x" + std::to_string(j) + " >= " + std::to_string(tau);
  return m;
}

FeatureMap FeatureMap::custom(std::string descriptor,
                              std::function<double(std::span<const double>)> fn) {
  FeatureMap m;
  m.kind = Kind::Custom;
  m.fn = std::move(fn);
  m.descriptor = std::move(descriptor);
  return m;
}

double LinkMap::eval(double u) const {
  switch (kind) {
    case Kind::Constant:
      return b;
    case Kind::Linear:
      return a * u + b;
    case Kind::ClampedLinear:
      return std::clamp(a * u + b, lo, hi);
    case Kind::StepIndicator:
      return u >= tau ? 1.0 : 0.0;
    case Kind::Custom:
      return fn(u);
  }
  return 0.0;
}

LinkMap LinkMap::constant(double c) {
  LinkMap g;
  g.kind = Kind::Constant;
  g.b = c;
  g.lipschitz = 0.0;
  g.descriptor = "constant " + std::to_string(c);
  return g;
}

LinkMap LinkMap::linear(double a, double b) {
  LinkMap g;
  g.kind = Kind::Linear;
  g.a = a;
  g.b = b;
  g.lipschitz = std::abs(a);
  g.descriptor = "linear " + std::to_string(a) + "*u+" + std::to_string(b);
  return g;
}

LinkMap LinkMap::clamped_linear(double a, double b, double lo, double hi) {
  require(lo <= hi, "LinkMap::clamped_linear: lo must not exceed hi");
  LinkMap g;
  g.kind = Kind::ClampedLinear;
  g.a = a;
  g.b = b;
  g.lo = lo;
  g.hi = hi;
  g.lipschitz = std::abs(a);
  g.descriptor = "clamp(" + std::to_string(a) + "*u+" + std::to_string(b) + ")";
  return g;
}

LinkMap LinkMap::step_indicator(double tau) {
  LinkMap g;
  g.kind = Kind::StepIndicator;
  g.tau = tau;
  g.lipschitz = std::numeric_limits<double>::infinity();
  g.is_lipschitz = false;
  g.descriptor = "indicator u >= " + std::to_string(tau);
  return g;
}

LinkMap LinkMap::custom(std::string descriptor, std::function<double(double)> fn,
                        double lipschitz, bool is_lipschitz) {
  LinkMap g;
  g.kind = Kind::Custom;
  g.fn = std::move(fn);
  g.lipschitz = lipschitz;
  g.is_lipschitz = is_lipschitz;
  g.descriptor = std::move(descriptor);
  return g;
}

FactorizedClass::FactorizedClass(std::vector<FeatureMap> h, std::vector<LinkMap> g)
    : h_maps(std::move(h)), g_maps(std::move(g)) {
  require(!h_maps.empty() && !g_maps.empty(),
          "FactorizedClass: needs at least one feature map and one link map");
}

bool FactorizedClass::all_links_lipschitz() const {
  return std::all_of(g_maps.begin(), g_maps.end(),
                     [](const LinkMap& g) { return g.is_lipschitz; });
}

FactorizedClass intercept_slope_class(std::size_t d) {
  std::vector<FeatureMap> h;
  h.push_back(FeatureMap::constant(1.0));
  for (std::size_t j = 0; j < d; ++j) h.push_back(FeatureMap::coordinate(j));
  std::vector<LinkMap> g;
  g.push_back(LinkMap::constant(1.0));
  g.push_back(LinkMap::linear(1.0, 0.0));
  return FactorizedClass(std::move(h), std::move(g));
}

FactorizedClass clamped_slope_class(std::size_t d, double slope, double lo, double hi) {
  std::vector<FeatureMap> h;
  h.push_back(FeatureMap::constant(1.0));
  for (std::size_t j = 0; j < d; ++j) h.push_back(FeatureMap::coordinate(j));
  std::vector<LinkMap> g;
  g.push_back(LinkMap::constant(1.0));
  g.push_back(LinkMap::clamped_linear(slope, 0.0, lo, hi));
  return FactorizedClass(std::move(h), std::move(g));
}

Matrix eval_B(const FactorizedClass& cls, const Matrix& x, const Vector& f) {
  require(cls.width() >= 1, "eval_B: empty class");
  if (x.rows() != f.size()) {
    throw ContractViolation("eval_B: X has " + std::to_string(x.rows()) +
                            " rows but f has length " + std::to_string(f.size()));
  }
  const std::size_t n = x.rows(), m = cls.m(), k = cls.k();
  Matrix b(n, m * k);
  std::vector<double> hv(m), gv(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    for (std::size_t a = 0; a < m; ++a) {
      hv[a] = cls.h_maps[a].eval(xi);
      if (!std::isfinite(hv[a])) {
        throw ContractViolation("eval_B: feature map '" + cls.h_maps[a].descriptor +
                                "' evaluated non-finite at row " + std::to_string(i));
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      gv[c] = cls.g_maps[c].eval(f[i]);
      if (!std::isfinite(gv[c])) {
        throw ContractViolation("eval_B: link map '" + cls.g_maps[c].descriptor +
                                "' evaluated non-finite at row " + std::to_string(i));
      }
    }
    auto row = b.row(i);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t c = 0; c < k; ++c) row[a * k + c] = hv[a] * gv[c];
  }
  return b;
}

double bound_LB(const FactorizedClass& cls, const Matrix& x) {
  for (const LinkMap& g : cls.g_maps) {
    if (!g.is_lipschitz) {
      throw ContractViolation("bound_LB: link map '" + g.descriptor +
                              "' is not Lipschitz; the bound does not apply");
    }
  }
  double max_h = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (const FeatureMap& h : cls.h_maps) {
      const double v = h.eval(x.row(i));
      require(std::isfinite(v), "bound_LB: non-finite feature evaluation");
      s += v * v;
    }
    max_h = std::max(max_h, std::sqrt(s));
  }
  double max_lg = 0.0;
  for (const LinkMap& g : cls.g_maps) max_lg = std::max(max_lg, g.lipschitz);
  return max_h * std::sqrt(static_cast<double>(cls.k())) * max_lg;
}

double bound_LA(double l_b, double delta, double m) {
  if (!(delta > 0.0)) {
    throw ContractViolation("bound_LA: delta must be positive (bound undefined otherwise)");
  }
  require(m >= delta, "bound_LA: M must be at least delta");
  require(l_b >= 0.0, "bound_LA: L_B must be nonnegative");
  const double c = (1.0 + std::sqrt(5.0)) / 2.0;
  return (2.0 / delta) * (1.0 + c * (m * m) / (delta * delta)) * l_b;
}

double measured_lipschitz_A(const FactorizedClass& cls, const Matrix& x, const Vector& u,
                            const Vector& v, double rank_tol) {
  require(u.size() == v.size() && u.size() == x.rows(),
          "measured_lipschitz_A: dimension mismatch");
  const double dist = norm2(subtract(u, v));
  if (dist == 0.0) {
    throw ContractViolation("measured_lipschitz_A: u and v must differ");
  }
  const Matrix bu = eval_B(cls, x, u);
  const Matrix bv = eval_B(cls, x, v);
  return projector_difference_norm(bu, bv, rank_tol) / dist;
}

std::string to_config(const FactorizedClass& cls) {
  std::ostringstream out;
  out.precision(17);
  for (const FeatureMap& h : cls.h_maps) {
    switch (h.kind) {
      case FeatureMap::Kind::Constant:
        out << "h constant " << h.value << "\n";
        break;
      case FeatureMap::Kind::Coordinate:
        out << "h coord " << h.coord << "\n";
        break;
      case FeatureMap::Kind::Threshold:
        out << "h thresh " << h.coord << " " << h.threshold << "\n";
        break;
      case FeatureMap::Kind::Custom:
        throw ContractViolation("to_config: custom feature maps are not serializable");
    }
  }
  for (const LinkMap& g : cls.g_maps) {
    switch (g.kind) {
      case LinkMap::Kind::Constant:
        out << "g constant " << g.b << "\n";
        break;
      case LinkMap::Kind::Linear:
        out << "g linear " << g.a << " " << g.b << "\n";
        break;
      case LinkMap::Kind::ClampedLinear:
        out << "g clamp " << g.a << " " << g.b << " " << g.lo << " " << g.hi << "\n";
        break;
      case LinkMap::Kind::StepIndicator:
        out << "g step " << g.tau << "\n";
        break;
      case LinkMap::Kind::Custom:
        throw ContractViolation("to_config: custom link maps are not serializable");
    }
  }
  return out.str();
}

FactorizedClass class_from_config(const std::string& text) {
  std::vector<FeatureMap> h;
  std::vector<LinkMap> g;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string side, kind;
    if (!(ls >> side)) continue;  // blank line
    if (side == "#") continue;    // comment
    ls >> kind;
    auto bad = [&](const std::string& why) {
      return ContractViolation("class config line " + std::to_string(lineno) + ": " + why);
    };
    if (side == "h") {
      if (kind == "constant") {
        double v;
        if (!(ls >> v)) throw bad("expected: h constant <v>");
        h.push_back(FeatureMap::constant(v));
      } else if (kind == "coord") {
        std::size_t j;
        if (!(ls >> j)) throw bad("expected: h coord <j>");
        h.push_back(FeatureMap::coordinate(j));
      } else if (kind == "thresh") {
        std::size_t j;
        double tau;
        if (!(ls >> j >> tau)) throw bad("expected: h thresh <j> <tau>");
        h.push_back(FeatureMap::threshold_indicator(j, tau));
      } else {
        throw bad("unknown feature map kind '" + kind + "'");
      }
    } else if (side == "g") {
      if (kind == "constant") {
        double c;
        if (!(ls >> c)) throw bad("expected: g constant <c>");
        g.push_back(LinkMap::constant(c));
      } else if (kind == "linear") {
        double a, b;
        if (!(ls >> a >> b)) throw bad("expected: g linear <a> <b>");
        g.push_back(LinkMap::linear(a, b));
      } else if (kind == "clamp") {
        double a, b, lo, hi;
        if (!(ls >> a >> b >> lo >> hi)) throw bad("expected: g clamp <a> <b> <lo> <hi>");
        g.push_back(LinkMap::clamped_linear(a, b, lo, hi));
      } else if (kind == "step") {
        double tau;
        if (!(ls >> tau)) throw bad("expected: g step <tau>");
        g.push_back(LinkMap::step_indicator(tau));
      } else {
        throw bad("unknown link map kind '" + kind + "'");
      }
    } else {
      throw bad("line must start with 'h' or 'g'");
    }
  }
  if (h.empty() || g.empty()) {
    throw ContractViolation("class config: needs at least one 'h' and one 'g' line");
  }
  return FactorizedClass(std::move(h), std::move(g));
}

}  // namespace mcboost::hypothesis
