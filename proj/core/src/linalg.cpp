#include "mcboost/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mcboost {

namespace {

constexpr double kJacobiTol = 1e-15;

void check_same_length(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    throw ContractViolation(std::string(op) + ": length mismatch " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require(rows >= 1 && cols >= 1, "Matrix: dimensions must be at least 1x1");
  require(std::isfinite(fill), "Matrix: fill value must be finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(rows >= 1 && cols >= 1, "Matrix: dimensions must be at least 1x1");
  require(data_.size() == rows * cols, "Matrix: data size does not match dimensions");
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  require(rows_ >= 1 && cols_ >= 1, "Matrix: dimensions must be at least 1x1");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::col(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

double dot(const Vector& a, const Vector& b) {
  check_same_length(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

Vector subtract(const Vector& a, const Vector& b) {
  check_same_length(a, b, "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  check_same_length(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector scaled(const Vector& a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

void axpy(Vector& a, double s, const Vector& b) {
  check_same_length(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Vector matvec(const Matrix& m, const Vector& v) {
  require(m.cols() == v.size(), "matvec: dimension mismatch");
  Vector out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s += r[j] * v[j];
    out[i] = s;
  }
  return out;
}

Vector matvec_t(const Matrix& m, const Vector& v) {
  require(m.rows() == v.size(), "matvec_t: dimension mismatch");
  Vector out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += r[j] * vi;
  }
  return out;
}

double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data()) v = std::max(v, std::abs(x));
  return v;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    v = std::max(v, std::abs(a.data()[i] - b.data()[i]));
  return v;
}

namespace {

// One-sided Jacobi on a tall matrix (rows >= cols). Orthogonalizes column
// pairs in place while accumulating the right-hand rotations in V.
struct JacobiResult {
  Matrix a;       // rotated input, columns = u_j * sigma_j
  Matrix v;       // cols x cols orthogonal
  bool converged;
};

JacobiResult one_sided_jacobi(Matrix a, std::size_t max_sweeps) {
  const std::size_t n = a.cols();
  const std::size_t m = a.rows();
  Matrix v = Matrix::identity(n);
  bool converged = (n == 1);
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = a(i, p), xq = a(i, q);
          app += xp * xp;
          aqq += xq * xq;
          apq += xp * xq;
        }
        if (app == 0.0 || aqq == 0.0) continue;
        if (std::abs(apq) <= kJacobiTol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = a(i, p), xq = a(i, q);
          a(i, p) = c * xp - s * xq;
          a(i, q) = s * xp + c * xq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) converged = true;
  }
  return {std::move(a), std::move(v), converged};
}

// Replaces zero columns of u by an orthonormal completion against the
// existing columns (needed so U keeps orthonormal columns when the input is
// rank deficient).
void complete_orthonormal(Matrix& u, const std::vector<bool>& is_zero) {
  const std::size_t m = u.rows();
  const std::size_t k = u.cols();
  std::size_t basis_cursor = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!is_zero[j]) continue;
    for (; basis_cursor <= m; ++basis_cursor) {
      if (basis_cursor == m) {
        throw NumericFailure("svd: failed to complete orthonormal basis");
      }
      Vector cand(m, 0.0);
      cand[basis_cursor] = 1.0;
      // two Gram-Schmidt passes against every other column
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < k; ++c) {
          if (c == j || (is_zero[c] && c > j)) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += cand[i] * u(i, c);
          for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, c);
        }
      }
      const double nrm = norm2(cand);
      if (nrm > 1e-6) {
        for (std::size_t i = 0; i < m; ++i) u(i, j) = cand[i] / nrm;
        ++basis_cursor;
        break;
      }
    }
  }
}

SvdResult svd_tall(const Matrix& m_in, double rank_tol) {
  const std::size_t m = m_in.rows(), n = m_in.cols();
  const std::size_t budget = 30 * std::max(m, n);
  JacobiResult jr = one_sided_jacobi(m_in, budget);
  if (!jr.converged) {
    throw NumericFailure("svd: one-sided Jacobi did not converge within " +
                         std::to_string(budget) + " sweeps");
  }
  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += jr.a(i, j) * jr.a(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  Matrix u(m, n);
  Matrix v_sorted(n, n);
  std::vector<double> sv(n);
  std::vector<bool> zero_col(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    sv[j] = sigma[src];
    for (std::size_t i = 0; i < n; ++i) v_sorted(i, j) = jr.v(i, src);
    if (sv[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) u(i, j) = jr.a(i, src) / sv[j];
    } else {
      zero_col[j] = true;
    }
  }
  if (std::find(zero_col.begin(), zero_col.end(), true) != zero_col.end()) {
    complete_orthonormal(u, zero_col);
  }
  std::size_t rank = 0;
  if (sv[0] > 0.0) {
    const double cut = rank_tol * sv[0];
    for (double s : sv) {
      if (s > cut) ++rank;
    }
  }
  return SvdResult{std::move(u), std::move(sv), transpose(v_sorted), rank};
}

}  // namespace

SvdResult svd(const Matrix& m, double rank_tol) {
  require(rank_tol >= 0.0, "svd: rank_tol must be nonnegative");
  require_finite(m.data(), "svd input");
  if (m.rows() >= m.cols()) return svd_tall(m, rank_tol);
  // Decompose the transpose and swap factors: M = (U' S V'^T)^T = V' S U'^T.
  SvdResult t = svd_tall(transpose(m), rank_tol);
  return SvdResult{transpose(t.vt), std::move(t.singular_values), transpose(t.u),
                   t.numeric_rank};
}

Matrix pinv(const Matrix& m, double rank_tol) {
  SvdResult d = svd(m, rank_tol);
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < d.numeric_rank; ++r) {
    const double inv_s = 1.0 / d.singular_values[r];
    for (std::size_t i = 0; i < m.cols(); ++i) {
      const double vi = d.vt(r, i) * inv_s;
      if (vi == 0.0) continue;
      for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += vi * d.u(j, r);
    }
  }
  return out;
}

Vector min_norm_lsq(const Matrix& b, const Vector& r, double rank_tol) {
  if (b.rows() != r.size()) {
    throw ContractViolation("min_norm_lsq: B has " + std::to_string(b.rows()) +
                            " rows but r has length " + std::to_string(r.size()));
  }
  SvdResult d = svd(b, rank_tol);
  Vector theta(b.cols(), 0.0);
  for (std::size_t k = 0; k < d.numeric_rank; ++k) {
    double coeff = 0.0;
    for (std::size_t i = 0; i < b.rows(); ++i) coeff += d.u(i, k) * r[i];
    coeff /= d.singular_values[k];
    for (std::size_t j = 0; j < b.cols(); ++j) theta[j] += coeff * d.vt(k, j);
  }
  return theta;
}

Vector projector_apply(const SvdResult& d, const Vector& r) {
  require(d.u.rows() == r.size(), "projector_apply: dimension mismatch");
  Vector out(r.size(), 0.0);
  for (std::size_t k = 0; k < d.numeric_rank; ++k) {
    double coeff = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) coeff += d.u(i, k) * r[i];
    for (std::size_t i = 0; i < r.size(); ++i) out[i] += coeff * d.u(i, k);
  }
  return out;
}

Vector projector_apply(const Matrix& b, const Vector& r, double rank_tol) {
  if (b.rows() != r.size()) {
    throw ContractViolation("projector_apply: B has " + std::to_string(b.rows()) +
                            " rows but r has length " + std::to_string(r.size()));
  }
  return projector_apply(svd(b, rank_tol), r);
}

Matrix projector_matrix(const Matrix& b, double rank_tol) {
  SvdResult d = svd(b, rank_tol);
  const std::size_t n = b.rows();
  Matrix a(n, n);
  for (std::size_t k = 0; k < d.numeric_rank; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double uik = d.u(i, k);
      if (uik == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) a(i, j) += uik * d.u(j, k);
    }
  }
  return a;
}

double spectral_norm(const Matrix& m) {
  require_finite(m.data(), "spectral_norm input");
  const bool tall = m.rows() >= m.cols();
  const std::size_t k = tall ? m.cols() : m.rows();
  Matrix gram(k, k);
  if (tall) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) gram(a, b) += r[a] * r[b];
      }
    }
  } else {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a; b < k; ++b) {
        double s = 0.0;
        const auto ra = m.row(a), rb = m.row(b);
        for (std::size_t j = 0; j < m.cols(); ++j) s += ra[j] * rb[j];
        gram(a, b) = s;
      }
    }
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);
  const std::vector<double> ev = sym_eigenvalues(gram);
  return std::sqrt(std::max(0.0, ev.front()));
}

std::vector<double> sym_eigenvalues(const Matrix& a_in) {
  require(a_in.rows() == a_in.cols(), "sym_eigenvalues: matrix must be square");
  const std::size_t n = a_in.rows();
  double scale = max_abs(a_in);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      require(std::abs(a_in(i, j) - a_in(j, i)) <= 1e-9 * (1.0 + scale),
              "sym_eigenvalues: matrix is not symmetric");
  Matrix a = a_in;
  const std::size_t budget = 30 * std::max<std::size_t>(n, 1);
  bool converged = (n == 1);
  for (std::size_t sweep = 0; sweep < budget && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= kJacobiTol * (1.0 + std::abs(a(p, p)) + std::abs(a(q, q)))) {
          continue;
        }
        rotated = true;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
      }
    }
    if (!rotated) converged = true;
  }
  if (!converged) {
    throw NumericFailure("sym_eigenvalues: Jacobi did not converge within " +
                         std::to_string(budget) + " sweeps");
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<double>());
  return ev;
}

double projector_difference_norm(const Matrix& bu, const Matrix& bv, double rank_tol) {
  require(bu.rows() == bv.rows(), "projector_difference_norm: row counts disagree");
  SvdResult du = svd(bu, rank_tol);
  SvdResult dv = svd(bv, rank_tol);
  const std::size_t ru = du.numeric_rank, rv = dv.numeric_rank;
  if (ru == 0 && rv == 0) return 0.0;
  if (ru != rv) return 1.0;
  // Equal ranks: ||P_u - P_v||_2 = sin(theta_max). Computed as the largest
  // singular value of (I - P_v) U_u, which stays accurate for tiny angles
  // (no 1 - cos^2 cancellation).
  const std::size_t n = bu.rows();
  Matrix residue(n, ru);
  for (std::size_t a = 0; a < ru; ++a) {
    Vector col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = du.u(i, a);
    for (std::size_t b = 0; b < rv; ++b) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += dv.u(i, b) * col[i];
      for (std::size_t i = 0; i < n; ++i) col[i] -= proj * dv.u(i, b);
    }
    for (std::size_t i = 0; i < n; ++i) residue(i, a) = col[i];
  }
  return std::min(1.0, spectral_norm(residue));
}

}  // namespace mcboost
