#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "mcboost/common.hpp"

namespace mcboost {

// Dense row-major matrix of doubles. Construction from data validates that
// every entry is finite and that both dimensions are at least 1.
class Matrix {
 public:
  // empty placeholder, e.g. as container member before assignment
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Vector col(std::size_t j) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
Vector subtract(const Vector& a, const Vector& b);
Vector add(const Vector& a, const Vector& b);
Vector scaled(const Vector& a, double s);
// a += s * b
void axpy(Vector& a, double s, const Vector& b);

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& m, const Vector& v);
// m^T v
Vector matvec_t(const Matrix& m, const Vector& v);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

inline constexpr double kDefaultRankTol = 1e-12;

// Thin SVD M = U * diag(singular_values) * Vt with k = min(rows, cols):
// U is rows x k with orthonormal columns, Vt is k x cols with orthonormal
// rows, singular values sorted descending. numeric_rank counts singular
// values above rank_tol * sigma_max (0 for the zero matrix).
struct SvdResult {
  Matrix u;
  std::vector<double> singular_values;
  Matrix vt;
  std::size_t numeric_rank;
};

// One-sided Jacobi. Throws NumericFailure if the sweep budget
// (30 * max(rows, cols)) is exhausted before the columns decouple.
SvdResult svd(const Matrix& m, double rank_tol = kDefaultRankTol);

// Moore-Penrose pseudoinverse; singular values <= rank_tol * sigma_max are
// treated as zero.
Matrix pinv(const Matrix& m, double rank_tol = kDefaultRankTol);

// Minimum-norm least-squares solution of min ||r - B theta||_2.
Vector min_norm_lsq(const Matrix& b, const Vector& r, double rank_tol = kDefaultRankTol);

// Applies the orthogonal projector onto the column space of b, i.e. B B^+ r,
// without forming the projector.
Vector projector_apply(const Matrix& b, const Vector& r, double rank_tol = kDefaultRankTol);
Vector projector_apply(const SvdResult& decomp, const Vector& r);

// Explicit projector B B^+ (n x n); intended for verification on small n.
Matrix projector_matrix(const Matrix& b, double rank_tol = kDefaultRankTol);

// Largest singular value, computed from the Gram matrix of the smaller side.
double spectral_norm(const Matrix& m);

// Eigenvalues of a symmetric matrix, descending, via cyclic Jacobi.
// Throws ContractViolation if the input is not symmetric, NumericFailure if
// the sweep budget is exhausted.
std::vector<double> sym_eigenvalues(const Matrix& a);

// Spectral norm of the difference of the column-space projectors of bu and
// bv, computed from principal angles between the two ranges. Exact up to the
// accuracy of the thin SVDs; never forms an n x n matrix.
double projector_difference_norm(const Matrix& bu, const Matrix& bv,
                                 double rank_tol = kDefaultRankTol);

}  // namespace mcboost
