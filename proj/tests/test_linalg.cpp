#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcboost/linalg.hpp"
#include "mcboost/verify.hpp"

using namespace mcboost;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = normal01(rng);
  return m;
}

double reconstruction_error(const Matrix& m, const SvdResult& d) {
  const std::size_t k = d.singular_values.size();
  Matrix rebuilt(m.rows(), m.cols());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double u = d.u(i, r) * d.singular_values[r];
      for (std::size_t j = 0; j < m.cols(); ++j) rebuilt(i, j) += u * d.vt(r, j);
    }
  }
  return max_abs_diff(rebuilt, m);
}

double orthonormality_error(const SvdResult& d) {
  const std::size_t k = d.singular_values.size();
  double worst = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      double utu = 0.0, vvt = 0.0;
      for (std::size_t i = 0; i < d.u.rows(); ++i) utu += d.u(i, a) * d.u(i, b);
      for (std::size_t j = 0; j < d.vt.cols(); ++j) vvt += d.vt(a, j) * d.vt(b, j);
      const double target = a == b ? 1.0 : 0.0;
      worst = std::max({worst, std::abs(utu - target), std::abs(vvt - target)});
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("matrix construction validates invariants") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), ContractViolation);
  CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1.0, std::nan("")}), ContractViolation);
  const Matrix m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(m(1, 0) == 3.0);
}

TEST_CASE("svd of the identity") {
  const SvdResult d = svd(Matrix::identity(3));
  CHECK(d.numeric_rank == 3);
  for (double s : d.singular_values) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd of diag(3, 0)") {
  const Matrix m{{3.0, 0.0}, {0.0, 0.0}};
  const SvdResult d = svd(m, 1e-12);
  CHECK(d.singular_values[0] == doctest::Approx(3.0));
  CHECK(d.singular_values[1] == doctest::Approx(0.0));
  CHECK(d.numeric_rank == 1);
  CHECK(orthonormality_error(d) <= 1e-10);  // U completed past the zero value
}

TEST_CASE("svd reconstruction on seeded rectangular matrices") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t rows = 2 + rng() % 6;
    const std::size_t cols = 2 + rng() % 6;
    const Matrix m = random_matrix(rng, rows, cols);
    const SvdResult d = svd(m);
    CHECK(reconstruction_error(m, d) <= 1e-9 * (1.0 + max_abs(m)));
    CHECK(orthonormality_error(d) <= 1e-10);
    for (std::size_t i = 1; i < d.singular_values.size(); ++i) {
      CHECK(d.singular_values[i - 1] >= d.singular_values[i]);
    }
  }
}

TEST_CASE("svd of the 5x3 seeded example reconstructs to 1e-9") {
  std::mt19937_64 rng(7);
  const Matrix m = random_matrix(rng, 5, 3);
  const SvdResult d = svd(m);
  CHECK(reconstruction_error(m, d) <= 1e-9 * (1.0 + max_abs(m)));
}

TEST_CASE("pinv inverts an invertible diagonal") {
  const Matrix p = pinv(Matrix{{2.0, 0.0}, {0.0, 4.0}});
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(p(0, 1)) + std::abs(p(1, 0)) <= 1e-12);
}

TEST_CASE("pinv of the all-ones column is the averaging row") {
  const Matrix ones(4, 1, 1.0);
  const Matrix p = pinv(ones);
  REQUIRE(p.rows() == 1);
  REQUIRE(p.cols() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(p(0, j) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("pinv of a rank-1 outer product matches the closed form") {
  std::mt19937_64 rng(11);
  Vector u(5), v(3);
  for (double& x : u) x = normal01(rng);
  for (double& x : v) x = normal01(rng);
  Matrix m(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = u[i] * v[j];
  const Matrix p = pinv(m);
  const double denom = dot(u, u) * dot(v, v);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(p(i, j) == doctest::Approx(v[i] * u[j] / denom).epsilon(1e-9));
    }
  }
  CHECK(verify::penrose_check(m, p) <= 1e-8 * (1.0 + spectral_norm(m)));
}

namespace {

Matrix random_orthonormal(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  Matrix q(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    Vector col(n);
    for (double& v : col) v = normal01(rng);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t c = 0; c < j; ++c) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += col[i] * q(i, c);
        for (std::size_t i = 0; i < n; ++i) col[i] -= proj * q(i, c);
      }
    }
    const double nrm = norm2(col);
    for (std::size_t i = 0; i < n; ++i) q(i, j) = col[i] / nrm;
  }
  return q;
}

// controlled spectrum: entries of sigma may be exactly zero, the rest stay
// well away from the rank threshold
Matrix matrix_with_spectrum(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            const std::vector<double>& sigma) {
  const std::size_t k = std::min(rows, cols);
  const Matrix qu = random_orthonormal(rng, rows, k);
  const Matrix qv = random_orthonormal(rng, cols, k);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) += sigma[r] * qu(i, r) * qv(j, r);
  }
  return m;
}

}  // namespace

TEST_CASE("penrose conditions across the seeded shape battery") {
  std::mt19937_64 rng(123);
  auto check_shape = [&](std::size_t rows, std::size_t cols, bool rank_deficient) {
    const std::size_t k = std::min(rows, cols);
    std::vector<double> sigma(k);
    for (std::size_t r = 0; r < k; ++r) sigma[r] = uniform_in(rng, 0.3, 3.0);
    if (rank_deficient) sigma[k - 1] = 0.0;
    const Matrix m = matrix_with_spectrum(rng, rows, cols, sigma);
    const Matrix p = pinv(m);
    const double sigma1 = spectral_norm(m);
    CHECK(verify::penrose_check(m, p) <= 1e-8 * (1.0 + sigma1));
  };
  for (int rep = 0; rep < 10; ++rep) {
    check_shape(3, 3, false);
    check_shape(5, 2, false);
    check_shape(2, 5, false);
    check_shape(4, 4, true);
  }
}

TEST_CASE("svd recovers a planted spectrum including exact zeros") {
  std::mt19937_64 rng(321);
  const std::vector<double> planted = {2.5, 1.0, 0.25, 0.0};
  const Matrix m = matrix_with_spectrum(rng, 6, 4, planted);
  const SvdResult d = svd(m);
  CHECK(d.numeric_rank == 3);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(d.singular_values[i] == doctest::Approx(planted[i]).epsilon(1e-10));
  }
}

TEST_CASE("min_norm_lsq identity case") {
  const Vector theta = min_norm_lsq(Matrix::identity(3), {1.0, 2.0, 3.0});
  CHECK(theta[0] == doctest::Approx(1.0));
  CHECK(theta[1] == doctest::Approx(2.0));
  CHECK(theta[2] == doctest::Approx(3.0));
}

TEST_CASE("min_norm_lsq against the ones column returns the mean") {
  const Vector theta = min_norm_lsq(Matrix(4, 1, 1.0), {1.0, 2.0, 3.0, 6.0});
  REQUIRE(theta.size() == 1);
  CHECK(theta[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("min_norm_lsq picks the minimum-norm minimizer on rank-deficient input") {
  // minimizers are theta = (a, 2 - a); norm is minimal at a = 1
  const Vector theta = min_norm_lsq(Matrix{{1.0, 1.0}, {1.0, 1.0}}, {2.0, 2.0});
  CHECK(theta[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(theta[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("min_norm_lsq rejects mismatched dimensions") {
  CHECK_THROWS_AS(min_norm_lsq(Matrix(3, 2), {1.0, 2.0}), ContractViolation);
}

TEST_CASE("projector fixes vectors already in the column space") {
  std::mt19937_64 rng(5);
  const Matrix b = random_matrix(rng, 6, 3);
  const Vector r = matvec(b, {1.0, 1.0, 1.0});
  const Vector pr = projector_apply(b, r);
  CHECK(norm2(subtract(pr, r)) <= 1e-9 * (1.0 + norm2(r)));
}

TEST_CASE("projector annihilates vectors orthogonal to the column space") {
  const Matrix b(4, 1, 1.0);
  const Vector r = {1.0, -1.0, 2.0, -2.0};  // orthogonal to the ones column
  CHECK(norm2(projector_apply(b, r)) <= 1e-9);
}

TEST_CASE("projection onto the constants is the mean") {
  const Vector pr = projector_apply(Matrix(4, 1, 1.0), {1.0, 2.0, 3.0, 6.0});
  for (double v : pr) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("projector algebra: symmetric, idempotent, norm 0 or 1") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 8; ++rep) {
    const std::size_t n = 4 + rng() % 4;
    const std::size_t p = 1 + rng() % n;
    const Matrix b = random_matrix(rng, n, p);
    const Matrix a = projector_matrix(b);
    CHECK(max_abs_diff(a, transpose(a)) <= 1e-9);
    CHECK(max_abs_diff(matmul(a, a), a) <= 1e-9);
    const double nrm = spectral_norm(a);
    CHECK((std::abs(nrm) <= 1e-9 || std::abs(nrm - 1.0) <= 1e-9));
  }
}

TEST_CASE("I - A is non-expansive") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 3 + rng() % 5;
    const Matrix b = random_matrix(rng, n, 1 + rng() % n);
    Vector v(n);
    for (double& x : v) x = normal01(rng);
    const Vector residue = subtract(v, projector_apply(b, v));
    CHECK(norm2(residue) <= norm2(v) * (1.0 + 1e-12));
  }
}

TEST_CASE("spectral norm examples") {
  CHECK(spectral_norm(Matrix::identity(3)) == doctest::Approx(1.0));
  CHECK(spectral_norm(Matrix{{3.0, 0.0}, {0.0, 0.0}}) == doctest::Approx(3.0));
  // sigma_1 = sqrt(lambda_max(M^T M)) = sqrt(4) for the nilpotent shift
  CHECK(spectral_norm(Matrix{{0.0, 2.0}, {0.0, 0.0}}) == doctest::Approx(2.0));
}

TEST_CASE("numeric rank respects the relative threshold") {
  Matrix m(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-6;
  m(2, 2) = 1e-15;
  CHECK(svd(m, 1e-12).numeric_rank == 2);
  CHECK(svd(m, 1e-8).numeric_rank == 2);
  CHECK(svd(m, 1e-3).numeric_rank == 1);
  CHECK(svd(Matrix(3, 2, 0.0), 1e-12).numeric_rank == 0);
}

TEST_CASE("sym_eigenvalues on a known spectrum") {
  // A = Q diag(5, 2, -1) Q^T for a Householder Q
  const Matrix d{{5.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, -1.0}};
  Vector w = {1.0, 1.0, 1.0};
  const double nw = norm2(w);
  for (double& x : w) x /= nw;
  Matrix q = Matrix::identity(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) q(i, j) -= 2.0 * w[i] * w[j];
  const Matrix a = matmul(matmul(q, d), transpose(q));
  const auto ev = sym_eigenvalues(a);
  CHECK(ev[0] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(ev[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(ev[2] == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("projector_difference_norm agrees with the dense difference") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 5 + rng() % 3;
    const Matrix bu = random_matrix(rng, n, 2);
    const Matrix bv = random_matrix(rng, n, 2);
    const Matrix diff = [&] {
      Matrix d0 = projector_matrix(bu);
      const Matrix d1 = projector_matrix(bv);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d0(i, j) -= d1(i, j);
      return d0;
    }();
    const double dense = spectral_norm(diff);
    const double angles = projector_difference_norm(bu, bv);
    CHECK(angles == doctest::Approx(dense).epsilon(1e-8));
  }
}

TEST_CASE("pinv propagates shape errors in penrose_check") {
  CHECK_THROWS_AS(verify::penrose_check(Matrix(3, 2), Matrix(3, 2)), ContractViolation);
}
