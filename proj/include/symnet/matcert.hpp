/* matcert.hpp
 *
 * Dense matrix numerics used by the certificate machinery: a small row-major
 * matrix type, a symmetric-matrix wrapper that symmetrizes on construction,
 * a cyclic Jacobi eigensolver, and the spectral helpers built on top of it
 * (PSD tests, positive/negative spectral splits, dominance scales).
 *
 * All matrices involved are small (a few hundred rows at most), so a
 * self-contained O(n^3) dense solver is deliberate: it keeps results
 * deterministic across platforms and avoids an external solver dependency.
 */
#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace symnet {

using Vec = std::vector<double>;

/* general dense row-major matrix */
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // rows*cols entries, row-major

  Mat() = default;
  Mat(int r, int c, double fill = 0.0);
  Mat(std::initializer_list<std::initializer_list<double>> rows_init);

  static Mat identity(int n);
  static Mat zero(int r, int c) { return Mat(r, c, 0.0); }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  Mat transposed() const;
  /* contiguous sub-block starting at (i0, j0) with r x c entries */
  Mat block(int i0, int j0, int r, int c) const;
};

Mat operator+(const Mat& x, const Mat& y);
Mat operator-(const Mat& x, const Mat& y);
Mat operator*(const Mat& x, const Mat& y);
Mat operator*(double s, const Mat& x);
Vec operator*(const Mat& x, const Vec& v);

double frobenius_norm(const Mat& x);

/* vector helpers shared across modules */
Vec vec_add(const Vec& x, const Vec& y);
Vec vec_sub(const Vec& x, const Vec& y);
double sup_norm(const Vec& x);
double euclid_norm(const Vec& x);

/* symmetric matrix; construction symmetrizes via (A + A^T)/2 so that small
 * asymmetries in user input cannot leak into the eigensolver */
struct SymMatrix {
  int n = 0;
  std::vector<double> a;  // n*n entries, row-major, kept exactly symmetric

  SymMatrix() = default;
  explicit SymMatrix(const Mat& m);
  explicit SymMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows_init)
      : SymMatrix(Mat(rows_init)) {}

  static SymMatrix identity(int dim);

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }

  Mat dense() const;
  /* principal sub-block (i0, i0) of size r (used for certificate blocks) */
  Mat block(int i0, int j0, int r, int c) const { return dense().block(i0, j0, r, c); }

  /* x^T S x */
  double quad(const Vec& x) const;
};

SymMatrix operator+(const SymMatrix& x, const SymMatrix& y);
SymMatrix operator-(const SymMatrix& x, const SymMatrix& y);
SymMatrix operator*(double s, const SymMatrix& x);

/* eigendecomposition S = V diag(values) V^T, values ascending,
 * V orthonormal with eigenvectors in columns */
struct EigResult {
  Vec values;
  Mat vectors;
};

/* cyclic Jacobi rotations until the off-diagonal mass is negligible;
 * deterministic sweep order, no randomization */
EigResult sym_eig(const SymMatrix& s);

/* eigenvalues only, ascending */
Vec sym_eigvals(const SymMatrix& s);

/* min eigenvalue >= -tol */
bool is_psd(const SymMatrix& s, double tol);

/* S = P + N with P built from the nonnegative part of the spectrum
 * (so P >= 0 up to solver accuracy) and N = S - P (<= 0 likewise) */
struct PosNegSplit {
  SymMatrix pos;
  SymMatrix neg;
};
PosNegSplit pos_neg_split(const SymMatrix& s);

/* smallest c with c*B - A >= 0 for B positive definite,
 * i.e. the max eigenvalue of B^{-1/2} A B^{-1/2} */
double min_dominance_scale(const SymMatrix& a, const SymMatrix& b);

}  // namespace symnet
