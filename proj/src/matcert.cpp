#include "symnet/matcert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "symnet/errors.hpp"

namespace symnet {

Mat::Mat(int r, int c, double fill)
    : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {
  if (r < 0 || c < 0) throw InputError("matrix dimensions must be nonnegative");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows_init) {
  rows = static_cast<int>(rows_init.size());
  cols = rows ? static_cast<int>(rows_init.begin()->size()) : 0;
  a.reserve(static_cast<std::size_t>(rows) * cols);
  for (const auto& r : rows_init) {
    if (static_cast<int>(r.size()) != cols)
      throw InputError("ragged matrix initializer");
    a.insert(a.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(int n) {
  Mat m(n, n, 0.0);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::transposed() const {
  Mat t(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat Mat::block(int i0, int j0, int r, int c) const {
  if (i0 < 0 || j0 < 0 || i0 + r > rows || j0 + c > cols)
    throw InputError("matrix block out of range");
  Mat b(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
  return b;
}

static void check_same_shape(const Mat& x, const Mat& y, const char* op) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw InputError(std::string("matrix shape mismatch in ") + op);
}

Mat operator+(const Mat& x, const Mat& y) {
  check_same_shape(x, y, "+");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

Mat operator-(const Mat& x, const Mat& y) {
  check_same_shape(x, y, "-");
  Mat r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

Mat operator*(const Mat& x, const Mat& y) {
  if (x.cols != y.rows) throw InputError("matrix shape mismatch in *");
  Mat r(x.rows, y.cols, 0.0);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double v = x(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
    }
  return r;
}

Mat operator*(double s, const Mat& x) {
  Mat r = x;
  for (double& v : r.a) v *= s;
  return r;
}

Vec operator*(const Mat& x, const Vec& v) {
  if (x.cols != static_cast<int>(v.size()))
    throw InputError("matrix/vector shape mismatch");
  Vec r(static_cast<std::size_t>(x.rows), 0.0);
  for (int i = 0; i < x.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols; ++j) s += x(i, j) * v[static_cast<std::size_t>(j)];
    r[static_cast<std::size_t>(i)] = s;
  }
  return r;
}

double frobenius_norm(const Mat& x) {
  double s = 0.0;
  for (double v : x.a) s += v * v;
  return std::sqrt(s);
}

Vec vec_add(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw InputError("vector size mismatch");
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

Vec vec_sub(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw InputError("vector size mismatch");
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

double sup_norm(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double euclid_norm(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

SymMatrix::SymMatrix(const Mat& m) {
  if (m.rows != m.cols) throw InputError("symmetric matrix must be square");
  n = m.rows;
  a.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i) * n + j] = 0.5 * (m(i, j) + m(j, i));
}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix s(dim);
  for (int i = 0; i < dim; ++i) s.at(i, i) = 1.0;
  return s;
}

Mat SymMatrix::dense() const {
  Mat m(n, n);
  m.a = a;
  return m;
}

double SymMatrix::quad(const Vec& x) const {
  if (static_cast<int>(x.size()) != n)
    throw InputError("quadratic form dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += (*this)(i, j) * x[static_cast<std::size_t>(j)];
    s += x[static_cast<std::size_t>(i)] * row;
  }
  return s;
}

SymMatrix operator+(const SymMatrix& x, const SymMatrix& y) {
  if (x.n != y.n) throw InputError("symmetric matrix size mismatch");
  SymMatrix r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

SymMatrix operator-(const SymMatrix& x, const SymMatrix& y) {
  if (x.n != y.n) throw InputError("symmetric matrix size mismatch");
  SymMatrix r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

SymMatrix operator*(double s, const SymMatrix& x) {
  SymMatrix r = x;
  for (double& v : r.a) v *= s;
  return r;
}

/* One cyclic Jacobi sweep zeroes every off-diagonal pair once; quadratic
 * convergence sets in after a few sweeps.  The rotation accumulates into V
 * so eigenvectors come for free. */
EigResult sym_eig(const SymMatrix& s) {
  const int n = s.n;
  EigResult out;
  out.values.assign(static_cast<std::size_t>(n), 0.0);
  out.vectors = Mat::identity(n);
  if (n == 0) return out;

  Mat a = s.dense();
  Mat& v = out.vectors;

  double scale = 0.0;
  for (double x : a.a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) scale = 1.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale * n) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) continue;
        const double diff = a(q, q) - a(p, p);
        double t;
        if (std::abs(apq) < 1e-300 * std::abs(diff)) {
          t = apq / diff;
        } else {
          const double theta = diff / (2.0 * apq);
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        const double tau = sn / (1.0 + c);

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = akp - sn * (akq + tau * akp);
          a(p, k) = a(k, p);
          a(k, q) = akq + sn * (akp - tau * akq);
          a(q, k) = a(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp - sn * (vkq + tau * vkp);
          v(k, q) = vkq + sn * (vkp - tau * vkq);
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });

  Mat sorted_v(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[static_cast<std::size_t>(j)] = a(order[static_cast<std::size_t>(j)],
                                                order[static_cast<std::size_t>(j)]);
    for (int i = 0; i < n; ++i)
      sorted_v(i, j) = v(i, order[static_cast<std::size_t>(j)]);
  }
  out.vectors = sorted_v;
  return out;
}

Vec sym_eigvals(const SymMatrix& s) { return sym_eig(s).values; }

bool is_psd(const SymMatrix& s, double tol) {
  if (s.n == 0) return true;
  const Vec ev = sym_eigvals(s);
  return ev.front() >= -tol;
}

PosNegSplit pos_neg_split(const SymMatrix& s) {
  const EigResult e = sym_eig(s);
  const int n = s.n;
  Mat pos(n, n, 0.0);
  for (int k = 0; k < n; ++k) {
    const double lam = e.values[static_cast<std::size_t>(k)];
    if (lam <= 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const double vik = e.vectors(i, k);
      if (vik == 0.0) continue;
      for (int j = 0; j < n; ++j) pos(i, j) += lam * vik * e.vectors(j, k);
    }
  }
  PosNegSplit out;
  out.pos = SymMatrix(pos);
  out.neg = s - out.pos;  // exact complement keeps pos + neg == s
  return out;
}

double min_dominance_scale(const SymMatrix& a, const SymMatrix& b) {
  if (a.n != b.n) throw InputError("dominance scale needs equal dimensions");
  const EigResult eb = sym_eig(b);
  double bmax = 0.0;
  for (double l : eb.values) bmax = std::max(bmax, std::abs(l));
  if (eb.values.empty() || eb.values.front() <= 1e-12 * std::max(1.0, bmax))
    throw ParamError("dominance scale requires a positive definite base matrix");

  /* form B^{-1/2} = V diag(1/sqrt(lambda)) V^T */
  const int n = b.n;
  Mat half(n, n, 0.0);
  for (int k = 0; k < n; ++k) {
    const double w = 1.0 / std::sqrt(eb.values[static_cast<std::size_t>(k)]);
    for (int i = 0; i < n; ++i) {
      const double vik = eb.vectors(i, k);
      for (int j = 0; j < n; ++j) half(i, j) += w * vik * eb.vectors(j, k);
    }
  }
  const SymMatrix pencil(half * a.dense() * half);
  const Vec ev = sym_eigvals(pencil);
  return ev.back();
}

}  // namespace symnet
