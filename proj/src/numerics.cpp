#include "rdcert/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdcert/error.hpp"

namespace rdcert {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  for (const auto& r : rows) v.emplace_back(r);
  return from_rows(v);
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw InvalidInput("matrix must be non-empty");
  Mat m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw InvalidInput("ragged matrix rows");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  if (!m.all_finite()) throw InvalidInput("non-finite matrix entry");
  return m;
}

Mat Mat::diagonal(std::span<const double> d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Mat Mat::column(std::span<const double> v) {
  Mat m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Mat Mat::outer(std::span<const double> u, std::span<const double> v) {
  Mat m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
  return m;
}

std::vector<double> Mat::col(std::size_t j) const {
  std::vector<double> c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat& Mat::operator+=(const Mat& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix sum");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix difference");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Mat::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Mat::max_abs() const {
  double s = 0.0;
  for (double v : data_) s = std::max(s, std::abs(v));
  return s;
}

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Mat::is_diagonal() const {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (i != j && (*this)(i, j) != 0.0) return false;
  return true;
}

bool Mat::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0; });
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator-(Mat a) { return a *= -1.0; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

std::vector<double> operator*(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

double inner(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("inner product");
  auto da = a.data();
  auto db = b.data();
  return std::inner_product(da.begin(), da.end(), db.begin(), 0.0);
}

double trace(const Mat& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) s += a(i, i);
  return s;
}

Mat block_diag(const Mat& a, const Mat& b) {
  Mat m(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) m(a.rows() + i, a.cols() + j) = b(i, j);
  return m;
}

// ---------------------------------------------------------------------------

SymMat SymMat::from(const Mat& m) {
  if (!m.square() || m.rows() == 0) throw InvalidInput("symmetric matrix must be square and non-empty");
  if (!m.all_finite()) throw InvalidInput("non-finite entry in symmetric matrix");
  const double scale = 1.0 + m.max_abs();
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw InvalidInput("matrix is not symmetric");
  return symmetric_part(m);
}

SymMat SymMat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  return from(Mat::from_rows(rows));
}

SymMat SymMat::symmetric_part(const Mat& m) {
  SymMat s(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s.m_(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < m.cols(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  }
  return s;
}

SymMat SymMat::identity(std::size_t n) {
  SymMat s(n);
  for (std::size_t i = 0; i < n; ++i) s.m_(i, i) = 1.0;
  return s;
}

SymMat SymMat::diagonal(std::span<const double> d) {
  SymMat s(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) s.m_(i, i) = d[i];
  return s;
}

namespace {

constexpr int kMaxSweeps = 100;

// One Jacobi rotation annihilating a(p,q); also accumulates into v.
void rotate(Mat& a, Mat& v, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r != p && r != q) {
      const double arp = a(r, p);
      const double arq = a(r, q);
      a(r, p) = c * arp - s * arq;
      a(p, r) = a(r, p);
      a(r, q) = s * arp + c * arq;
      a(q, r) = a(r, q);
    }
    const double vrp = v(r, p);
    const double vrq = v(r, q);
    v(r, p) = c * vrp - s * vrq;
    v(r, q) = s * vrp + c * vrq;
  }
}

}  // namespace

EigenDecomposition sym_eigs(const SymMat& m) {
  if (!m.mat().all_finite()) throw InvalidInput("non-finite entry passed to sym_eigs");
  const std::size_t n = m.dim();
  Mat a = m.mat();
  Mat v = Mat::identity(n);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = std::abs(a(p, q));
        if (apq <= 1e-300) continue;
        if (apq <= 1e-17 * std::sqrt(std::abs(a(p, p) * a(q, q)))) continue;
        rotate(a, v, p, q);
        rotated = true;
      }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  EigenDecomposition out{std::vector<double>(n), Mat(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

std::vector<double> sym_eigenvalues(const SymMat& m) { return sym_eigs(m).values; }
double min_eig(const SymMat& m) { return sym_eigs(m).values.front(); }
double max_eig(const SymMat& m) { return sym_eigs(m).values.back(); }

double spectral_norm(const Mat& m) {
  if (!m.all_finite()) throw InvalidInput("non-finite entry passed to spectral_norm");
  if (m.empty()) return 0.0;
  const Mat g = m.cols() <= m.rows() ? m.transpose() * m : m * m.transpose();
  return std::sqrt(std::max(0.0, max_eig(SymMat::symmetric_part(g))));
}

SymMat sym_product(const SymMat& p, const Mat& m) {
  if (!m.square() || m.rows() != p.dim()) throw DimensionMismatch("P and M dimensions differ");
  const Mat pm = p.mat() * m;
  SymMat s(p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i)
    for (std::size_t j = i; j < p.dim(); ++j) s.set(i, j, pm(i, j) + pm(j, i));
  return s;
}

double min_eig_of_sym_part(const Mat& m, const SymMat& p) { return min_eig(sym_product(p, m)); }
double max_eig_of_sym_part(const Mat& m, const SymMat& p) { return max_eig(sym_product(p, m)); }

bool cholesky_solve(const Mat& a, std::span<const double> b, std::vector<double>& x) {
  const std::size_t n = a.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  x.assign(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
    x[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= l(k, i) * x[k];
    x[i] /= l(i, i);
  }
  return true;
}

Mat null_space(const Mat& a, double rel_tol) {
  const std::size_t n = a.cols();
  if (a.rows() == 0) return Mat::identity(n);
  const auto eig = sym_eigs(SymMat::symmetric_part(a.transpose() * a));
  const double top = std::max(eig.values.back(), 0.0);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < n; ++k)
    if (eig.values[k] <= rel_tol * rel_tol * top) keep.push_back(k);
  Mat basis(n, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c)
    for (std::size_t r = 0; r < n; ++r) basis(r, c) = eig.vectors(r, keep[c]);
  return basis;
}

}  // namespace rdcert
