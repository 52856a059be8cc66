#pragma once

// Dense real linear algebra for the small matrices (dimension <= ~30) that
// appear in Lyapunov inequalities, Laplacians and Jacobians.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rdcert {

/// Dense row-major real matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Mat identity(std::size_t n);
  static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat from_rows(const std::vector<std::vector<double>>& rows);
  static Mat diagonal(std::span<const double> d);
  static Mat column(std::span<const double> v);
  /// u v^T
  static Mat outer(std::span<const double> u, std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double> col(std::size_t j) const;

  Mat transpose() const;
  Mat& operator+=(const Mat& o);
  Mat& operator-=(const Mat& o);
  Mat& operator*=(double s);

  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;
  bool is_diagonal() const;
  /// Every entry zero.
  bool is_zero() const;

  bool operator==(const Mat& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator-(Mat a);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(double s, Mat a);
std::vector<double> operator*(const Mat& a, std::span<const double> x);

/// Frobenius inner product <a, b> = trace(a^T b).
double inner(const Mat& a, const Mat& b);
double trace(const Mat& a);
/// Block-diagonal [a 0; 0 b].
Mat block_diag(const Mat& a, const Mat& b);

/// Dense real symmetric matrix. Exact symmetry entries(i,j) == entries(j,i) is an
/// invariant; constructors either verify it or enforce it.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(std::size_t n) : m_(n, n) {}

  /// Accepts m if it is symmetric up to 1e-12 relative asymmetry, averaging the
  /// two triangles; throws InvalidInput otherwise or on non-finite entries.
  static SymMat from(const Mat& m);
  static SymMat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// (m + m^T)/2 with no asymmetry check.
  static SymMat symmetric_part(const Mat& m);
  static SymMat identity(std::size_t n);
  static SymMat diagonal(std::span<const double> d);

  std::size_t dim() const { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  const Mat& mat() const { return m_; }

  SymMat& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  friend SymMat operator*(double s, SymMat p) { return p *= s; }
  friend SymMat operator-(SymMat p) { return p *= -1.0; }

 private:
  Mat m_;
};

struct EigenDecomposition {
  std::vector<double> values;  ///< ascending
  Mat vectors;                 ///< orthonormal, column k pairs with values[k]
};

/// Cyclic Jacobi eigensolver. Deterministic row-cyclic sweep order; rotations
/// stop once every off-diagonal entry is negligible relative to its diagonal
/// pair, which keeps small eigenvalues of graded positive definite matrices
/// accurate (needed by the interior-point scaling).
EigenDecomposition sym_eigs(const SymMat& m);
std::vector<double> sym_eigenvalues(const SymMat& m);
double min_eig(const SymMat& m);
double max_eig(const SymMat& m);

/// Largest singular value.
double spectral_norm(const Mat& m);

/// p m + m^T p
SymMat sym_product(const SymMat& p, const Mat& m);
/// lambda_min(p m + m^T p)
double min_eig_of_sym_part(const Mat& m, const SymMat& p);
/// lambda_max(p m + m^T p)
double max_eig_of_sym_part(const Mat& m, const SymMat& p);

/// Solves a x = b for symmetric positive definite a. Returns false when the
/// factorization breaks down.
bool cholesky_solve(const Mat& a, std::span<const double> b, std::vector<double>& x);

/// Orthonormal basis (as columns) of the null space of a, using singular
/// values below rel_tol * largest singular value (computed from a^T a, so
/// rel_tol much below 1e-7 is not resolvable).
Mat null_space(const Mat& a, double rel_tol = 1e-6);

}  // namespace rdcert
