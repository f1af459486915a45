// Dense exterior algebra on R^n (n <= 10).
//
// A k-form is stored by its coefficients on the increasing basis tuples
// e^{i1} ^ ... ^ e^{ik}, i1 < ... < ik, in lexicographic order.  The
// coefficient on a tuple is the value of the form on the corresponding
// increasing tuple of basis vectors; there are no k! factors anywhere.
// Indices are 0-based throughout.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace g2link {

inline constexpr int kMaxFormDim = 10;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a 3-form is too degenerate to define a G2 metric.
class DegenerateForm : public std::runtime_error {
 public:
  explicit DegenerateForm(double det_b)
      : std::runtime_error("degenerate 3-form: |det B| = " + std::to_string(det_b)),
        det_b_(det_b) {}
  double det_b() const { return det_b_; }

 private:
  double det_b_;
};

/// Binomial coefficient C(n, k), zero outside 0 <= k <= n.
int binomial(int n, int k);

/// Lexicographic enumeration of k-subsets of {0..n-1}, as bitmasks.
class MultiIndex {
 public:
  /// All k-subsets of n in lexicographic order.
  static const std::vector<std::uint32_t>& subsets(int n, int k);
  /// Rank of a bitmask inside subsets(n, popcount(mask)).
  static int rank(int n, std::uint32_t mask);
  /// Bitmask from an increasing list of indices; throws on bad input.
  static std::uint32_t mask(int n, std::span<const int> indices);
  static std::vector<int> indices(std::uint32_t mask);
  /// Sign of the permutation sorting the concatenation (I, J); 0 if they overlap.
  static int concat_sign(std::uint32_t first, std::uint32_t second);
};

class AltForm {
 public:
  AltForm() = default;
  AltForm(int dim, int degree);
  AltForm(int dim, int degree, std::vector<double> coeffs);

  /// c * e^{i1...ik}; indices need not be sorted (the sign is applied).
  static AltForm basis(int dim, std::initializer_list<int> indices, double c = 1.0);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  std::size_t size() const { return coeffs_.size(); }

  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  const std::vector<double>& vector() const { return coeffs_; }
  Eigen::Map<const Eigen::VectorXd> as_eigen() const {
    return {coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size())};
  }

  double operator[](std::size_t rank) const { return coeffs_[rank]; }
  double& operator[](std::size_t rank) { return coeffs_[rank]; }

  /// Coefficient on an increasing index tuple.
  double at(std::initializer_list<int> indices) const;

  /// Euclidean norm of the coefficient vector.
  double coeff_norm() const;

  AltForm& operator+=(const AltForm& other);
  AltForm& operator-=(const AltForm& other);
  AltForm& operator*=(double s);

  friend AltForm operator+(AltForm a, const AltForm& b) { return a += b; }
  friend AltForm operator-(AltForm a, const AltForm& b) { return a -= b; }
  friend AltForm operator*(AltForm a, double s) { return a *= s; }
  friend AltForm operator*(double s, AltForm a) { return a *= s; }
  friend AltForm operator-(AltForm a) { return a *= -1.0; }

 private:
  void check_same_shape(const AltForm& other) const;

  int dim_ = 0;
  int degree_ = 0;
  std::vector<double> coeffs_;
};

/// Symmetric n x n metric.  Symmetry is enforced on construction.
class MetricTensor {
 public:
  MetricTensor() = default;
  explicit MetricTensor(Eigen::MatrixXd g);
  static MetricTensor identity(int n) { return MetricTensor(Eigen::MatrixXd::Identity(n, n)); }
  static MetricTensor diagonal(std::initializer_list<double> entries);

  int dim() const { return static_cast<int>(g_.rows()); }
  const Eigen::MatrixXd& matrix() const { return g_; }
  double operator()(int i, int j) const { return g_(i, j); }

  bool is_positive_definite() const;
  Eigen::VectorXd eigenvalues() const;

  /// Lower triangle, row-major: (0,0), (1,0), (1,1), (2,0), ...
  std::vector<double> lower_triangle() const;
  static MetricTensor from_lower_triangle(int n, std::span<const double> entries);

 private:
  Eigen::MatrixXd g_;
};

AltForm wedge(const AltForm& a, const AltForm& b);
AltForm interior_product(std::span<const double> v, const AltForm& a);
/// Contraction with the i-th coordinate vector.
AltForm interior_basis(int i, const AltForm& a);

/// Hodge star with respect to g and the orientation `orientation` * e^{1..n}.
AltForm hodge_star(const AltForm& a, const MetricTensor& g, int orientation = 1);
AltForm hodge_star(const AltForm& a);

/// Pointwise norm induced by g on k-forms.
double norm(const AltForm& a, const MetricTensor& g);
double norm(const AltForm& a);
double inner(const AltForm& a, const AltForm& b, const MetricTensor& g);

/// Pullback along the linear map x_old = A x_new.
AltForm pullback(const AltForm& a, const Eigen::MatrixXd& A);

/// k-th compound matrix: entry (I, J) is det(M[I, J]) over lexicographic k-subsets.
Eigen::MatrixXd compound_matrix(const Eigen::MatrixXd& M, int k);

/// Coefficient of a top-degree form.
double top_coefficient(const AltForm& a);

struct G2Metric {
  MetricTensor metric;
  /// sqrt(det g) = |det B|^{1/9}.
  double volume_density = 0.0;
  /// +1 when phi orients the chart like e^{1..7}, -1 otherwise.
  int orientation = 1;
};

/// Nondegeneracy threshold on |det B|.
inline constexpr double kDegenerateDetB = 1e-30;

/// Metric, volume density and orientation induced by a 3-form on R^7.
///
/// B_ij is read off -6 B_ij e^{1..7} = (d_i _| phi) ^ (d_j _| phi) ^ phi,
/// and g = B / (det B)^{1/9} with the real ninth root.  For the standard
/// form phi0 this gives B = -I and g = I; the sign of det B is minus the
/// orientation induced by phi.
G2Metric metric_from_3form(const AltForm& phi);

/// The B matrix above, exposed for tests.
Eigen::Matrix<double, 7, 7> g2_b_matrix(const AltForm& phi);

/// phi0 = e123 + e145 + e167 + e246 - e257 - e347 - e356 (1-based labels).
const AltForm& phi0();
/// psi0 = *phi0.
const AltForm& psi0();

/// Volume form sqrt(det g) * orientation * e^{1..n}.
AltForm volume_form(const MetricTensor& g, int orientation = 1);

}  // namespace g2link
