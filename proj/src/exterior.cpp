#include "g2link/exterior.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <memory>
#include <mutex>

namespace g2link {

namespace {

void check_dim(int n) {
  if (n < 0 || n > kMaxFormDim) throw DimensionMismatch("form dimension out of range: " + std::to_string(n));
}

struct SubsetTable {
  std::vector<std::vector<std::uint32_t>> by_degree;  // [k] -> masks
  std::vector<int> rank_of;                          // [mask] -> rank
};

const SubsetTable& subset_table(int n) {
  static std::array<std::unique_ptr<SubsetTable>, kMaxFormDim + 1> tables;
  static std::array<std::once_flag, kMaxFormDim + 1> flags;
  std::call_once(flags[n], [n] {
    auto t = std::make_unique<SubsetTable>();
    t->by_degree.resize(n + 1);
    t->rank_of.assign(std::size_t{1} << n, -1);
    // Lexicographic order of increasing tuples equals the order produced by
    // this recursion, which appends the smallest next element first.
    for (int k = 0; k <= n; ++k) {
      auto& out = t->by_degree[k];
      std::vector<int> idx(k);
      for (int i = 0; i < k; ++i) idx[i] = i;
      while (true) {
        std::uint32_t m = 0;
        for (int i : idx) m |= 1u << i;
        t->rank_of[m] = static_cast<int>(out.size());
        out.push_back(m);
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
      }
    }
    tables[n] = std::move(t);
  });
  return *tables[n];
}

struct WedgeEntry {
  int a, b, out;
  double sign;
};

const std::vector<WedgeEntry>& wedge_table(int n, int p, int q) {
  constexpr int N = kMaxFormDim + 1;
  static std::array<std::unique_ptr<std::vector<WedgeEntry>>, N * N * N> tables;
  static std::array<std::once_flag, N * N * N> flags;
  const int key = (n * N + p) * N + q;
  std::call_once(flags[key], [&] {
    auto t = std::make_unique<std::vector<WedgeEntry>>();
    const auto& table = subset_table(n);
    const auto& left = table.by_degree[p];
    const auto& right = table.by_degree[q];
    for (int i = 0; i < static_cast<int>(left.size()); ++i) {
      for (int j = 0; j < static_cast<int>(right.size()); ++j) {
        if (left[i] & right[j]) continue;
        const int s = MultiIndex::concat_sign(left[i], right[j]);
        t->push_back({i, j, table.rank_of[left[i] | right[j]], static_cast<double>(s)});
      }
    }
    tables[key] = std::move(t);
  });
  return *tables[key];
}

// Determinant of a small dense matrix stored row-major in `m` (k x k), destroyed.
double small_det(double* m, int k) {
  double det = 1.0;
  for (int c = 0; c < k; ++c) {
    int piv = c;
    double best = std::abs(m[c * k + c]);
    for (int r = c + 1; r < k; ++r) {
      const double v = std::abs(m[r * k + c]);
      if (v > best) { best = v; piv = r; }
    }
    if (best == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < k; ++j) std::swap(m[c * k + j], m[piv * k + j]);
      det = -det;
    }
    const double d = m[c * k + c];
    det *= d;
    for (int r = c + 1; r < k; ++r) {
      const double f = m[r * k + c] / d;
      if (f == 0.0) continue;
      for (int j = c + 1; j < k; ++j) m[r * k + j] -= f * m[c * k + j];
    }
  }
  return det;
}

double real_root(double x, double p) { return std::copysign(std::pow(std::abs(x), 1.0 / p), x); }

}  // namespace

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

const std::vector<std::uint32_t>& MultiIndex::subsets(int n, int k) {
  check_dim(n);
  if (k < 0 || k > n) throw DimensionMismatch("degree out of range");
  return subset_table(n).by_degree[k];
}

int MultiIndex::rank(int n, std::uint32_t mask) {
  check_dim(n);
  if (mask >> n) throw DimensionMismatch("multi-index exceeds dimension");
  return subset_table(n).rank_of[mask];
}

std::uint32_t MultiIndex::mask(int n, std::span<const int> indices) {
  std::uint32_t m = 0;
  int prev = -1;
  for (int i : indices) {
    if (i <= prev || i >= n) throw std::invalid_argument("multi-index must be strictly increasing in [0, n)");
    m |= 1u << i;
    prev = i;
  }
  return m;
}

std::vector<int> MultiIndex::indices(std::uint32_t mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1)
    if (mask & 1u) out.push_back(i);
  return out;
}

int MultiIndex::concat_sign(std::uint32_t first, std::uint32_t second) {
  if (first & second) return 0;
  int inversions = 0;
  for (std::uint32_t s = second; s; s &= s - 1) {
    const int j = std::countr_zero(s);
    inversions += std::popcount(first >> (j + 1));
  }
  return (inversions & 1) ? -1 : 1;
}

AltForm::AltForm(int dim, int degree) : dim_(dim), degree_(degree) {
  check_dim(dim);
  if (degree < 0) throw DimensionMismatch("negative degree");
  coeffs_.assign(binomial(dim, degree), 0.0);
}

AltForm::AltForm(int dim, int degree, std::vector<double> coeffs) : AltForm(dim, degree) {
  if (coeffs.size() != coeffs_.size())
    throw DimensionMismatch("expected " + std::to_string(coeffs_.size()) + " coefficients, got " +
                            std::to_string(coeffs.size()));
  coeffs_ = std::move(coeffs);
}

AltForm AltForm::basis(int dim, std::initializer_list<int> indices, double c) {
  AltForm out(dim, static_cast<int>(indices.size()));
  std::vector<int> idx(indices);
  // Sort by bubble passes to track the permutation sign.
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j)
      if (idx[j] > idx[j + 1]) { std::swap(idx[j], idx[j + 1]); sign = -sign; }
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (idx[i] == idx[i - 1]) return out;
  out.coeffs_[MultiIndex::rank(dim, MultiIndex::mask(dim, idx))] = sign * c;
  return out;
}

double AltForm::at(std::initializer_list<int> indices) const {
  std::vector<int> idx(indices);
  if (static_cast<int>(idx.size()) != degree_) throw DimensionMismatch("index tuple has wrong length");
  return coeffs_[MultiIndex::rank(dim_, MultiIndex::mask(dim_, idx))];
}

double AltForm::coeff_norm() const { return as_eigen().norm(); }

void AltForm::check_same_shape(const AltForm& other) const {
  if (dim_ != other.dim_ || degree_ != other.degree_) throw DimensionMismatch("forms of different shape");
}

AltForm& AltForm::operator+=(const AltForm& other) {
  check_same_shape(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

AltForm& AltForm::operator-=(const AltForm& other) {
  check_same_shape(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

AltForm& AltForm::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

MetricTensor::MetricTensor(Eigen::MatrixXd g) : g_(std::move(g)) {
  if (g_.rows() != g_.cols()) throw DimensionMismatch("metric must be square");
  const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("metric is not symmetric");
  g_ = 0.5 * (g_ + g_.transpose()).eval();
}

MetricTensor MetricTensor::diagonal(std::initializer_list<double> entries) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double e : entries) d(i++) = e;
  return MetricTensor(d.asDiagonal().toDenseMatrix());
}

bool MetricTensor::is_positive_definite() const {
  Eigen::LLT<Eigen::MatrixXd> llt(g_);
  return llt.info() == Eigen::Success && eigenvalues().minCoeff() > 0.0;
}

Eigen::VectorXd MetricTensor::eigenvalues() const {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g_, Eigen::EigenvaluesOnly).eigenvalues();
}

std::vector<double> MetricTensor::lower_triangle() const {
  std::vector<double> out;
  out.reserve(g_.rows() * (g_.rows() + 1) / 2);
  for (Eigen::Index i = 0; i < g_.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out.push_back(g_(i, j));
  return out;
}

MetricTensor MetricTensor::from_lower_triangle(int n, std::span<const double> entries) {
  if (static_cast<int>(entries.size()) != n * (n + 1) / 2) throw DimensionMismatch("bad lower-triangle length");
  Eigen::MatrixXd g(n, n);
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) g(i, j) = g(j, i) = entries[k++];
  return MetricTensor(std::move(g));
}

AltForm wedge(const AltForm& a, const AltForm& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("wedge of forms on different dimensions");
  const int n = a.dim();
  const int deg = a.degree() + b.degree();
  if (deg > n) return AltForm(n, n);
  AltForm out(n, deg);
  auto oc = out.coeffs();
  const auto ac = a.coeffs();
  const auto bc = b.coeffs();
  for (const auto& e : wedge_table(n, a.degree(), b.degree())) oc[e.out] += e.sign * ac[e.a] * bc[e.b];
  return out;
}

AltForm interior_product(std::span<const double> v, const AltForm& a) {
  if (static_cast<int>(v.size()) != a.dim()) throw DimensionMismatch("vector length differs from form dimension");
  if (a.degree() == 0) throw std::invalid_argument("interior product of a 0-form");
  const int n = a.dim();
  AltForm out(n, a.degree() - 1);
  const auto& masks = MultiIndex::subsets(n, a.degree());
  for (std::size_t r = 0; r < masks.size(); ++r) {
    const double c = a[r];
    if (c == 0.0) continue;
    int pos = 0;
    for (std::uint32_t m = masks[r]; m; m &= m - 1, ++pos) {
      const int i = std::countr_zero(m);
      if (v[i] == 0.0) continue;
      const double s = (pos & 1) ? -1.0 : 1.0;
      out[MultiIndex::rank(n, masks[r] & ~(1u << i))] += s * v[i] * c;
    }
  }
  return out;
}

AltForm interior_basis(int i, const AltForm& a) {
  std::vector<double> v(a.dim(), 0.0);
  v.at(i) = 1.0;
  return interior_product(v, a);
}

Eigen::MatrixXd compound_matrix(const Eigen::MatrixXd& M, int k) {
  if (M.rows() != M.cols()) throw DimensionMismatch("compound of non-square matrix");
  const int n = static_cast<int>(M.rows());
  const auto& masks = MultiIndex::subsets(n, k);
  const int m = static_cast<int>(masks.size());
  Eigen::MatrixXd out(m, m);
  std::array<int, kMaxFormDim> ri{}, ci{};
  std::array<double, kMaxFormDim * kMaxFormDim> buf{};
  for (int I = 0; I < m; ++I) {
    int t = 0;
    for (std::uint32_t s = masks[I]; s; s &= s - 1) ri[t++] = std::countr_zero(s);
    for (int J = 0; J < m; ++J) {
      t = 0;
      for (std::uint32_t s = masks[J]; s; s &= s - 1) ci[t++] = std::countr_zero(s);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) buf[r * k + c] = M(ri[r], ci[c]);
      out(I, J) = small_det(buf.data(), k);
    }
  }
  return out;
}

namespace {

void check_metric(const AltForm& a, const MetricTensor& g) {
  if (g.dim() != a.dim()) throw DimensionMismatch("metric and form dimensions differ");
}

Eigen::MatrixXd inverse_checked(const MetricTensor& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g.matrix());
  if (llt.info() != Eigen::Success) throw std::domain_error("metric is not positive-definite");
  return llt.solve(Eigen::MatrixXd::Identity(g.dim(), g.dim()));
}

}  // namespace

AltForm hodge_star(const AltForm& a, const MetricTensor& g, int orientation) {
  check_metric(a, g);
  const int n = a.dim();
  const int k = a.degree();
  const Eigen::MatrixXd ginv = inverse_checked(g);
  const double sqrt_det = std::sqrt(g.matrix().determinant());
  const Eigen::VectorXd raised = compound_matrix(ginv, k) * a.as_eigen();
  AltForm out(n, n - k);
  const auto& masks = MultiIndex::subsets(n, k);
  const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1);
  for (std::size_t r = 0; r < masks.size(); ++r) {
    const std::uint32_t comp = full & ~masks[r];
    const int s = MultiIndex::concat_sign(masks[r], comp);
    out[MultiIndex::rank(n, comp)] += orientation * s * sqrt_det * raised(static_cast<Eigen::Index>(r));
  }
  return out;
}

AltForm hodge_star(const AltForm& a) { return hodge_star(a, MetricTensor::identity(a.dim())); }

double inner(const AltForm& a, const AltForm& b, const MetricTensor& g) {
  check_metric(a, g);
  if (a.dim() != b.dim() || a.degree() != b.degree()) throw DimensionMismatch("inner product of different shapes");
  const Eigen::MatrixXd ginv = inverse_checked(g);
  return a.as_eigen().dot(compound_matrix(ginv, a.degree()) * b.as_eigen());
}

double norm(const AltForm& a, const MetricTensor& g) { return std::sqrt(std::max(0.0, inner(a, a, g))); }

double norm(const AltForm& a) { return a.coeff_norm(); }

AltForm pullback(const AltForm& a, const Eigen::MatrixXd& A) {
  if (A.rows() != a.dim() || A.cols() != a.dim()) throw DimensionMismatch("pullback map has wrong shape");
  const Eigen::VectorXd c = compound_matrix(A, a.degree()).transpose() * a.as_eigen();
  return AltForm(a.dim(), a.degree(), std::vector<double>(c.data(), c.data() + c.size()));
}

double top_coefficient(const AltForm& a) {
  if (a.degree() != a.dim()) throw DimensionMismatch("not a top-degree form");
  return a[0];
}

Eigen::Matrix<double, 7, 7> g2_b_matrix(const AltForm& phi) {
  if (phi.dim() != 7 || phi.degree() != 3) throw DimensionMismatch("metric_from_3form expects a 3-form on R^7");
  std::array<AltForm, 7> contracted;
  for (int i = 0; i < 7; ++i) contracted[i] = interior_basis(i, phi);
  Eigen::Matrix<double, 7, 7> B;
  for (int i = 0; i < 7; ++i) {
    for (int j = i; j < 7; ++j) {
      const double top = wedge(wedge(contracted[i], contracted[j]), phi)[0];
      B(i, j) = B(j, i) = -top / 6.0;
    }
  }
  return B;
}

G2Metric metric_from_3form(const AltForm& phi) {
  const Eigen::Matrix<double, 7, 7> B = g2_b_matrix(phi);
  const double det_b = B.determinant();
  if (!(std::abs(det_b) > kDegenerateDetB)) throw DegenerateForm(det_b);
  const double root = real_root(det_b, 9.0);
  G2Metric out;
  out.metric = MetricTensor(B / root);
  out.volume_density = std::abs(root);
  out.orientation = det_b < 0 ? 1 : -1;
  return out;
}

const AltForm& phi0() {
  static const AltForm form = [] {
    AltForm f(7, 3);
    f += AltForm::basis(7, {0, 1, 2});
    f += AltForm::basis(7, {0, 3, 4});
    f += AltForm::basis(7, {0, 5, 6});
    f += AltForm::basis(7, {1, 3, 5});
    f -= AltForm::basis(7, {1, 4, 6});
    f -= AltForm::basis(7, {2, 3, 6});
    f -= AltForm::basis(7, {2, 4, 5});
    return f;
  }();
  return form;
}

const AltForm& psi0() {
  static const AltForm form = [] {
    AltForm f(7, 4);
    f += AltForm::basis(7, {3, 4, 5, 6});
    f += AltForm::basis(7, {1, 2, 5, 6});
    f += AltForm::basis(7, {1, 2, 3, 4});
    f += AltForm::basis(7, {0, 2, 4, 6});
    f -= AltForm::basis(7, {0, 2, 3, 5});
    f -= AltForm::basis(7, {0, 1, 4, 5});
    f -= AltForm::basis(7, {0, 1, 3, 6});
    return f;
  }();
  return form;
}

AltForm volume_form(const MetricTensor& g, int orientation) {
  AltForm v(g.dim(), g.dim());
  v[0] = orientation * std::sqrt(g.matrix().determinant());
  return v;
}

}  // namespace g2link
