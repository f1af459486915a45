#include "doctest.h"

#include <random>

#include "g2link/exterior.hpp"

using namespace g2link;

namespace {

AltForm random_form(int n, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  AltForm f(n, k);
  for (auto& c : f.coeffs()) c = d(rng);
  return f;
}

Eigen::MatrixXd random_matrix(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = scale * d(rng);
  return A;
}

double max_diff(const AltForm& a, const AltForm& b) { return (a.as_eigen() - b.as_eigen()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("multi-index enumeration is lexicographic and bijective") {
  for (int n = 0; n <= 7; ++n)
    for (int k = 0; k <= n; ++k) {
      const auto& subs = MultiIndex::subsets(n, k);
      CHECK(static_cast<int>(subs.size()) == binomial(n, k));
      for (std::size_t r = 0; r < subs.size(); ++r) {
        CHECK(MultiIndex::rank(n, subs[r]) == static_cast<int>(r));
        if (r > 0) CHECK(MultiIndex::indices(subs[r - 1]) < MultiIndex::indices(subs[r]));
      }
    }
  const std::vector<int> bad{2, 1};
  CHECK_THROWS(MultiIndex::mask(7, bad));
}

TEST_CASE("wedge of basis forms") {
  const AltForm e1 = AltForm::basis(7, {0}), e2 = AltForm::basis(7, {1});
  const AltForm e12 = wedge(e1, e2);
  CHECK(e12.at({0, 1}) == 1.0);
  CHECK(e12.coeff_norm() == 1.0);
  CHECK(wedge(e1, e1).coeff_norm() == 0.0);
  CHECK(wedge(e2, e1).at({0, 1}) == -1.0);
  CHECK_THROWS_AS(wedge(AltForm(7, 1), AltForm(6, 1)), DimensionMismatch);
  const AltForm big = wedge(AltForm::basis(7, {0, 1, 2, 3}), AltForm::basis(7, {4, 5, 6, 0}));
  CHECK(big.degree() == 7);
  CHECK(big[0] == 0.0);
}

TEST_CASE("wedge is bilinear, associative and graded-commutative") {
  std::mt19937_64 rng(11);
  for (int n = 2; n <= 7; ++n)
    for (int p = 0; p <= n; ++p)
      for (int q = 0; p + q <= n; ++q) {
        const AltForm a = random_form(n, p, rng), b = random_form(n, q, rng), b2 = random_form(n, q, rng);
        const double sign = ((p * q) % 2 == 0) ? 1.0 : -1.0;
        CHECK(max_diff(wedge(a, b), sign * wedge(b, a)) < 1e-12);
        CHECK(max_diff(wedge(a, 2.0 * b + b2), 2.0 * wedge(a, b) + wedge(a, b2)) < 1e-12);
        for (int r = 0; p + q + r <= n; ++r) {
          const AltForm c = random_form(n, r, rng);
          CHECK(max_diff(wedge(wedge(a, b), c), wedge(a, wedge(b, c))) < 1e-11);
        }
      }
}

TEST_CASE("interior product") {
  const AltForm e12 = AltForm::basis(7, {0, 1});
  CHECK(max_diff(interior_basis(0, e12), AltForm::basis(7, {1})) == 0.0);
  CHECK(interior_basis(2, e12).coeff_norm() == 0.0);
  const AltForm expected = AltForm::basis(7, {1, 2}) + AltForm::basis(7, {3, 4}) + AltForm::basis(7, {5, 6});
  CHECK(max_diff(interior_basis(0, phi0()), expected) == 0.0);
  CHECK_THROWS(interior_basis(0, AltForm(7, 0)));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  for (int k = 2; k <= 5; ++k) {
    std::vector<double> v(7);
    for (double& x : v) x = d(rng);
    const AltForm a = random_form(7, k, rng);
    CHECK(interior_product(v, interior_product(v, a)).coeff_norm() < 1e-12);
  }
}

TEST_CASE("Hodge star of the standard forms") {
  CHECK(max_diff(hodge_star(phi0()), psi0()) < 1e-12);
  AltForm one(7, 0);
  one[0] = 1.0;
  CHECK(hodge_star(one)[0] == doctest::Approx(1.0));
  // *(c e^1) under diag(4,1,...,1) is (c/2) e^{2..7}.
  const double c = 3.0;
  const AltForm s = hodge_star(AltForm::basis(7, {0}, c), MetricTensor::diagonal({4, 1, 1, 1, 1, 1, 1}));
  CHECK(s.at({1, 2, 3, 4, 5, 6}) == doctest::Approx(c / 2).epsilon(1e-14));
  CHECK(s.coeff_norm() == doctest::Approx(c / 2).epsilon(1e-14));
  CHECK_THROWS(hodge_star(phi0(), MetricTensor::diagonal({1, 1, 1, 1, 1, 1, -1})));
}

TEST_CASE("Hodge star involution and norm identity") {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd A = random_matrix(7, rng, 0.3) + Eigen::MatrixXd::Identity(7, 7);
  const MetricTensor g(A.transpose() * A);
  const AltForm vol = volume_form(g);
  for (int k = 0; k <= 7; ++k) {
    const AltForm a = random_form(7, k, rng);
    const double sign = ((k * (7 - k)) % 2 == 0) ? 1.0 : -1.0;
    CHECK(max_diff(hodge_star(hodge_star(a)), sign * a) < 1e-12);
    CHECK(max_diff(hodge_star(hodge_star(a, g), g), sign * a) < 1e-9);
    const double lhs = wedge(a, hodge_star(a, g))[0];
    CHECK(lhs == doctest::Approx(inner(a, a, g) * vol[0]).epsilon(1e-10));
  }
}

TEST_CASE("norms") {
  CHECK(norm(phi0()) == doctest::Approx(std::sqrt(7.0)));
  CHECK(norm(AltForm(7, 3)) == 0.0);
  CHECK(norm(AltForm::basis(7, {0}), MetricTensor::diagonal({4, 1, 1, 1, 1, 1, 1})) == doctest::Approx(0.5));
  std::mt19937_64 rng(3);
  const AltForm a = random_form(7, 3, rng);
  CHECK(norm(a, MetricTensor::identity(7)) == doctest::Approx(a.coeff_norm()).epsilon(1e-14));
}

TEST_CASE("metric from the standard 3-form") {
  const G2Metric gm = metric_from_3form(phi0());
  CHECK((gm.metric.matrix() - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(gm.volume_density == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gm.orientation == 1);
  CHECK(wedge(phi0(), psi0())[0] == doctest::Approx(7.0));
  CHECK_THROWS_AS(metric_from_3form(AltForm(7, 3)), DegenerateForm);
  CHECK_THROWS_AS(metric_from_3form(AltForm::basis(7, {0, 1, 2})), DegenerateForm);
}

TEST_CASE("conformal scaling of the 3-form") {
  for (double lam : {0.5, 1.7, 3.0}) {
    const G2Metric gm = metric_from_3form(std::pow(lam, 3) * phi0());
    CHECK((gm.metric.matrix() - lam * lam * Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(gm.volume_density == doctest::Approx(std::pow(lam, 7)).epsilon(1e-12));
  }
}

TEST_CASE("pullback of phi0 induces A^T A") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd A = random_matrix(7, rng, 0.4) + Eigen::MatrixXd::Identity(7, 7);
    if (A.determinant() < 0) A.col(0) *= -1.0;
    const G2Metric gm = metric_from_3form(pullback(phi0(), A));
    const Eigen::MatrixXd expected = A.transpose() * A;
    CHECK((gm.metric.matrix() - expected).cwiseAbs().maxCoeff() < 1e-9 * expected.cwiseAbs().maxCoeff());
    CHECK(gm.volume_density == doctest::Approx(A.determinant()).epsilon(1e-10));
    CHECK(gm.metric.is_positive_definite());
  }
}

TEST_CASE("metric reconstruction is frame-equivariant near phi0") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 20; ++trial) {
    AltForm phi = phi0();
    for (auto& c : phi.coeffs()) c += 0.05 * d(rng);
    Eigen::MatrixXd A = random_matrix(7, rng, 0.3) + Eigen::MatrixXd::Identity(7, 7);
    if (A.determinant() < 0) A.col(0) *= -1.0;
    const G2Metric g1 = metric_from_3form(phi);
    const G2Metric g2 = metric_from_3form(pullback(phi, A));
    const Eigen::MatrixXd conj = A.transpose() * g1.metric.matrix() * A;
    CHECK((g2.metric.matrix() - conj).cwiseAbs().maxCoeff() < 1e-9 * conj.cwiseAbs().maxCoeff());
    CHECK(g1.orientation == g2.orientation);
  }
}

TEST_CASE("wedge identity holds on GL(7) orbits of phi0") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd A = random_matrix(7, rng, 0.5) + Eigen::MatrixXd::Identity(7, 7);
    const AltForm phi = pullback(phi0(), A);
    const G2Metric gm = metric_from_3form(phi);
    const AltForm psi = hodge_star(phi, gm.metric, gm.orientation);
    const double ratio = wedge(phi, psi)[0] / (gm.orientation * gm.volume_density);
    CHECK(ratio == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(gm.orientation == (A.determinant() > 0 ? 1 : -1));
  }
}

TEST_CASE("metric tensor helpers") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  CHECK_THROWS(MetricTensor{m});
  const MetricTensor g = MetricTensor::diagonal({1, 2, 3});
  const auto lower = g.lower_triangle();
  CHECK(lower.size() == 6);
  const MetricTensor back = MetricTensor::from_lower_triangle(3, lower);
  CHECK(back.matrix() == g.matrix());
}
