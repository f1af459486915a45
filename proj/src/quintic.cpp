#include "g2link/quintic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "g2link/random.hpp"

namespace g2link {

namespace {

constexpr double kMinEliminatedDerivative = 1e-8;

cd pow4(cd x) {
  const cd x2 = x * x;
  return x2 * x2;
}

cd pow5(cd x) { return pow4(x) * x; }

// Sum over the retained coordinates of w_j^5, plus the chart's 1 = Z_a^5.
cd chart_constant(const CVec3& w) { return 1.0 + pow5(w(0)) + pow5(w(1)) + pow5(w(2)); }

}  // namespace

cd eval_f(const CVec5& z) {
  cd s = 0.0;
  for (int i = 0; i < 5; ++i) s += pow5(z(i));
  return s;
}

CVec5 grad_f(const CVec5& z) {
  CVec5 g;
  for (int i = 0; i < 5; ++i) g(i) = 5.0 * pow4(z(i));
  return g;
}

Patch select_patch(const CVec5& z) {
  Patch p;
  double best = -1.0;
  for (int i = 0; i < 5; ++i) {
    if (std::abs(z(i)) > best) { best = std::abs(z(i)); p.a = i; }
  }
  const CVec5 g = grad_f(z);
  best = -1.0;
  for (int i = 0; i < 5; ++i) {
    if (i == p.a) continue;
    if (std::abs(g(i)) > best) { best = std::abs(g(i)); p.e = i; }
  }
  if (best < 1e-12 * std::pow(z.norm(), 4)) throw ChartError("no admissible eliminated coordinate", best);
  return p;
}

std::array<int, 3> retained_indices(Patch p) {
  std::array<int, 3> out{};
  int k = 0;
  for (int i = 0; i < 5; ++i)
    if (i != p.a && i != p.e) out[k++] = i;
  return out;
}

CVec5 affine_representative(const CVec5& z, Patch p) { return z / z(p.a); }

CVec3 local_coordinates(const CVec5& Z, Patch p) {
  const auto r = retained_indices(p);
  return CVec3(Z(r[0]), Z(r[1]), Z(r[2]));
}

std::array<double, 6> real_coordinates(const CVec3& w) {
  return {w(0).real(), w(0).imag(), w(1).real(), w(1).imag(), w(2).real(), w(2).imag()};
}

CVec3 complex_coordinates(const std::array<double, 6>& u) {
  return CVec3(cd(u[0], u[1]), cd(u[2], u[3]), cd(u[4], u[5]));
}

CVec5 affine_point(const CVec3& w, Patch p, cd eliminated_guess) {
  // Z_e^5 = -(1 + sum w_j^5): take the fifth root nearest the guess, then polish.
  const cd rhs = -chart_constant(w);
  const cd principal = std::pow(rhs, 0.2);
  cd s = principal;
  double best = std::abs(principal - eliminated_guess);
  for (int k = 1; k < 5; ++k) {
    const cd cand = principal * std::polar(1.0, 2.0 * std::numbers::pi * k / 5.0);
    if (std::abs(cand - eliminated_guess) < best) { best = std::abs(cand - eliminated_guess); s = cand; }
  }
  for (int it = 0; it < 3; ++it) {
    const cd deriv = 5.0 * pow4(s);
    if (std::abs(deriv) < kMinEliminatedDerivative)
      throw ChartError("eliminated coordinate derivative vanishes", std::abs(deriv));
    s -= (pow5(s) - rhs) / deriv;
  }
  if (std::abs(5.0 * pow4(s)) < kMinEliminatedDerivative)
    throw ChartError("eliminated coordinate derivative vanishes", std::abs(5.0 * pow4(s)));
  CVec5 Z;
  Z(p.a) = 1.0;
  Z(p.e) = s;
  const auto r = retained_indices(p);
  for (int j = 0; j < 3; ++j) Z(r[j]) = w(j);
  return Z;
}

Eigen::Matrix<cd, 5, 3> embedding_jacobian(const CVec5& Z, Patch p) {
  Eigen::Matrix<cd, 5, 3> P = Eigen::Matrix<cd, 5, 3>::Zero();
  const auto r = retained_indices(p);
  const cd de = pow4(Z(p.e));
  if (std::abs(5.0 * de) < kMinEliminatedDerivative) throw ChartError("ill-conditioned implicit solve", std::abs(5.0 * de));
  for (int j = 0; j < 3; ++j) {
    P(r[j], j) = 1.0;
    P(p.e, j) = -pow4(Z(r[j])) / de;
  }
  return P;
}

HermitianMetric3 fs_metric_affine(const CVec5& Z, Patch p) {
  const auto P = embedding_jacobian(Z, p);
  const double n2 = Z.squaredNorm();
  Eigen::Matrix<cd, 5, 5> G = Eigen::Matrix<cd, 5, 5>::Identity() / n2;
  G -= Z.conjugate() * Z.transpose() / (n2 * n2);
  HermitianMetric3 g = P.transpose() * G * P.conjugate();
  return 0.5 * (g + g.adjoint());
}

cd holo_coefficient_affine(const CVec5& Z, Patch p) {
  const cd deriv = 5.0 * pow4(Z(p.e));
  if (std::abs(deriv) < kMinEliminatedDerivative) throw ChartError("residue denominator vanishes", std::abs(deriv));
  // Position of e among the four affine indices {0..4} \ {a}.
  const int pos_e = p.e - (p.e > p.a ? 1 : 0);
  const double sign = ((p.a + pos_e) % 2 == 0) ? 1.0 : -1.0;
  return sign / deriv;
}

HermitianMetric3 fs_metric(const QuinticPoint& p) { return fs_metric_affine(affine_representative(p.z, p.patch), p.patch); }

HoloVolSample holo_volume_form(const QuinticPoint& p) {
  return {holo_coefficient_affine(affine_representative(p.z, p.patch), p.patch)};
}

double sample_weight(const QuinticPoint& p) {
  const CVec5 Z = affine_representative(p.z, p.patch);
  const double det = fs_metric_affine(Z, p.patch).determinant().real();
  return std::norm(holo_coefficient_affine(Z, p.patch)) / det;
}

QuinticPoint make_point(const CVec5& z_in) {
  QuinticPoint out;
  CVec5 z = z_in / z_in.norm();
  out.patch = select_patch(z);
  const cd za = z(out.patch.a);
  z *= std::conj(za) / std::abs(za);
  z(out.patch.a) = std::abs(z(out.patch.a));
  out.z = z;
  out.weight = sample_weight(out);
  return out;
}

namespace {

// Roots of sum_i (p_i + t q_i)^5 via companion-matrix eigenvalues and Newton polish.
bool line_roots(const CVec5& p, const CVec5& q, std::array<cd, 5>& roots) {
  std::array<cd, 6> a{};
  static constexpr std::array<double, 6> binom{1, 5, 10, 10, 5, 1};
  for (int k = 0; k <= 5; ++k) {
    cd s = 0.0;
    for (int i = 0; i < 5; ++i) s += std::pow(p(i), 5 - k) * std::pow(q(i), k);
    a[k] = binom[k] * s;
  }
  if (std::abs(a[5]) < 1e-14) return false;
  Eigen::Matrix<cd, 5, 5> C = Eigen::Matrix<cd, 5, 5>::Zero();
  for (int i = 1; i < 5; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < 5; ++i) C(i, 4) = -a[i] / a[5];
  Eigen::ComplexEigenSolver<Eigen::Matrix<cd, 5, 5>> solver(C, false);
  if (solver.info() != Eigen::Success) return false;
  for (int r = 0; r < 5; ++r) {
    cd t = solver.eigenvalues()(r);
    for (int it = 0; it < 50; ++it) {
      cd val = a[5], der = 0.0;
      for (int k = 4; k >= 0; --k) {
        der = der * t + val;
        val = val * t + a[k];
      }
      if (der == 0.0) return false;
      const cd step = val / der;
      t -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(t))) break;
    }
    roots[r] = t;
  }
  return true;
}

CVec5 uniform_on_sphere(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CVec5 v;
  for (int i = 0; i < 5; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = cd(re, im);
  }
  return v / v.norm();
}

}  // namespace

std::vector<QuinticPoint> sample_points(std::size_t count, std::uint64_t seed, SampleStats* stats) {
  if (count == 0) throw std::invalid_argument("sample_points: count must be >= 1");
  std::vector<QuinticPoint> out;
  out.reserve(count);
  SampleStats local;
  for (std::uint64_t line = 0; out.size() < count; ++line) {
    ++local.lines;
    auto rng = derived_rng(seed, line);
    const CVec5 p = uniform_on_sphere(rng);
    const CVec5 q = uniform_on_sphere(rng);
    std::array<cd, 5> roots{};
    bool ok = line_roots(p, q, roots);
    std::array<QuinticPoint, 5> pts;
    for (int r = 0; ok && r < 5; ++r) {
      try {
        pts[r] = make_point(p + roots[r] * q);
      } catch (const ChartError&) {
        ok = false;
        break;
      }
      if (std::abs(eval_f(pts[r].z)) >= 1e-10 || !(pts[r].weight > 0.0) || !std::isfinite(pts[r].weight)) ok = false;
    }
    if (!ok) {
      ++local.redrawn_lines;
      continue;
    }
    for (int r = 0; r < 5 && out.size() < count; ++r) out.push_back(pts[r]);
  }
  if (stats) *stats = local;
  return out;
}

Eigen::Matrix<double, 6, 6> real_metric(const HermitianMetric3& g) {
  Eigen::Matrix<double, 6, 6> G;
  for (int a = 0; a < 6; ++a) {
    const cd xa = (a % 2 == 0) ? cd(1.0, 0.0) : cd(0.0, 1.0);
    for (int b = 0; b < 6; ++b) {
      const cd xb = (b % 2 == 0) ? cd(1.0, 0.0) : cd(0.0, 1.0);
      G(a, b) = (xa * g(a / 2, b / 2) * std::conj(xb)).real();
    }
  }
  return G;
}

Eigen::Matrix<double, 6, 6> kahler_matrix(const HermitianMetric3& g) {
  Eigen::Matrix<double, 6, 6> W;
  for (int a = 0; a < 6; ++a) {
    const cd xa = (a % 2 == 0) ? cd(1.0, 0.0) : cd(0.0, 1.0);
    for (int b = 0; b < 6; ++b) {
      const cd xb = (b % 2 == 0) ? cd(1.0, 0.0) : cd(0.0, 1.0);
      W(a, b) = -(xa * g(a / 2, b / 2) * std::conj(xb)).imag();
    }
  }
  return W;
}

bool is_hermitian(const CMat3& g, double tol) {
  return (g - g.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, g.cwiseAbs().maxCoeff());
}

bool is_positive_definite(const CMat3& g) {
  Eigen::LLT<CMat3> llt(g);
  if (llt.info() != Eigen::Success) return false;
  return llt.matrixL().toDenseMatrix().diagonal().real().minCoeff() > 0.0;
}

}  // namespace g2link
