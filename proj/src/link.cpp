#include "g2link/link.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace g2link {

namespace {

constexpr std::uint32_t kBaseMask = 0x3f;  // u1..u6

cd base_component(int a) { return (a % 2 == 0) ? cd(1.0, 0.0) : cd(0.0, 1.0); }

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LinkChart LinkChart::through(const QuinticPoint& p) {
  const CVec5 Z = affine_representative(p.z, p.patch);
  return LinkChart(p.patch, Z(p.patch.e));
}

ChartPoint LinkChart::evaluate(const Vec7& coords) const {
  ChartPoint out;
  const CVec3 w = complex_coordinates({coords[0], coords[1], coords[2], coords[3], coords[4], coords[5]});
  out.Z = affine_point(w, patch_, ref_);
  const auto P = embedding_jacobian(out.Z, patch_);
  const double nZ = out.Z.norm();
  const cd phase = std::polar(1.0, coords[6]);
  out.z = phase * out.Z / nZ;
  for (int m = 0; m < 5; ++m) {
    out.x[m] = out.z(m).real();
    out.x[5 + m] = out.z(m).imag();
  }
  for (int k = 0; k < 6; ++k) {
    const CVec5 dZ = base_component(k) * P.col(k / 2);
    const double radial = (out.Z.adjoint() * dZ)(0).real();
    const CVec5 dz = phase * (dZ / nZ - out.Z * (radial / (nZ * nZ * nZ)));
    for (int m = 0; m < 5; ++m) {
      out.J(k, m) = dz(m).real();
      out.J(k, 5 + m) = dz(m).imag();
    }
  }
  const CVec5 fibre = cd(0.0, 1.0) * out.z;
  for (int m = 0; m < 5; ++m) {
    out.J(6, m) = fibre(m).real();
    out.J(6, 5 + m) = fibre(m).imag();
  }
  return out;
}

Vec7 LinkChart::coordinates_of(const CVec5& z) const {
  const CVec5 Z = affine_representative(z, patch_);
  const auto u = real_coordinates(local_coordinates(Z, patch_));
  double theta = std::arg(z(patch_.a));
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  return {u[0], u[1], u[2], u[3], u[4], u[5], theta};
}

LinkPoint lift_to_link(const QuinticPoint& p, double theta) {
  LinkPoint lp;
  lp.base = p;
  const LinkChart chart = LinkChart::through(p);
  lp.eliminated_ref = chart.eliminated_ref();
  const CVec5 z = std::polar(1.0, theta) * p.z / p.z.norm();
  lp.coords = chart.coordinates_of(z);
  const ChartPoint cp = chart.evaluate(lp.coords);
  lp.x = cp.x;
  lp.J = cp.J;
  lp.theta = lp.coords[6];
  return lp;
}

AltForm round_contact_pullback(const Ambient10& x, const LinkJacobian& J) {
  AltForm eta(7, 1);
  for (int k = 0; k < 7; ++k) {
    double s = 0.0;
    for (int m = 0; m < 5; ++m) s += x[m] * J(k, 5 + m) - x[5 + m] * J(k, m);
    eta[k] = s;
  }
  return eta;
}

AltForm contact_form(const LinkPoint& lp, double c_eta) { return c_eta * round_contact_pullback(lp.x, lp.J); }

AltForm pullback_base_2form(const HermitianMetric3& g_herm) {
  const auto W = kahler_matrix(g_herm);
  AltForm omega(7, 2);
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) omega[MultiIndex::rank(7, (1u << a) | (1u << b))] = W(a, b);
  return omega;
}

AltForm pullback_base_2form(const HermitianMetric3& g_herm, const LinkPoint&) { return pullback_base_2form(g_herm); }

std::pair<AltForm, AltForm> pullback_upsilon(HoloVolSample c, cd lambda) {
  const cd scale = lambda * c.c;
  AltForm re(7, 3), im(7, 3);
  for (int a = 0; a < 6; ++a) {
    for (int b = a + 1; b < 6; ++b) {
      for (int d = b + 1; d < 6; ++d) {
        CMat3 M = CMat3::Zero();
        M(a / 2, 0) = base_component(a);
        M(b / 2, 1) = base_component(b);
        M(d / 2, 2) = base_component(d);
        const cd v = scale * M.determinant();
        const int r = MultiIndex::rank(7, (1u << a) | (1u << b) | (1u << d));
        re[r] = v.real();
        im[r] = v.imag();
      }
    }
  }
  return {re, im};
}

std::pair<AltForm, AltForm> pullback_upsilon(HoloVolSample c, const LinkPoint&, cd lambda) {
  return pullback_upsilon(c, lambda);
}

AltForm assemble_phi(const AltForm& eta, const AltForm& omega, const AltForm& re_u) {
  return wedge(eta, omega) + re_u;
}

AltForm assemble_psi(const AltForm& eta, const AltForm& omega, const AltForm& im_u) {
  return 0.5 * wedge(omega, omega) - wedge(eta, im_u);
}

UpsilonNormalization normalize_upsilon(std::span<const HermitianMetric3> metrics,
                                       std::span<const HoloVolSample> coeffs) {
  if (metrics.size() != coeffs.size() || metrics.empty())
    throw std::invalid_argument("normalize_upsilon: need matching, nonempty metric and coefficient lists");
  std::vector<double> ratios;
  ratios.reserve(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const double c2 = std::norm(coeffs[i].c);
    if (!(c2 > 0.0)) throw std::invalid_argument("normalize_upsilon: vanishing volume-form coefficient");
    ratios.push_back(metrics[i].determinant().real() / c2);
  }
  UpsilonNormalization out;
  out.median_ratio = quantile(ratios, 0.5);
  out.q10 = quantile(ratios, 0.1);
  out.q90 = quantile(ratios, 0.9);
  if (!(out.median_ratio > 0.0)) throw std::domain_error("normalize_upsilon: non-positive volume ratio");
  out.relative_spread = (out.q90 - out.q10) / out.median_ratio;
  out.consistent = out.relative_spread <= kUpsilonSpreadWarning;
  out.lambda = cd(std::sqrt(out.median_ratio), 0.0);
  return out;
}

std::array<double, 19> make_input19(const Ambient10& x, const AltForm& eta, Patch patch) {
  std::array<double, 19> in{};
  std::copy(x.begin(), x.end(), in.begin());
  for (int k = 0; k < 7; ++k) in[10 + k] = eta[k];
  in[17] = patch.a;
  in[18] = patch.e;
  return in;
}

G2Sample build_g2_sample(const LinkPoint& lp, const AltForm& omega, const AltForm& re_u, const AltForm& im_u,
                         const AltForm& eta) {
  G2Sample s;
  const AltForm phi = assemble_phi(eta, omega, re_u);
  const AltForm psi = assemble_psi(eta, omega, im_u);
  const G2Metric gm = metric_from_3form(phi);
  std::copy(phi.coeffs().begin(), phi.coeffs().end(), s.phi.begin());
  std::copy(psi.coeffs().begin(), psi.coeffs().end(), s.psi.begin());
  const auto lower = gm.metric.lower_triangle();
  std::copy(lower.begin(), lower.end(), s.g.begin());
  std::copy(omega.coeffs().begin(), omega.coeffs().end(), s.omega.begin());
  for (int k = 0; k < 7; ++k) s.eta[k] = eta[k];
  s.input19 = make_input19(lp.x, eta, lp.patch());
  s.vol_g2 = gm.volume_density;
  const AltForm w3 = wedge(wedge(omega, omega), omega);
  s.vol_cy = w3[MultiIndex::rank(7, kBaseMask)] / 6.0;
  s.theta = lp.theta;
  s.patch = lp.patch();
  return s;
}

BaseMetricFn fubini_study_source() {
  return [](const CVec5& Z, Patch p) { return fs_metric_affine(Z, p); };
}

LocalG2 local_g2(const LinkChart& chart, const Vec7& coords, const G2Construction& cons) {
  LocalG2 out;
  out.cp = chart.evaluate(coords);
  out.g_herm = cons.base_metric(out.cp.Z, chart.patch());
  out.c = holo_coefficient_affine(out.cp.Z, chart.patch());
  out.eta = cons.c_eta * round_contact_pullback(out.cp.x, out.cp.J);
  out.omega = pullback_base_2form(out.g_herm);
  std::tie(out.re_u, out.im_u) = pullback_upsilon({out.c}, cons.lambda);
  out.phi = assemble_phi(out.eta, out.omega, out.re_u);
  out.psi = assemble_psi(out.eta, out.omega, out.im_u);
  return out;
}

FormEvaluator local_form_evaluator(const LinkChart& chart, const G2Construction& cons, LocalForm which) {
  static constexpr int degrees[] = {1, 2, 3, 4, 4, 3, 3};
  FormEvaluator f;
  f.degree = degrees[static_cast<int>(which)];
  f.chart = 5 * chart.patch().a + chart.patch().e;
  f.eval = [chart, cons, which](const Vec7& u) -> AltForm {
    if (which == LocalForm::Eta) {
      const ChartPoint cp = chart.evaluate(u);
      return cons.c_eta * round_contact_pullback(cp.x, cp.J);
    }
    LocalG2 l = local_g2(chart, u, cons);
    switch (which) {
      case LocalForm::Omega: return l.omega;
      case LocalForm::Phi: return l.phi;
      case LocalForm::Psi: return l.psi;
      case LocalForm::OmegaWedgeOmega: return wedge(l.omega, l.omega);
      case LocalForm::ReUpsilon: return l.re_u;
      case LocalForm::ImUpsilon: return l.im_u;
      default: return l.eta;
    }
  };
  return f;
}

double calibrate_contact_scale(std::span<const QuinticPoint> points, double eps) {
  if (points.empty()) throw std::invalid_argument("calibrate_contact_scale: no points");
  G2Construction unit;
  unit.c_eta = 1.0;
  double num = 0.0, den = 0.0;
  for (const auto& p : points) {
    const LinkPoint lp = lift_to_link(p, 0.0);
    const AltForm d = ned(local_form_evaluator(lp.chart(), unit, LocalForm::Eta), lp.coords, eps);
    const AltForm omega = pullback_base_2form(fs_metric(p));
    num += d.as_eigen().dot(omega.as_eigen());
    den += d.as_eigen().squaredNorm();
  }
  if (!(den > 0.0)) throw std::domain_error("calibrate_contact_scale: vanishing contact derivative");
  return num / den;
}

}  // namespace g2link
