// The circle bundle over the quintic cut out on S^9, its local charts, and
// the coclosed G2-structure assembled from contact, Kaehler and holomorphic
// volume data.
//
// Chart coordinates are (u1..u6, theta): u the interleaved real parts of the
// retained affine coordinates of the base chart and theta the phase of z_a.
// Ambient coordinates are ordered (x0..x4, y0..y4) with z = x + i y.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "g2link/exterior.hpp"
#include "g2link/ned.hpp"
#include "g2link/quintic.hpp"

namespace g2link {

inline constexpr std::string_view kChartOrder = "u1,u2,u3,u4,u5,u6,theta";

using Ambient10 = std::array<double, 10>;
using LinkJacobian = Eigen::Matrix<double, 7, 10>;

/// Everything the chart map produces at one set of chart coordinates.
struct ChartPoint {
  CVec5 Z;  // affine point, Z_a = 1
  CVec5 z;  // point on the link, e^{i theta} Z / |Z|
  Ambient10 x{};
  /// Row k is d x / d(coordinate k).
  LinkJacobian J;
};

class LinkChart {
 public:
  LinkChart(Patch patch, cd eliminated_ref) : patch_(patch), ref_(eliminated_ref) {}
  /// Chart centred on the base point of p, continuing its eliminated coordinate.
  static LinkChart through(const QuinticPoint& p);

  Patch patch() const { return patch_; }
  cd eliminated_ref() const { return ref_; }

  ChartPoint evaluate(const Vec7& coords) const;
  /// Chart coordinates of a point z on the link lying in this chart.
  Vec7 coordinates_of(const CVec5& z) const;

 private:
  Patch patch_;
  cd ref_;
};

struct LinkPoint {
  Ambient10 x{};
  double theta = 0.0;
  QuinticPoint base;
  LinkJacobian J;
  Vec7 coords{};
  cd eliminated_ref;

  Patch patch() const { return base.patch; }
  LinkChart chart() const { return LinkChart(base.patch, eliminated_ref); }
};

/// z = e^{i theta} p.z on S^9 together with the chart data.
LinkPoint lift_to_link(const QuinticPoint& p, double theta);

/// Pullback of sum_i (x_i dy_i - y_i dx_i) through a chart Jacobian.
AltForm round_contact_pullback(const Ambient10& x, const LinkJacobian& J);

/// c_eta times the round contact form, in chart coordinates.
AltForm contact_form(const LinkPoint& lp, double c_eta);

/// Kaehler form of g_herm on the six base coordinates, zero along theta.
AltForm pullback_base_2form(const HermitianMetric3& g_herm);
AltForm pullback_base_2form(const HermitianMetric3& g_herm, const LinkPoint& lp);

/// Real and imaginary parts of lambda c dw1 ^ dw2 ^ dw3, zero along theta.
std::pair<AltForm, AltForm> pullback_upsilon(HoloVolSample c, cd lambda);
std::pair<AltForm, AltForm> pullback_upsilon(HoloVolSample c, const LinkPoint& lp, cd lambda);

/// phi = eta ^ omega + Re Upsilon.
AltForm assemble_phi(const AltForm& eta, const AltForm& omega, const AltForm& re_u);
/// psi = (1/2) omega ^ omega - eta ^ Im Upsilon.  This is *phi when
/// |lambda c|^2 = det g_herm; the sign follows from the orientation induced
/// by phi in the (u, theta) chart order.
AltForm assemble_psi(const AltForm& eta, const AltForm& omega, const AltForm& im_u);

struct UpsilonNormalization {
  cd lambda;
  /// Median and quantiles of det g / |c|^2 over the samples.
  double median_ratio = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  /// (q90 - q10) / median.
  double relative_spread = 0.0;
  bool consistent = true;
};

inline constexpr double kUpsilonSpreadWarning = 0.5;

/// |lambda|^2 = median(det g_herm / |c|^2), lambda real positive; this makes
/// the flat model produce phi0 in an adapted frame.
UpsilonNormalization normalize_upsilon(std::span<const HermitianMetric3> metrics,
                                       std::span<const HoloVolSample> coeffs);

struct G2Sample {
  std::array<double, 35> phi{};
  std::array<double, 35> psi{};
  std::array<double, 28> g{};
  std::array<double, 21> omega{};
  std::array<double, 7> eta{};
  std::array<double, 19> input19{};
  double vol_g2 = 0.0;
  double vol_cy = 0.0;
  double theta = 0.0;
  Patch patch;
  std::uint64_t base_index = 0;
};

/// Assembles (phi, psi, g_phi) at a link point; vol_cy = omega^3 / 3! on the
/// base coordinates, which equals det g_herm.
G2Sample build_g2_sample(const LinkPoint& lp, const AltForm& omega, const AltForm& re_u, const AltForm& im_u,
                         const AltForm& eta);

/// [x (10), eta (7), a, e].
std::array<double, 19> make_input19(const Ambient10& x, const AltForm& eta, Patch patch);

/// Source of the Kaehler metric on the base, in affine chart coordinates.
using BaseMetricFn = std::function<HermitianMetric3(const CVec5& Z, Patch patch)>;
BaseMetricFn fubini_study_source();

struct G2Construction {
  BaseMetricFn base_metric = fubini_study_source();
  cd lambda = 1.0;
  double c_eta = 0.5;
};

/// All forms of the construction at chart coordinates of a fixed chart.
struct LocalG2 {
  ChartPoint cp;
  HermitianMetric3 g_herm;
  cd c;
  AltForm eta, omega, re_u, im_u, phi, psi;
};

LocalG2 local_g2(const LinkChart& chart, const Vec7& coords, const G2Construction& cons);

enum class LocalForm { Eta, Omega, Phi, Psi, OmegaWedgeOmega, ReUpsilon, ImUpsilon };
/// Evaluator of one of the forms above over a fixed chart, for use with ned().
FormEvaluator local_form_evaluator(const LinkChart& chart, const G2Construction& cons, LocalForm which);

/// Least-squares scale c with c * d(eta_round) ~ omega_FS, with d taken
/// numerically at step eps over the given points (theta = 0).
double calibrate_contact_scale(std::span<const QuinticPoint> points, double eps = 1e-4);

}  // namespace g2link
