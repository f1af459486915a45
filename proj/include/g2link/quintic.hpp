// Fermat quintic z0^5 + ... + z4^5 = 0 in CP^4: sampling, affine charts,
// Fubini-Study data and the residue holomorphic volume form.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace g2link {

using cd = std::complex<double>;
using CVec5 = Eigen::Matrix<cd, 5, 1>;
using CVec3 = Eigen::Matrix<cd, 3, 1>;
using CMat3 = Eigen::Matrix<cd, 3, 3>;

/// Chart selection: z_a is set to 1, z_e is solved for implicitly.
struct Patch {
  int a = 0;
  int e = 1;
  friend bool operator==(const Patch&, const Patch&) = default;
};

/// Raised when an affine chart is ill-conditioned at a point.
class ChartError : public std::runtime_error {
 public:
  ChartError(const std::string& what, double condition) : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

struct QuinticPoint {
  /// Unit-norm representative with z[patch.a] real and positive.
  CVec5 z = CVec5::Zero();
  Patch patch;
  double weight = 0.0;
};

/// Hermitian 3x3 metric g_{j kbar} in the chart coordinates w.
using HermitianMetric3 = CMat3;

/// Coefficient of the holomorphic volume form on dw1 ^ dw2 ^ dw3.
struct HoloVolSample {
  cd c;
};

cd eval_f(const CVec5& z);
CVec5 grad_f(const CVec5& z);

/// a = argmax |z_i|, e = argmax_{i != a} |df/dz_i|.
Patch select_patch(const CVec5& z);

/// The three retained indices of a patch, ascending.
std::array<int, 3> retained_indices(Patch p);

/// Affine representative Z = z / z_a.
CVec5 affine_representative(const CVec5& z, Patch p);
/// Local coordinates w_j = Z_j for the retained indices.
CVec3 local_coordinates(const CVec5& Z, Patch p);
/// Real chart coordinates (Re w1, Im w1, Re w2, Im w2, Re w3, Im w3).
std::array<double, 6> real_coordinates(const CVec3& w);
CVec3 complex_coordinates(const std::array<double, 6>& u);

/// Affine point on the quintic over the chart coordinates w, continuing the
/// eliminated coordinate from `eliminated_guess` by Newton iteration.
/// Throws ChartError when |df/dZ_e| is too small or Newton fails.
CVec5 affine_point(const CVec3& w, Patch p, cd eliminated_guess);

/// dZ/dw (5 x 3): identity on retained rows, implicit derivative on row e.
Eigen::Matrix<cd, 5, 3> embedding_jacobian(const CVec5& Z, Patch p);

/// Fubini-Study metric pulled back to the chart, K = log sum |Z_i|^2.
HermitianMetric3 fs_metric_affine(const CVec5& Z, Patch p);
/// Residue coefficient (-1)^{a + pos(e)} / (df/dZ_e) evaluated on Z.
cd holo_coefficient_affine(const CVec5& Z, Patch p);

HermitianMetric3 fs_metric(const QuinticPoint& p);
HoloVolSample holo_volume_form(const QuinticPoint& p);

/// dVol_Upsilon / dA for the line-intersection measure: |c|^2 / det g_FS.
double sample_weight(const QuinticPoint& p);

/// Canonical point: unit norm, chosen patch, z_a real positive, weight set.
QuinticPoint make_point(const CVec5& z);

struct SampleStats {
  std::size_t lines = 0;
  std::size_t redrawn_lines = 0;
};

/// Intersections of random lines {p + t q}, p, q uniform on S^9, with the
/// quintic.  Each line contributes its five roots; deterministic in `seed`.
std::vector<QuinticPoint> sample_points(std::size_t count, std::uint64_t seed, SampleStats* stats = nullptr);

/// Real 6x6 metric and Kaehler form of a Hermitian metric in the
/// interleaved real coordinates (g = I maps to the Euclidean metric and
/// du1^du2 + du3^du4 + du5^du6).
Eigen::Matrix<double, 6, 6> real_metric(const HermitianMetric3& g);
Eigen::Matrix<double, 6, 6> kahler_matrix(const HermitianMetric3& g);

bool is_hermitian(const CMat3& g, double tol = 1e-12);
bool is_positive_definite(const CMat3& g);

}  // namespace g2link
