// Numerical exterior derivative of forms given as black-box evaluators on
// a 7-dimensional chart, and the epsilon-sweep diagnostic built on it.
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "g2link/exterior.hpp"

namespace g2link {

using Vec7 = std::array<double, 7>;

struct FormEvaluator {
  std::function<AltForm(const Vec7&)> eval;
  int degree = 0;
  /// Chart the coordinates refer to, encoded as 5 * a + e; informational.
  int chart = -1;
};

class NedError : public std::runtime_error {
 public:
  NedError(int coordinate, int direction, const std::string& cause)
      : std::runtime_error("evaluator failed at stencil point " + std::string(direction > 0 ? "+" : "-") +
                           "eps e_" + std::to_string(coordinate) + ": " + cause),
        coordinate_(coordinate), direction_(direction) {}
  int coordinate() const { return coordinate_; }
  int direction() const { return direction_; }

 private:
  int coordinate_;
  int direction_;
};

/// Central-difference exterior derivative at p with step eps along the
/// chart axes:
///   (d alpha)_{i0..ik} = sum_j (-1)^j [alpha_{..^ij..}(p + eps e_ij) - alpha_{..^ij..}(p - eps e_ij)] / (2 eps).
/// Uses 14 evaluations.
AltForm ned(const FormEvaluator& f, const Vec7& p, double eps);

/// Exterior derivative from precomputed stencil values: plus[i] = alpha(p + eps e_i).
AltForm ned_from_stencil(std::span<const AltForm> plus, std::span<const AltForm> minus, double eps);

enum class Regime { Collapse, Spike, Plateau, Transition };
const char* regime_name(Regime r);

struct SweepEntry {
  double eps = 0.0;
  double median_norm = 0.0;
  std::size_t failures = 0;
  Regime regime = Regime::Transition;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  /// True if the ε values form a strictly increasing sequence.
  bool well_ordered() const;
  bool has(Regime r) const;
  /// Regime labels with consecutive duplicates and Transition removed.
  std::vector<Regime> regime_sequence() const;
  void write_csv(std::ostream& os) const;
};

/// A form evaluator anchored at the point where dα is wanted.
struct AnchoredEvaluator {
  FormEvaluator f;
  Vec7 p{};
};

/// Pointwise norm used for the sweep (Euclidean coefficient norm by default).
using FormNorm = std::function<double(const AltForm&, std::size_t point)>;

/// Median over points of ||NED(f, p, eps)|| for each eps.  Stencil failures
/// are excluded and counted.  Regimes: collapse if median < 1e-10; spike at
/// a local maximum exceeding both neighbours by 10x; plateau when the
/// medians over the top decade of eps vary by less than 20%.
SweepResult epsilon_sweep(std::span<const AnchoredEvaluator> points, std::span<const double> eps_list,
                          const FormNorm& norm_fn = {});

/// Label regimes of an already computed (eps, median) curve.
void label_regimes(SweepResult& result);

/// Log-spaced grid from lo to hi with `per_decade` points per decade (inclusive).
std::vector<double> log_grid(double lo, double hi, int per_decade);

}  // namespace g2link
