// Neural correction of the Fubini-Study metric on the quintic,
// g = g_FS + g_FS (.) S with S the symmetrised network output, trained
// against Monge-Ampere and total-volume losses.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "g2link/mlp.hpp"
#include "g2link/quintic.hpp"

namespace g2link {

using CyFeatures = Eigen::Matrix<double, 12, 1>;

/// Unit representative of the affine point (z_a real positive) as
/// (Re z0..z4, Im z0..z4), followed by a and e.
CyFeatures cy_features(const CVec5& Z, Patch patch);

/// Per-point data consumed by the losses.
struct CyPoint {
  CyFeatures features;
  CMat3 g_fs;
  double c2 = 0.0;      // |c|^2
  double weight = 0.0;  // |c|^2 / det g_FS
};

CyPoint make_cy_point(const QuinticPoint& p);
std::vector<CyPoint> make_cy_points(std::span<const QuinticPoint> points);

class CorrectionNet {
 public:
  CorrectionNet() = default;
  /// Output layer starts at zero, so a fresh net reproduces g_FS exactly.
  CorrectionNet(std::vector<int> hidden, std::uint64_t seed);
  explicit CorrectionNet(Mlp<double> mlp);

  const Mlp<double>& mlp() const { return mlp_; }
  Mlp<double>& mlp() { return mlp_; }

  /// Symmetrised 3x3 correction for each column of a feature batch.
  std::vector<Eigen::Matrix3d> corrections(const Mlp<double>::Mat& features) const;
  Eigen::Matrix3d correction(const CyFeatures& f) const;

 private:
  Mlp<double> mlp_;
};

inline const std::vector<int> kDefaultCyWidths = {64, 64, 64, 64};

/// g_FS + g_FS (.) S, with S applied to real and imaginary parts alike.
HermitianMetric3 apply_correction(const CMat3& g_fs, const Eigen::Matrix3d& S);

HermitianMetric3 predict_metric(const CorrectionNet& net, const QuinticPoint& p);
HermitianMetric3 predict_metric(const CorrectionNet& net, const CVec5& Z, Patch patch);

/// Ratio of the Monte-Carlo volumes of the predicted metric and of Upsilon.
double kappa(const CorrectionNet& net, std::span<const CyPoint> points);

struct CyLoss {
  double ma = 0.0;
  double vol = 0.0;
};

/// Weighted mean of |1 - det g / (kappa |c|^2)|.
double loss_monge_ampere(const CorrectionNet& net, std::span<const CyPoint> batch, double kappa);
/// |V(g_pred) - V(g_FS)| / V(g_FS) over the batch.
double loss_volume(const CorrectionNet& net, std::span<const CyPoint> batch);

/// Both terms; if `grad` is given, it receives d(w_ma * ma + w_vol * vol)/dparams
/// with kappa held fixed.
CyLoss cy_losses(const CorrectionNet& net, std::span<const CyPoint> batch, double kappa, double w_ma = 1.0,
                 double w_vol = 1.0, ParamVector<double>* grad = nullptr);

/// Fraction of points whose predicted metric is not positive-definite.
double non_positive_fraction(const CorrectionNet& net, std::span<const CyPoint> points);

struct CyTrainConfig {
  std::vector<int> widths = kDefaultCyWidths;
  int epochs = 300;
  int batch = 1024;
  double lr = 1e-3;
  double val_fraction = 0.1;
  double w_ma = 1.0;
  double w_vol = 1.0;
  double divergence_limit = 1e3;
  std::uint64_t seed = 0;
};

struct CyHistoryRow {
  int epoch = 0;
  std::string split;
  double ma = 0.0;
  double vol = 0.0;
  double kappa = 0.0;
};

struct CyTrainState {
  CorrectionNet net;
  Adam<double> opt;
  int epoch = 0;
  double kappa = 1.0;
  std::vector<CyHistoryRow> history;
  std::vector<std::size_t> train_idx, val_idx;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

CyTrainState init_cy_training(std::size_t n_points, const CyTrainConfig& cfg);

/// Runs `epochs` more epochs (cosine decay over cfg.epochs); epoch 0 is
/// recorded before any update.  Throws TrainingDiverged if a loss exceeds
/// the divergence limit.
void train_cy(CyTrainState& state, std::span<const CyPoint> points, const CyTrainConfig& cfg, int epochs,
              const std::function<void(const CyTrainState&)>& on_epoch = {});

void write_cy_loss_csv(std::ostream& os, const std::vector<CyHistoryRow>& history);

void save_cy_checkpoint(const std::string& path, const CorrectionNet& net, double kappa);
CorrectionNet load_cy_checkpoint(const std::string& path, double* kappa = nullptr);

}  // namespace g2link
