// Dense regressors for the 35 components of phi and the 28 components of
// g_phi, wrapped by input and output standardisation.  The metric model
// predicts a Cholesky factor with softplus diagonal.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "g2link/exterior.hpp"
#include "g2link/link.hpp"
#include "g2link/mlp.hpp"

namespace g2link {

enum class ModelKind : std::uint8_t { Form = 0, Metric = 1 };
const char* model_kind_name(ModelKind k);
int output_width(ModelKind k);

struct NormStats {
  std::vector<double> mean, var;
  std::vector<bool> constant;

  static constexpr double kMinVariance = 1e-12;

  /// Per-coordinate mean and population variance; variances below
  /// kMinVariance are set to 1 and flagged constant.
  static NormStats fit(std::span<const std::vector<double>> rows);
  std::size_t size() const { return mean.size(); }
  void normalize(std::span<double> v) const;
  void denormalize(std::span<double> v) const;
};

/// [x (10), eta (7), a, e] of a sample.
std::array<double, 19> build_input(const G2Sample& s);

/// Network input: the 19 raw features, or with a and e one-hot (27 wide).
std::vector<double> encode_input(std::span<const double> input19, bool one_hot);

double softplus(double x);
double inverse_softplus(double y);

/// Lower-triangular Cholesky factor of g, 28 entries row-major, with the
/// diagonal passed through inverse_softplus.
std::array<double, 28> cholesky_targets(const MetricTensor& g);
/// L L^T from 28 raw outputs (softplus on the diagonal).
MetricTensor metric_from_cholesky(std::span<const double> raw28);

struct DenseModel {
  ModelKind kind = ModelKind::Form;
  bool one_hot = false;
  NormStats in, out;
  Mlp<float> net;
};

inline const std::vector<int> kDefaultG2Widths = {512, 512, 256, 256};

enum class MetricLoss : std::uint8_t { Cholesky = 0, Reassembled = 1 };

struct RegressorConfig {
  std::vector<int> widths = kDefaultG2Widths;
  int epochs = 150;
  int batch = 256;
  double lr = 1e-3;
  int lr_halving_epochs = 50;
  double huber_delta = std::numeric_limits<double>::infinity();
  bool one_hot = false;
  MetricLoss metric_loss = MetricLoss::Cholesky;
  std::uint64_t seed = 0;
};

struct RegressorHistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  DenseModel model;
  std::vector<RegressorHistoryRow> history;
  bool aborted = false;
  std::string abort_reason;
};

/// Normalised training inputs and targets for one model kind.
struct RegressorData {
  Eigen::MatrixXd X;  // encoded, normalised inputs (features x n)
  Eigen::MatrixXd Y;  // normalised targets (outputs x n)
  Eigen::MatrixXd G;  // raw metric lower triangles (28 x n), metric kind only
};

RegressorData prepare_data(const DenseModel& shell, std::span<const G2Sample> samples);

/// Fits NormStats on `train` only, then trains.  A NaN loss stops training
/// and returns the weights of the last finite epoch with aborted = true.
TrainResult train_regressor(ModelKind kind, std::span<const G2Sample> train, std::span<const G2Sample> val,
                            const RegressorConfig& cfg,
                            const std::function<void(const RegressorHistoryRow&)>& on_epoch = {});

/// Loss of `net` on a normalised batch; adds d loss / d params to grad when given.
template <typename Scalar>
double regressor_loss(const Mlp<Scalar>& net, const DenseModel& shell, const RegressorConfig& cfg,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& G,
                      ParamVector<Scalar>* grad);

/// Denormalised outputs (35 phi components, or 28 raw Cholesky parameters), one column per input.
Eigen::MatrixXd predict_raw(const DenseModel& model, std::span<const std::array<double, 19>> inputs);

AltForm predict_phi(const DenseModel& model, const std::array<double, 19>& input19);
MetricTensor predict_metric(const DenseModel& model, const std::array<double, 19>& input19);

/// Mean squared error in normalised target units.
double normalized_mse(const DenseModel& model, std::span<const G2Sample> samples);

void write_regressor_loss_csv(std::ostream& os, const std::vector<RegressorHistoryRow>& history);

void save_regressor(const std::string& path, const DenseModel& model);
DenseModel load_regressor(const std::string& path);

}  // namespace g2link
