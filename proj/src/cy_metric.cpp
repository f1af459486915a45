#include "g2link/cy_metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>

#include "g2link/random.hpp"

namespace g2link {

namespace {

constexpr std::uint32_t kCyMagic = 0x59433247;  // "G2CY"
constexpr std::uint32_t kCyVersion = 1;

Mlp<double>::Mat feature_matrix(std::span<const CyPoint> pts) {
  Mlp<double>::Mat X(12, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = pts[i].features;
  return X;
}

Eigen::Matrix3d symmetrised(const Mlp<double>::Mat& Y, Eigen::Index col) {
  Eigen::Matrix3d S;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) S(j, k) = Y(3 * j + k, col);
  return 0.5 * (S + S.transpose());
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

CyFeatures cy_features(const CVec5& Z, Patch patch) {
  const CVec5 z = Z / Z.norm();
  CyFeatures f;
  for (int m = 0; m < 5; ++m) {
    f(m) = z(m).real();
    f(5 + m) = z(m).imag();
  }
  f(10) = patch.a;
  f(11) = patch.e;
  return f;
}

CyPoint make_cy_point(const QuinticPoint& p) {
  CyPoint out;
  const CVec5 Z = affine_representative(p.z, p.patch);
  out.features = cy_features(Z, p.patch);
  out.g_fs = fs_metric_affine(Z, p.patch);
  out.c2 = std::norm(holo_coefficient_affine(Z, p.patch));
  out.weight = out.c2 / out.g_fs.determinant().real();
  return out;
}

std::vector<CyPoint> make_cy_points(std::span<const QuinticPoint> points) {
  std::vector<CyPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(make_cy_point(p));
  return out;
}

CorrectionNet::CorrectionNet(std::vector<int> hidden, std::uint64_t seed)
    : mlp_(12, std::move(hidden), 9, Activation::Gelu) {
  auto rng = derived_rng(seed, 0xC0FFEE);
  mlp_.init_glorot(rng, true);
}

CorrectionNet::CorrectionNet(Mlp<double> mlp) : mlp_(std::move(mlp)) {
  if (mlp_.inputs() != 12 || mlp_.outputs() != 9) throw std::invalid_argument("CorrectionNet: expected a 12 -> 9 network");
}

std::vector<Eigen::Matrix3d> CorrectionNet::corrections(const Mlp<double>::Mat& features) const {
  const auto Y = mlp_.forward(features);
  std::vector<Eigen::Matrix3d> out(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index c = 0; c < Y.cols(); ++c) out[static_cast<std::size_t>(c)] = symmetrised(Y, c);
  return out;
}

Eigen::Matrix3d CorrectionNet::correction(const CyFeatures& f) const {
  Mlp<double>::Mat X = f;
  return corrections(X).front();
}

HermitianMetric3 apply_correction(const CMat3& g_fs, const Eigen::Matrix3d& S) {
  HermitianMetric3 g = g_fs;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) g(j, k) += g_fs(j, k) * S(j, k);
  return g;
}

HermitianMetric3 predict_metric(const CorrectionNet& net, const CVec5& Z, Patch patch) {
  return apply_correction(fs_metric_affine(Z, patch), net.correction(cy_features(Z, patch)));
}

HermitianMetric3 predict_metric(const CorrectionNet& net, const QuinticPoint& p) {
  return predict_metric(net, affine_representative(p.z, p.patch), p.patch);
}

double kappa(const CorrectionNet& net, std::span<const CyPoint> points) {
  if (points.empty()) throw std::invalid_argument("kappa: no points");
  const auto S = net.corrections(feature_matrix(points));
  double vol_k = 0.0, vol_u = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double det = apply_correction(points[i].g_fs, S[i]).determinant().real();
    vol_k += points[i].weight * det / points[i].c2;
    vol_u += points[i].weight;
  }
  return vol_k / vol_u;
}

CyLoss cy_losses(const CorrectionNet& net, std::span<const CyPoint> batch, double kappa, double w_ma, double w_vol,
                 ParamVector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("cy_losses: empty batch");
  if (!(kappa > 0.0)) throw std::domain_error("cy_losses: kappa must be positive");
  const auto X = feature_matrix(batch);
  Mlp<double>::Cache cache;
  const auto Y = net.mlp().forward(X, cache);
  const std::size_t n = batch.size();
  std::vector<double> det(n), det_fs(n);
  std::vector<CMat3> g(n);
  double wsum = 0.0, ma = 0.0, V = 0.0, V_fs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = batch[i];
    g[i] = apply_correction(p.g_fs, symmetrised(Y, static_cast<Eigen::Index>(i)));
    det[i] = g[i].determinant().real();
    det_fs[i] = p.g_fs.determinant().real();
    wsum += p.weight;
    ma += p.weight * std::abs(1.0 - det[i] / (kappa * p.c2));
    V += p.weight * det[i] / p.c2;
    V_fs += p.weight * det_fs[i] / p.c2;
  }
  CyLoss out;
  out.ma = ma / wsum;
  out.vol = std::abs(V - V_fs) / V_fs;
  if (!grad) return out;
  Mlp<double>::Mat dY(9, static_cast<Eigen::Index>(n));
  const double vol_sign = sgn(V - V_fs);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = batch[i];
    const double r = det[i] / (kappa * p.c2);
    const double ddet = w_ma * (-sgn(1.0 - r) * p.weight / (kappa * p.c2 * wsum)) +
                        w_vol * vol_sign * p.weight / (p.c2 * V_fs);
    // d det / d g_jk = det * (g^-1)_kj
    const CMat3 cof = det[i] * g[i].inverse().transpose();
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        dY(3 * j + k, static_cast<Eigen::Index>(i)) =
            ddet * 0.5 * (cof(j, k) * p.g_fs(j, k) + cof(k, j) * p.g_fs(k, j)).real();
  }
  net.mlp().backward(cache, dY, *grad);
  return out;
}

double loss_monge_ampere(const CorrectionNet& net, std::span<const CyPoint> batch, double k) {
  return cy_losses(net, batch, k).ma;
}

double loss_volume(const CorrectionNet& net, std::span<const CyPoint> batch) { return cy_losses(net, batch, 1.0).vol; }

double non_positive_fraction(const CorrectionNet& net, std::span<const CyPoint> points) {
  if (points.empty()) return 0.0;
  const auto S = net.corrections(feature_matrix(points));
  std::size_t bad = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!is_positive_definite(apply_correction(points[i].g_fs, S[i]))) ++bad;
  return static_cast<double>(bad) / static_cast<double>(points.size());
}

CyTrainState init_cy_training(std::size_t n_points, const CyTrainConfig& cfg) {
  if (n_points < 2) throw std::invalid_argument("train_cy: need at least two points");
  CyTrainState st;
  st.net = CorrectionNet(cfg.widths, cfg.seed);
  st.opt.lr = cfg.lr;
  for (std::size_t i = 0; i < n_points; ++i)
    (hash_uniform(cfg.seed ^ 0xCA1AB1, i) < cfg.val_fraction ? st.val_idx : st.train_idx).push_back(i);
  if (st.train_idx.empty() || st.val_idx.empty()) throw std::invalid_argument("train_cy: split left an empty part");
  return st;
}

namespace {

std::vector<CyPoint> gather(std::span<const CyPoint> pts, const std::vector<std::size_t>& idx) {
  std::vector<CyPoint> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pts[i]);
  return out;
}

void record(CyTrainState& st, const std::vector<CyPoint>& train, const std::vector<CyPoint>& val,
            const CyTrainConfig& cfg) {
  st.kappa = kappa(st.net, train);
  const CyLoss lt = cy_losses(st.net, train, st.kappa);
  const CyLoss lv = cy_losses(st.net, val, st.kappa);
  st.history.push_back({st.epoch, "train", lt.ma, lt.vol, st.kappa});
  st.history.push_back({st.epoch, "val", lv.ma, lv.vol, st.kappa});
  for (double v : {lt.ma, lt.vol, lv.ma, lv.vol})
    if (!std::isfinite(v) || v > cfg.divergence_limit)
      throw TrainingDiverged("CY metric training diverged at epoch " + std::to_string(st.epoch) +
                             " (train MA " + std::to_string(lt.ma) + ", val MA " + std::to_string(lv.ma) + ")");
}

}  // namespace

void train_cy(CyTrainState& st, std::span<const CyPoint> points, const CyTrainConfig& cfg, int epochs,
              const std::function<void(const CyTrainState&)>& on_epoch) {
  const auto train = gather(points, st.train_idx);
  const auto val = gather(points, st.val_idx);
  if (st.history.empty()) record(st, train, val, cfg);
  std::vector<std::size_t> order(train.size());
  ParamVector<double> grad;
  std::vector<CyPoint> batch;
  for (int e = 0; e < epochs; ++e) {
    const double progress = cfg.epochs > 0 ? static_cast<double>(st.epoch) / cfg.epochs : 0.0;
    st.opt.lr = cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(1.0, progress)));
    std::iota(order.begin(), order.end(), 0);
    auto rng = derived_rng(cfg.seed, 1000003ull + static_cast<std::uint64_t>(st.epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      cy_losses(st.net, batch, st.kappa, cfg.w_ma, cfg.w_vol, &grad);
      st.opt.step(st.net.mlp().params(), grad);
    }
    ++st.epoch;
    record(st, train, val, cfg);
    if (on_epoch) on_epoch(st);
  }
}

void write_cy_loss_csv(std::ostream& os, const std::vector<CyHistoryRow>& history) {
  os << "epoch,ma_loss,vol_loss,split,kappa\n" << std::setprecision(10);
  for (const auto& r : history) os << r.epoch << ',' << r.ma << ',' << r.vol << ',' << r.split << ',' << r.kappa << '\n';
}

void save_cy_checkpoint(const std::string& path, const CorrectionNet& net, double k) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  detail::write_u32(os, kCyMagic);
  detail::write_u32(os, kCyVersion);
  detail::write_f64(os, k);
  net.mlp().save(os);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

CorrectionNet load_cy_checkpoint(const std::string& path, double* k) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  if (detail::read_u32(is) != kCyMagic) throw std::runtime_error(path + " is not a CY metric checkpoint");
  const auto version = detail::read_u32(is);
  if (version != kCyVersion)
    throw std::runtime_error(path + ": checkpoint version " + std::to_string(version) + ", expected " +
                             std::to_string(kCyVersion));
  const double kap = detail::read_f64(is);
  if (k) *k = kap;
  return CorrectionNet(Mlp<double>::load(is));
}

}  // namespace g2link
