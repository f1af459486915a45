#include "g2link/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "g2link/random.hpp"

namespace g2link {

namespace {

constexpr std::uint32_t kRegMagic = 0x47523247;  // "G2RG"
constexpr std::uint32_t kRegVersion = 1;

int lower_index(int i, int j) { return i * (i + 1) / 2 + j; }

std::vector<double> target_row(ModelKind kind, const G2Sample& s) {
  if (kind == ModelKind::Form) return {s.phi.begin(), s.phi.end()};
  const auto t = cholesky_targets(MetricTensor::from_lower_triangle(7, s.g));
  return {t.begin(), t.end()};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void write_stats(std::ostream& os, const NormStats& st) {
  detail::write_u32(os, static_cast<std::uint32_t>(st.size()));
  for (double v : st.mean) detail::write_f64(os, v);
  for (double v : st.var) detail::write_f64(os, v);
  for (bool c : st.constant) detail::write_u32(os, c ? 1u : 0u);
}

NormStats read_stats(std::istream& is) {
  NormStats st;
  const auto n = detail::read_u32(is);
  if (n > 4096) throw std::runtime_error("checkpoint: implausible normalisation width");
  st.mean.resize(n);
  st.var.resize(n);
  st.constant.resize(n);
  for (auto& v : st.mean) v = detail::read_f64(is);
  for (auto& v : st.var) v = detail::read_f64(is);
  for (std::uint32_t i = 0; i < n; ++i) st.constant[i] = detail::read_u32(is) != 0;
  return st;
}

}  // namespace

const char* model_kind_name(ModelKind k) { return k == ModelKind::Form ? "form" : "metric"; }

int output_width(ModelKind k) { return k == ModelKind::Form ? 35 : 28; }

NormStats NormStats::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("NormStats::fit: no rows");
  const std::size_t d = rows.front().size();
  NormStats st;
  st.mean.assign(d, 0.0);
  st.var.assign(d, 0.0);
  st.constant.assign(d, false);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += r[j];
  for (auto& m : st.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) st.var[j] += (r[j] - st.mean[j]) * (r[j] - st.mean[j]);
  for (std::size_t j = 0; j < d; ++j) {
    st.var[j] /= static_cast<double>(rows.size());
    if (st.var[j] < kMinVariance) {
      st.var[j] = 1.0;
      st.constant[j] = true;
    }
  }
  return st;
}

void NormStats::normalize(std::span<double> v) const {
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = (v[j] - mean[j]) / std::sqrt(var[j]);
}

void NormStats::denormalize(std::span<double> v) const {
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = v[j] * std::sqrt(var[j]) + mean[j];
}

std::array<double, 19> build_input(const G2Sample& s) { return s.input19; }

std::vector<double> encode_input(std::span<const double> in, bool one_hot) {
  if (in.size() != 19) throw std::invalid_argument("encode_input: expected 19 features");
  if (!one_hot) return {in.begin(), in.end()};
  std::vector<double> out(in.begin(), in.begin() + 17);
  out.resize(27, 0.0);
  out[17 + static_cast<int>(in[17])] = 1.0;
  out[22 + static_cast<int>(in[18])] = 1.0;
  return out;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::domain_error("inverse_softplus of a non-positive value");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

std::array<double, 28> cholesky_targets(const MetricTensor& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g.matrix());
  if (llt.info() != Eigen::Success) throw std::domain_error("cholesky_targets: metric not positive-definite");
  const Eigen::MatrixXd L = llt.matrixL();
  std::array<double, 28> t{};
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j <= i; ++j) t[lower_index(i, j)] = (i == j) ? inverse_softplus(L(i, i)) : L(i, j);
  return t;
}

MetricTensor metric_from_cholesky(std::span<const double> raw) {
  if (raw.size() != 28) throw DimensionMismatch("metric_from_cholesky: expected 28 entries");
  Eigen::Matrix<double, 7, 7> L = Eigen::Matrix<double, 7, 7>::Zero();
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j <= i; ++j) L(i, j) = (i == j) ? softplus(raw[lower_index(i, j)]) : raw[lower_index(i, j)];
  return MetricTensor(L * L.transpose());
}

RegressorData prepare_data(const DenseModel& shell, std::span<const G2Sample> samples) {
  RegressorData d;
  const int width_in = shell.one_hot ? 27 : 19;
  const int width_out = output_width(shell.kind);
  const auto n = static_cast<Eigen::Index>(samples.size());
  d.X.resize(width_in, n);
  d.Y.resize(width_out, n);
  if (shell.kind == ModelKind::Metric) d.G.resize(28, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& s = samples[static_cast<std::size_t>(c)];
    auto x = encode_input(s.input19, shell.one_hot);
    shell.in.normalize(x);
    auto y = target_row(shell.kind, s);
    shell.out.normalize(y);
    for (int i = 0; i < width_in; ++i) d.X(i, c) = x[i];
    for (int i = 0; i < width_out; ++i) d.Y(i, c) = y[i];
    if (shell.kind == ModelKind::Metric)
      for (int i = 0; i < 28; ++i) d.G(i, c) = s.g[i];
  }
  return d;
}

template <typename Scalar>
double regressor_loss(const Mlp<Scalar>& net, const DenseModel& shell, const RegressorConfig& cfg,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& G,
                      ParamVector<Scalar>* grad) {
  using Mat = typename Mlp<Scalar>::Mat;
  typename Mlp<Scalar>::Cache cache;
  const Mat out = net.forward(X.cast<Scalar>(), cache);
  const Eigen::MatrixXd o = out.template cast<double>();
  const auto B = static_cast<double>(X.cols());
  double loss = 0.0;
  Eigen::MatrixXd dO(o.rows(), o.cols());
  if (shell.kind == ModelKind::Metric && cfg.metric_loss == MetricLoss::Reassembled) {
    const double scale = 1.0 / (B * 28.0);
    for (Eigen::Index c = 0; c < o.cols(); ++c) {
      Eigen::Matrix<double, 7, 7> L = Eigen::Matrix<double, 7, 7>::Zero(), raw = L;
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j <= i; ++j) {
          const int k = lower_index(i, j);
          raw(i, j) = o(k, c) * std::sqrt(shell.out.var[k]) + shell.out.mean[k];
          L(i, j) = (i == j) ? softplus(raw(i, j)) : raw(i, j);
        }
      const Eigen::Matrix<double, 7, 7> g = L * L.transpose();
      Eigen::Matrix<double, 7, 7> Gbar = Eigen::Matrix<double, 7, 7>::Zero();
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j <= i; ++j) {
          const double r = g(i, j) - G(lower_index(i, j), c);
          loss += r * r * scale;
          Gbar(i, j) = 2.0 * r * scale;
        }
      const Eigen::Matrix<double, 7, 7> dL = (Gbar + Gbar.transpose()) * L;
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j <= i; ++j) {
          const int k = lower_index(i, j);
          const double draw = (i == j) ? dL(i, j) * sigmoid(raw(i, j)) : dL(i, j);
          dO(k, c) = draw * std::sqrt(shell.out.var[k]);
        }
    }
  } else {
    const double scale = 1.0 / (B * static_cast<double>(o.rows()));
    const double delta = cfg.huber_delta;
    for (Eigen::Index c = 0; c < o.cols(); ++c)
      for (Eigen::Index i = 0; i < o.rows(); ++i) {
        const double r = o(i, c) - Y(i, c);
        if (std::abs(r) <= delta) {
          loss += r * r * scale;
          dO(i, c) = 2.0 * r * scale;
        } else {
          loss += (2.0 * delta * std::abs(r) - delta * delta) * scale;
          dO(i, c) = 2.0 * delta * (r > 0 ? 1.0 : -1.0) * scale;
        }
      }
  }
  if (grad) net.backward(cache, dO.cast<Scalar>(), *grad);
  return loss;
}

template double regressor_loss<float>(const Mlp<float>&, const DenseModel&, const RegressorConfig&,
                                      const Eigen::MatrixXd&, const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                                      ParamVector<float>*);
template double regressor_loss<double>(const Mlp<double>&, const DenseModel&, const RegressorConfig&,
                                       const Eigen::MatrixXd&, const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                                       ParamVector<double>*);

namespace {

Eigen::MatrixXd columns(const Eigen::MatrixXd& M, std::span<const std::size_t> idx) {
  if (M.size() == 0) return M;
  Eigen::MatrixXd out(M.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = M.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

double mse_normalized(const Mlp<float>& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  double total = 0.0;
  constexpr Eigen::Index chunk = 4096;
  for (Eigen::Index s = 0; s < X.cols(); s += chunk) {
    const Eigen::Index n = std::min(chunk, X.cols() - s);
    const Eigen::MatrixXd o = net.forward(X.middleCols(s, n).cast<float>()).cast<double>();
    total += (o - Y.middleCols(s, n)).squaredNorm();
  }
  return total / static_cast<double>(Y.size());
}

}  // namespace

TrainResult train_regressor(ModelKind kind, std::span<const G2Sample> train, std::span<const G2Sample> val,
                            const RegressorConfig& cfg, const std::function<void(const RegressorHistoryRow&)>& on_epoch) {
  if (train.empty()) throw std::invalid_argument("train_regressor: empty training split");
  TrainResult res;
  DenseModel& m = res.model;
  m.kind = kind;
  m.one_hot = cfg.one_hot;
  {
    std::vector<std::vector<double>> ins, outs;
    ins.reserve(train.size());
    outs.reserve(train.size());
    for (const auto& s : train) {
      ins.push_back(encode_input(s.input19, cfg.one_hot));
      outs.push_back(target_row(kind, s));
    }
    m.in = NormStats::fit(ins);
    m.out = NormStats::fit(outs);
  }
  m.net = Mlp<float>(cfg.one_hot ? 27 : 19, cfg.widths, output_width(kind), Activation::Gelu);
  auto rng = derived_rng(cfg.seed, 0x6E7);
  m.net.init_glorot(rng);

  const RegressorData dt = prepare_data(m, train);
  const RegressorData dv = val.empty() ? RegressorData{} : prepare_data(m, val);
  Adam<float> opt;
  ParamVector<float> grad, last_good = m.net.params();
  std::vector<std::size_t> order(train.size());
  const auto bs = static_cast<std::size_t>(cfg.batch);
  Eigen::MatrixXd bx, by, bg;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.lr = cfg.lr * std::pow(0.5, cfg.lr_halving_epochs > 0 ? epoch / cfg.lr_halving_epochs : 0);
    std::iota(order.begin(), order.end(), 0);
    auto erng = derived_rng(cfg.seed, 2000003ull + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), erng);
    double acc = 0.0;
    std::size_t batches = 0;
    bool bad = false;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
      bx = columns(dt.X, idx);
      by = columns(dt.Y, idx);
      bg = columns(dt.G, idx);
      const double l = regressor_loss(m.net, m, cfg, bx, by, bg, &grad);
      if (!std::isfinite(l)) {
        bad = true;
        break;
      }
      opt.step(m.net.params(), grad);
      acc += l;
      ++batches;
    }
    RegressorHistoryRow row;
    row.epoch = epoch + 1;
    row.lr = opt.lr;
    row.train_loss = batches ? acc / static_cast<double>(batches) : std::nan("");
    row.val_loss = val.empty() ? std::nan("") : mse_normalized(m.net, dv.X, dv.Y);
    if (bad || !std::isfinite(row.train_loss)) {
      m.net.params() = last_good;
      res.aborted = true;
      res.abort_reason = "non-finite loss at epoch " + std::to_string(epoch + 1);
      break;
    }
    last_good = m.net.params();
    res.history.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return res;
}

Eigen::MatrixXd predict_raw(const DenseModel& model, std::span<const std::array<double, 19>> inputs) {
  const int width_in = model.one_hot ? 27 : 19;
  Eigen::MatrixXf X(width_in, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t c = 0; c < inputs.size(); ++c) {
    auto x = encode_input(inputs[c], model.one_hot);
    model.in.normalize(x);
    for (int i = 0; i < width_in; ++i) X(i, static_cast<Eigen::Index>(c)) = static_cast<float>(x[i]);
  }
  Eigen::MatrixXd out = model.net.forward(X).cast<double>();
  for (Eigen::Index c = 0; c < out.cols(); ++c) model.out.denormalize(std::span<double>(out.col(c).data(), out.rows()));
  return out;
}

AltForm predict_phi(const DenseModel& model, const std::array<double, 19>& input19) {
  if (model.kind != ModelKind::Form) throw std::invalid_argument("predict_phi needs a form model");
  const Eigen::MatrixXd o = predict_raw(model, std::span(&input19, 1));
  return AltForm(7, 3, std::vector<double>(o.data(), o.data() + 35));
}

MetricTensor predict_metric(const DenseModel& model, const std::array<double, 19>& input19) {
  if (model.kind != ModelKind::Metric) throw std::invalid_argument("predict_metric needs a metric model");
  const Eigen::MatrixXd o = predict_raw(model, std::span(&input19, 1));
  return metric_from_cholesky(std::span<const double>(o.data(), 28));
}

double normalized_mse(const DenseModel& model, std::span<const G2Sample> samples) {
  if (samples.empty()) throw std::invalid_argument("normalized_mse: no samples");
  const RegressorData d = prepare_data(model, samples);
  return mse_normalized(model.net, d.X, d.Y);
}

void write_regressor_loss_csv(std::ostream& os, const std::vector<RegressorHistoryRow>& history) {
  os << "epoch,train_loss,val_loss,lr\n" << std::setprecision(10);
  for (const auto& r : history) os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
}

void save_regressor(const std::string& path, const DenseModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  detail::write_u32(os, kRegMagic);
  detail::write_u32(os, kRegVersion);
  detail::write_u32(os, static_cast<std::uint32_t>(model.kind));
  detail::write_u32(os, model.one_hot ? 1u : 0u);
  write_stats(os, model.in);
  write_stats(os, model.out);
  model.net.save(os);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

DenseModel load_regressor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  if (detail::read_u32(is) != kRegMagic) throw std::runtime_error(path + " is not a regressor checkpoint");
  const auto version = detail::read_u32(is);
  if (version != kRegVersion)
    throw std::runtime_error(path + ": checkpoint version " + std::to_string(version) + ", expected " +
                             std::to_string(kRegVersion));
  DenseModel m;
  const auto kind = detail::read_u32(is);
  if (kind > 1) throw std::runtime_error(path + ": unknown model kind");
  m.kind = static_cast<ModelKind>(kind);
  m.one_hot = detail::read_u32(is) != 0;
  m.in = read_stats(is);
  m.out = read_stats(is);
  m.net = Mlp<float>::load(is);
  if (m.net.outputs() != output_width(m.kind) || m.net.inputs() != static_cast<int>(m.in.size()))
    throw std::runtime_error(path + ": layer shapes do not match the model kind");
  return m;
}

}  // namespace g2link
