// Small dense feed-forward networks with manual backpropagation.
//
// Batches are stored column-wise: an input batch is (in x batch).  All
// parameters live in one flat vector so optimisers and gradient checks can
// treat them uniformly.  Layer l owns W_l (out x in, column-major) followed
// by b_l.
#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace g2link {

enum class Activation : std::uint8_t { Gelu = 0, Tanh = 1 };

/// Flat parameter storage.  Over-aligned so vectorised kernels see the same
/// alignment on every allocation, which keeps training bitwise reproducible.
template <typename Scalar>
using ParamVector = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

template <typename Scalar>
class Mlp {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Cache {
    std::vector<Mat> pre;   // pre-activations of hidden layers
    std::vector<Mat> post;  // inputs to each layer (post[0] = X)
  };

  Mlp() = default;
  Mlp(int inputs, std::vector<int> hidden, int outputs, Activation act = Activation::Gelu);

  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  std::size_t parameter_count() const { return params_.size(); }

  ParamVector<Scalar>& params() { return params_; }
  const ParamVector<Scalar>& params() const { return params_; }

  /// Glorot-uniform weights, zero biases; optionally zero the output layer.
  void init_glorot(std::mt19937_64& rng, bool zero_output_layer = false);

  Mat forward(const Mat& X) const;
  Mat forward(const Mat& X, Cache& cache) const;
  /// Accumulates dL/dparams into grad (resized and zeroed if needed when
  /// `reset`).  dY is dL/d(output) for the cached batch.
  void backward(const Cache& cache, const Mat& dY, ParamVector<Scalar>& grad, bool reset = true) const;

  /// Serialise shapes and weights (weights row-major, as little-endian doubles).
  void save(std::ostream& os) const;
  static Mlp load(std::istream& is);

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out(sizes_.front(), std::vector<int>(sizes_.begin() + 1, sizes_.end() - 1), sizes_.back(), act_);
    for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<Other>(params_[i]);
    return out;
  }

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  Eigen::Map<const Mat> W(int l) const {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const Vec> b(int l) const {
    return {params_.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]};
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  ParamVector<Scalar> params_;
  Activation act_ = Activation::Gelu;
};

template <typename Scalar>
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  ParamVector<Scalar> m, v;
  std::int64_t t = 0;

  void step(ParamVector<Scalar>& params, const ParamVector<Scalar>& grad);
};

namespace detail {

inline constexpr double kGeluK = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluC = 0.044715;

template <typename Scalar>
inline Scalar gelu(Scalar x) {
  const Scalar t = std::tanh(Scalar(kGeluK) * (x + Scalar(kGeluC) * x * x * x));
  return Scalar(0.5) * x * (Scalar(1) + t);
}

template <typename Scalar>
inline Scalar gelu_grad(Scalar x) {
  const Scalar u = Scalar(kGeluK) * (x + Scalar(kGeluC) * x * x * x);
  const Scalar t = std::tanh(u);
  const Scalar du = Scalar(kGeluK) * (Scalar(1) + Scalar(3 * kGeluC) * x * x);
  return Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * x * (Scalar(1) - t * t) * du;
}

void write_u32(std::ostream& os, std::uint32_t v);
void write_f64(std::ostream& os, double v);
std::uint32_t read_u32(std::istream& is);
double read_f64(std::istream& is);

}  // namespace detail

template <typename Scalar>
Mlp<Scalar>::Mlp(int inputs, std::vector<int> hidden, int outputs, Activation act) : act_(act) {
  if (inputs < 1 || outputs < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
  sizes_.push_back(inputs);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
    sizes_.push_back(h);
  }
  sizes_.push_back(outputs);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_.assign(off, Scalar(0));
}

template <typename Scalar>
void Mlp<Scalar>::init_glorot(std::mt19937_64& rng, bool zero_output_layer) {
  std::fill(params_.begin(), params_.end(), Scalar(0));
  const int layers = static_cast<int>(sizes_.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    if (zero_output_layer && l == layers - 1) break;
    const double limit = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t n = static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
    for (std::size_t i = 0; i < n; ++i) params_[offsets_[l] + i] = static_cast<Scalar>(dist(rng));
  }
}

template <typename Scalar>
typename Mlp<Scalar>::Mat Mlp<Scalar>::forward(const Mat& X) const {
  Cache cache;
  return forward(X, cache);
}

template <typename Scalar>
typename Mlp<Scalar>::Mat Mlp<Scalar>::forward(const Mat& X, Cache& cache) const {
  if (X.rows() != sizes_.front()) throw std::invalid_argument("Mlp::forward: input has wrong width");
  const int layers = static_cast<int>(sizes_.size()) - 1;
  cache.pre.resize(layers - 1);
  cache.post.resize(layers);
  cache.post[0] = X;
  Mat h;
  for (int l = 0; l < layers; ++l) {
    const Mat& in = cache.post[l];
    Mat z(sizes_[l + 1], in.cols());
    z.noalias() = W(l) * in;
    z.colwise() += b(l);
    if (l == layers - 1) return z;
    cache.pre[l] = z;
    if (act_ == Activation::Gelu) cache.post[l + 1] = z.unaryExpr([](Scalar v) { return detail::gelu(v); });
    else cache.post[l + 1] = z.array().tanh().matrix();
  }
  return h;
}

template <typename Scalar>
void Mlp<Scalar>::backward(const Cache& cache, const Mat& dY, ParamVector<Scalar>& grad, bool reset) const {
  if (reset || grad.size() != params_.size()) grad.assign(params_.size(), Scalar(0));
  const int layers = static_cast<int>(sizes_.size()) - 1;
  Mat delta = dY;
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::Map<Mat> gW(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
    Eigen::Map<Vec> gb(grad.data() + offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]);
    gW.noalias() += delta * cache.post[l].transpose();
    gb += delta.rowwise().sum();
    if (l == 0) break;
    Mat up(sizes_[l], delta.cols());
    up.noalias() = W(l).transpose() * delta;
    if (act_ == Activation::Gelu)
      delta = up.cwiseProduct(cache.pre[l - 1].unaryExpr([](Scalar v) { return detail::gelu_grad(v); }));
    else
      delta = up.cwiseProduct((Scalar(1) - cache.post[l].array().square()).matrix());
  }
}

template <typename Scalar>
void Mlp<Scalar>::save(std::ostream& os) const {
  detail::write_u32(os, static_cast<std::uint32_t>(act_));
  detail::write_u32(os, static_cast<std::uint32_t>(sizes_.size()));
  for (int s : sizes_) detail::write_u32(os, static_cast<std::uint32_t>(s));
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto w = W(static_cast<int>(l));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) detail::write_f64(os, static_cast<double>(w(r, c)));
    const auto bias = b(static_cast<int>(l));
    for (Eigen::Index r = 0; r < bias.size(); ++r) detail::write_f64(os, static_cast<double>(bias(r)));
  }
}

template <typename Scalar>
Mlp<Scalar> Mlp<Scalar>::load(std::istream& is) {
  const auto act = static_cast<Activation>(detail::read_u32(is));
  const std::uint32_t n = detail::read_u32(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = static_cast<int>(detail::read_u32(is));
  Mlp out(sizes.front(), std::vector<int>(sizes.begin() + 1, sizes.end() - 1), sizes.back(), act);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Scalar* w = out.params_.data() + out.offsets_[l];
    const int rows = sizes[l + 1], cols = sizes[l];
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w[static_cast<std::size_t>(c) * rows + r] = static_cast<Scalar>(detail::read_f64(is));
    Scalar* bias = w + static_cast<std::size_t>(rows) * cols;
    for (int r = 0; r < rows; ++r) bias[r] = static_cast<Scalar>(detail::read_f64(is));
  }
  return out;
}

template <typename Scalar>
void Adam<Scalar>::step(ParamVector<Scalar>& params, const ParamVector<Scalar>& grad) {
  if (m.size() != params.size()) {
    m.assign(params.size(), Scalar(0));
    v.assign(params.size(), Scalar(0));
  }
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  const Scalar step = static_cast<Scalar>(lr * std::sqrt(c2) / c1);
  const Scalar b1 = static_cast<Scalar>(beta1), b2 = static_cast<Scalar>(beta2);
  const Scalar e = static_cast<Scalar>(eps * std::sqrt(c2));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = b1 * m[i] + (Scalar(1) - b1) * grad[i];
    v[i] = b2 * v[i] + (Scalar(1) - b2) * grad[i] * grad[i];
    params[i] -= step * m[i] / (std::sqrt(v[i]) + e);
  }
}

extern template class Mlp<float>;
extern template class Mlp<double>;
extern template struct Adam<float>;
extern template struct Adam<double>;

}  // namespace g2link
