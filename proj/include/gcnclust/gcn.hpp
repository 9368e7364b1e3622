#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace gcnclust {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  // Subgraphs per update when training on many small graphs.
  std::size_t batch_size = 32;

  void validate() const {
    detail::require(learning_rate > 0.0, "TrainConfig: learning_rate must be > 0");
    detail::require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0,1)");
    detail::require(weight_decay >= 0.0, "TrainConfig: weight_decay must be >= 0");
    detail::require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    detail::require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  }
};

// Stack of graph-convolution layers followed by a linear regressor.
// Layer l maps width d to width d' with a (2d x d') weight: the top half acts
// on the layer input, the bottom half on its neighbourhood aggregate.
struct GcnModel {
  std::vector<DenseMatrix<double>> layers;
  DenseMatrix<double> regressor_weight;
  double regressor_bias = 0.0;

  std::vector<DenseMatrix<double>> layer_velocity;
  DenseMatrix<double> regressor_velocity;
  double bias_velocity = 0.0;

  // Bumped on every parameter update so stale forward caches are detectable.
  std::uint64_t generation = 0;

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().rows() / 2; }
  std::size_t output_dim() const noexcept { return layers.empty() ? 0 : layers.back().cols(); }

  // Glorot-uniform weights, zero bias, zero momentum.
  static GcnModel create(std::size_t input_dim, std::span<const std::size_t> widths,
                         std::uint64_t seed) {
    detail::require(input_dim >= 1, "GcnModel: input_dim must be >= 1");
    detail::require(!widths.empty(), "GcnModel: at least one layer is required");
    std::mt19937_64 rng(seed);
    auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      DenseMatrix<double> w(fan_in, fan_out);
      for (auto& v : w.values()) v = dist(rng);
      return w;
    };
    GcnModel m;
    std::size_t d = input_dim;
    for (std::size_t width : widths) {
      detail::require(width >= 1, "GcnModel: layer widths must be >= 1");
      m.layers.push_back(glorot(2 * d, width));
      d = width;
    }
    m.regressor_weight = glorot(d, 1);
    m.reset_optimizer();
    return m;
  }

  static GcnModel create(std::size_t input_dim, std::size_t depth, std::size_t hidden,
                         std::uint64_t seed) {
    std::vector<std::size_t> widths(depth, hidden);
    return create(input_dim, widths, seed);
  }

  void reset_optimizer() {
    layer_velocity.clear();
    for (const auto& w : layers) layer_velocity.emplace_back(w.rows(), w.cols());
    regressor_velocity = DenseMatrix<double>(regressor_weight.rows(), regressor_weight.cols());
    bias_velocity = 0.0;
  }

  void validate() const {
    if (layers.empty()) throw ValidationError("GcnModel: no layers");
    std::size_t d = layers.front().rows();
    if (d == 0 || d % 2 != 0) throw ValidationError("GcnModel: first layer has odd row count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].rows() != d)
        throw ValidationError("GcnModel: layer " + std::to_string(l) + " expects " +
                              std::to_string(d) + " input rows, has " +
                              std::to_string(layers[l].rows()));
      if (layers[l].cols() == 0) throw ValidationError("GcnModel: zero-width layer");
      if (!layers[l].all_finite()) throw ValidationError("GcnModel: non-finite layer weight");
      d = 2 * layers[l].cols();
    }
    if (regressor_weight.rows() != output_dim() || regressor_weight.cols() != 1)
      throw ValidationError("GcnModel: regressor shape does not match last layer width");
    if (!regressor_weight.all_finite() || !std::isfinite(regressor_bias))
      throw ValidationError("GcnModel: non-finite regressor");
  }
};

struct GcnGradients {
  std::vector<DenseMatrix<double>> layers;
  DenseMatrix<double> regressor_weight;
  double regressor_bias = 0.0;

  static GcnGradients zeros_like(const GcnModel& m) {
    GcnGradients g;
    for (const auto& w : m.layers) g.layers.emplace_back(w.rows(), w.cols());
    g.regressor_weight = DenseMatrix<double>(m.regressor_weight.rows(), m.regressor_weight.cols());
    return g;
  }

  GcnGradients& operator+=(const GcnGradients& o) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& a = layers[l].values();
      const auto& b = o.layers[l].values();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
    auto& a = regressor_weight.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.regressor_weight.values()[i];
    regressor_bias += o.regressor_bias;
    return *this;
  }
};

// Intermediates retained by gcn_forward for the backward pass. Holds a
// non-owning pointer to the adjacency, which must outlive the cache.
struct ForwardCache {
  const SparseAdjacency* adjacency = nullptr;
  std::uint64_t generation = 0;
  std::vector<DenseMatrix<double>> inputs;       // F_0 .. F_L
  std::vector<DenseMatrix<double>> concatenated; // [F_l, A F_l]
  std::vector<DenseMatrix<double>> preactivations;
};

struct ForwardResult {
  std::vector<double> predictions;
  ForwardCache cache;
};

inline ForwardResult gcn_forward(const GcnModel& model, const SparseAdjacency& adj_norm,
                                 DenseMatrix<double> features) {
  detail::require(!model.layers.empty(), "gcn_forward: model has no layers");
  detail::require(adj_norm.n() == features.rows(),
                  "gcn_forward: adjacency has " + std::to_string(adj_norm.n()) +
                      " vertices but features have " + std::to_string(features.rows()) + " rows");
  detail::require(features.cols() == model.input_dim(),
                  "gcn_forward: feature width " + std::to_string(features.cols()) +
                      " does not match model input width " + std::to_string(model.input_dim()));
  ForwardResult out;
  auto& cache = out.cache;
  cache.adjacency = &adj_norm;
  cache.generation = model.generation;
  cache.inputs.reserve(model.depth() + 1);
  cache.inputs.push_back(std::move(features));
  for (const auto& w : model.layers) {
    const auto& x = cache.inputs.back();
    cache.concatenated.push_back(concat_cols(x, spmm(adj_norm, x)));
    cache.preactivations.push_back(dense_matmul(cache.concatenated.back(), w));
    cache.inputs.push_back(relu(cache.preactivations.back()));
  }
  const auto& top = cache.inputs.back();
  auto scores = dense_matmul(top, model.regressor_weight);
  out.predictions.resize(top.rows());
  for (std::size_t i = 0; i < top.rows(); ++i) out.predictions[i] = scores(i, 0) + model.regressor_bias;
  return out;
}

inline ForwardResult gcn_forward(const GcnModel& model, const SparseAdjacency& adj_norm,
                                 const DenseMatrix<float>& features) {
  return gcn_forward(model, adj_norm, features.cast<double>());
}

enum class LossMode { mean, sum };

inline double mse_loss(std::span<const double> predictions, std::span<const double> targets,
                       LossMode mode = LossMode::mean) {
  detail::require(!predictions.empty(), "mse_loss: empty input");
  detail::require(predictions.size() == targets.size(), "mse_loss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    s += r * r;
  }
  return mode == LossMode::mean ? s / static_cast<double>(predictions.size()) : s;
}

// d(loss)/d(prediction), optionally scaled (batch averaging).
inline std::vector<double> mse_loss_grad(std::span<const double> predictions,
                                         std::span<const double> targets, LossMode mode,
                                         double scale = 1.0) {
  detail::require(!predictions.empty(), "mse_loss_grad: empty input");
  detail::require(predictions.size() == targets.size(), "mse_loss_grad: length mismatch");
  const double k = mode == LossMode::mean ? 2.0 / static_cast<double>(predictions.size()) : 2.0;
  std::vector<double> g(predictions.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * k * (predictions[i] - targets[i]);
  return g;
}

inline GcnGradients gcn_backward(const GcnModel& model, const ForwardCache& cache,
                                 std::span<const double> loss_grad) {
  const std::size_t depth = model.depth();
  detail::require(cache.adjacency != nullptr && cache.generation == model.generation &&
                      cache.inputs.size() == depth + 1 && cache.preactivations.size() == depth,
                  "gcn_backward: cache does not belong to this model state");
  const auto& top = cache.inputs.back();
  detail::require(loss_grad.size() == top.rows(), "gcn_backward: loss gradient length mismatch");
  for (std::size_t l = 0; l < depth; ++l)
    detail::require(cache.preactivations[l].cols() == model.layers[l].cols(),
                    "gcn_backward: cache shapes do not match the model");

  GcnGradients grads;
  grads.layers.resize(depth);
  DenseMatrix<double> g(top.rows(), 1, std::vector<double>(loss_grad.begin(), loss_grad.end()));
  grads.regressor_weight = dense_matmul_tn(top, g);
  grads.regressor_bias = 0.0;
  for (double v : loss_grad) grads.regressor_bias += v;

  auto upstream = dense_matmul_nt(g, model.regressor_weight);
  for (std::size_t l = depth; l-- > 0;) {
    const auto& z = cache.preactivations[l];
    for (std::size_t i = 0; i < upstream.size(); ++i)
      if (!(z.values()[i] > 0.0)) upstream.values()[i] = 0.0;
    grads.layers[l] = dense_matmul_tn(cache.concatenated[l], upstream);
    if (l == 0) break;
    const auto d_concat = dense_matmul_nt(upstream, model.layers[l]);
    const std::size_t d = cache.inputs[l].cols();
    DenseMatrix<double> d_self(d_concat.rows(), d), d_agg(d_concat.rows(), d);
    for (std::size_t i = 0; i < d_concat.rows(); ++i) {
      auto src = d_concat.row(i);
      std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(d), d_self.row(i).begin());
      std::copy(src.begin() + static_cast<std::ptrdiff_t>(d), src.end(), d_agg.row(i).begin());
    }
    const auto back = spmm_transposed(*cache.adjacency, d_agg);
    for (std::size_t i = 0; i < d_self.size(); ++i) d_self.values()[i] += back.values()[i];
    upstream = std::move(d_self);
  }
  return grads;
}

// Momentum SGD with L2 weight decay:
//   v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
inline void sgd_step(GcnModel& model, const GcnGradients& grads, const TrainConfig& cfg) {
  detail::require(grads.layers.size() == model.layers.size(), "sgd_step: gradient depth mismatch");
  if (model.layer_velocity.size() != model.layers.size()) model.reset_optimizer();
  auto update = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g) {
    detail::require(p.size() == g.size(), "sgd_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = cfg.momentum * v[i] + g[i] + cfg.weight_decay * p[i];
      p[i] -= cfg.learning_rate * v[i];
    }
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    update(model.layers[l].values(), model.layer_velocity[l].values(), grads.layers[l].values());
  update(model.regressor_weight.values(), model.regressor_velocity.values(),
         grads.regressor_weight.values());
  model.bias_velocity = cfg.momentum * model.bias_velocity + grads.regressor_bias +
                        cfg.weight_decay * model.regressor_bias;
  model.regressor_bias -= cfg.learning_rate * model.bias_velocity;
  ++model.generation;
}

}  // namespace gcnclust
