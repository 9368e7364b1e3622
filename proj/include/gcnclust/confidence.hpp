#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "tensor.hpp"

namespace gcnclust {

struct LabelVector {
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::uint32_t operator[](std::size_t i) const noexcept { return labels[i]; }
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

enum class ConfidenceSource { ground_truth, predicted };

// One confidence per vertex. Stored in single precision so that values
// equal up to double-precision round-off compare equal.
struct ConfidenceVector {
  std::vector<float> values;
  ConfidenceSource source = ConfidenceSource::ground_truth;

  std::size_t size() const noexcept { return values.size(); }
  float operator[](std::size_t i) const noexcept { return values[i]; }
  std::vector<double> as_double() const { return {values.begin(), values.end()}; }
};

// Strict total order used wherever "more confident" is asked: higher value
// wins, and the lower vertex id wins a tie.
inline bool outranks(const ConfidenceVector& conf, std::size_t j, std::size_t i) noexcept {
  if (conf[j] != conf[i]) return conf[j] > conf[i];
  return j < i;
}

enum class ConfidenceKind { u_num, u_weight, s_avg, s_center, s_nbr, s_nbr_f };

inline std::string_view to_string(ConfidenceKind k) {
  switch (k) {
    case ConfidenceKind::u_num: return "u_num";
    case ConfidenceKind::u_weight: return "u_weight";
    case ConfidenceKind::s_avg: return "s_avg";
    case ConfidenceKind::s_center: return "s_center";
    case ConfidenceKind::s_nbr: return "s_nbr";
    case ConfidenceKind::s_nbr_f: return "s_nbr_f";
  }
  return "?";
}

inline ConfidenceKind parse_confidence_kind(std::string_view s) {
  for (auto k : {ConfidenceKind::u_num, ConfidenceKind::u_weight, ConfidenceKind::s_avg,
                 ConfidenceKind::s_center, ConfidenceKind::s_nbr, ConfidenceKind::s_nbr_f})
    if (to_string(k) == s) return k;
  throw InputError("unknown confidence kind '" + std::string(s) + "'");
}

// Unsupervised kinds are computed directly on the test graph, no GCN.
inline bool is_unsupervised(ConfidenceKind k) noexcept {
  return k == ConfidenceKind::u_num || k == ConfidenceKind::u_weight;
}

// Signed, affinity-weighted purity of each vertex's directed neighbour list:
//   c_i = 1/|N_i| * sum_j (+a_ij if y_j == y_i else -a_ij)
// Raw (unclamped) cosine affinities; an empty list gives 0.
inline ConfidenceVector ground_truth_confidence(const KnnGraph& g, const LabelVector& labels) {
  detail::require(labels.size() == g.n, "ground_truth_confidence: label count does not match graph");
  ConfidenceVector out{std::vector<float>(g.n, 0.0f), ConfidenceSource::ground_truth};
  for (std::size_t i = 0; i < g.n; ++i) {
    const auto& nbrs = g.neighbors[i];
    if (nbrs.empty()) continue;
    double s = 0.0;
    for (const auto& nb : nbrs) {
      const double a = nb.affinity;
      s += labels[nb.id] == labels[i] ? a : -a;
    }
    out.values[i] = static_cast<float>(s / static_cast<double>(nbrs.size()));
  }
  return out;
}

namespace detail {

inline double dot_rows(const DenseMatrix<double>& x, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t t = 0; t < x.cols(); ++t) s += x(i, t) * x(j, t);
  return s;
}

}  // namespace detail

// Alternative confidence definitions. `radius` is a cosine distance
// (1 - cosine) used by the unsupervised density kinds; `labels` is needed by
// every supervised kind.
inline ConfidenceVector confidence_variant(const KnnGraph& g, const LabelVector* labels,
                                           const DenseMatrix<float>& features, ConfidenceKind kind,
                                           std::optional<double> radius = std::nullopt) {
  const std::size_t n = features.rows();
  detail::require(g.n == n, "confidence_variant: graph and features disagree on vertex count");
  if (is_unsupervised(kind)) {
    detail::require(radius.has_value(), "confidence_variant: radius required for " +
                                            std::string(to_string(kind)));
  } else {
    detail::require(labels != nullptr, "confidence_variant: labels required for " +
                                           std::string(to_string(kind)));
    detail::require(labels->size() == n, "confidence_variant: label count mismatch");
  }
  if (kind == ConfidenceKind::s_nbr || kind == ConfidenceKind::s_nbr_f)
    return ground_truth_confidence(g, *labels);

  const auto x = l2_normalize_rows(features.cast<double>());
  std::vector<double> out(n, 0.0);

  switch (kind) {
    case ConfidenceKind::u_num:
    case ConfidenceKind::u_weight:
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const double cos = detail::dot_rows(x, i, j);
          if (1.0 - cos <= *radius) acc += kind == ConfidenceKind::u_num ? 1.0 : cos;
        }
        out[i] = acc;
      }
      break;
    case ConfidenceKind::s_avg:
    case ConfidenceKind::s_center: {
      std::uint32_t classes = 0;
      for (auto y : labels->labels) classes = std::max(classes, y + 1);
      std::vector<std::size_t> count(classes, 0);
      DenseMatrix<double> sum_norm(classes, x.cols());
      DenseMatrix<double> sum_raw(classes, x.cols());
      for (std::size_t i = 0; i < n; ++i) {
        const auto y = (*labels)[i];
        ++count[y];
        for (std::size_t t = 0; t < x.cols(); ++t) {
          sum_norm(y, t) += x(i, t);
          sum_raw(y, t) += features(i, t);
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto y = (*labels)[i];
        if (kind == ConfidenceKind::s_avg) {
          if (count[y] < 2) continue;  // singleton class: 0
          double s = -detail::dot_rows(x, i, i);
          for (std::size_t t = 0; t < x.cols(); ++t) s += x(i, t) * sum_norm(y, t);
          out[i] = s / static_cast<double>(count[y] - 1);
        } else {
          if (count[y] == 1) {
            out[i] = 1.0;
            continue;
          }
          double dot = 0.0, norm = 0.0;
          for (std::size_t t = 0; t < x.cols(); ++t) {
            dot += x(i, t) * sum_raw(y, t);
            norm += sum_raw(y, t) * sum_raw(y, t);
          }
          out[i] = norm > 0.0 ? dot / std::sqrt(norm) : 0.0;
        }
      }
      break;
    }
    default:
      break;
  }
  ConfidenceVector cv;
  cv.source = is_unsupervised(kind) ? ConfidenceSource::predicted : ConfidenceSource::ground_truth;
  cv.values.assign(out.begin(), out.end());
  return cv;
}

struct TrainResult {
  GcnModel model;
  std::vector<double> loss_history;
};

// Full-batch regression of vertex confidence (mean squared error).
inline TrainResult train_gcnv(GcnModel model, const SparseAdjacency& adj_norm,
                              const DenseMatrix<float>& features, const ConfidenceVector& targets,
                              const TrainConfig& cfg) {
  cfg.validate();
  detail::require(targets.source == ConfidenceSource::ground_truth,
                  "train_gcnv: targets must be ground-truth confidence");
  detail::require(targets.size() == features.rows(), "train_gcnv: target count mismatch");
  const auto x = features.cast<double>();
  const auto t = targets.as_double();
  TrainResult out;
  out.loss_history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto fwd = gcn_forward(model, adj_norm, x);
    out.loss_history.push_back(mse_loss(fwd.predictions, t, LossMode::mean));
    const auto g = mse_loss_grad(fwd.predictions, t, LossMode::mean);
    sgd_step(model, gcn_backward(model, fwd.cache, g), cfg);
  }
  out.model = std::move(model);
  return out;
}

struct ConfidencePrediction {
  ConfidenceVector confidence;
  DenseMatrix<double> embeddings;  // output of the last GCN layer
};

inline ConfidencePrediction predict_confidence(const GcnModel& model, const SparseAdjacency& adj_norm,
                                               const DenseMatrix<float>& features) {
  auto fwd = gcn_forward(model, adj_norm, features);
  ConfidencePrediction out;
  out.confidence.source = ConfidenceSource::predicted;
  out.confidence.values.assign(fwd.predictions.begin(), fwd.predictions.end());
  out.embeddings = std::move(fwd.cache.inputs.back());
  return out;
}

}  // namespace gcnclust
