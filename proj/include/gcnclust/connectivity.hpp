#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "confidence.hpp"
#include "error.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "tensor.hpp"

namespace gcnclust {

// Neighbours of `center` that outrank it in confidence, in descending
// affinity order.
struct CandidateSet {
  std::uint32_t center = 0;
  std::vector<std::uint32_t> members;
  std::vector<float> affinities;

  bool empty() const noexcept { return members.empty(); }
  std::size_t size() const noexcept { return members.size(); }
};

inline CandidateSet candidate_set(std::size_t i, const KnnGraph& g, const ConfidenceVector& conf) {
  detail::require(conf.size() == g.n, "candidate_set: confidence length does not match graph");
  detail::require(i < g.n, "candidate_set: vertex out of range");
  CandidateSet s;
  s.center = static_cast<std::uint32_t>(i);
  for (const auto& nb : g.neighbors[i]) {
    if (outranks(conf, nb.id, i)) {
      s.members.push_back(nb.id);
      s.affinities.push_back(nb.affinity);
    }
  }
  return s;
}

struct Subgraph {
  std::uint32_t center = 0;
  std::vector<std::uint32_t> vertex_ids;
  DenseMatrix<double> features_offset;  // f_j - f_center per member
  SparseAdjacency adjacency;            // induced, normalised with self-loops
};

inline Subgraph build_subgraph(const CandidateSet& s, const KnnGraph& g,
                               const DenseMatrix<float>& features) {
  detail::require(!s.empty(), "build_subgraph: empty candidate set");
  detail::require(features.rows() == g.n, "build_subgraph: feature rows do not match graph");
  Subgraph sub;
  sub.center = s.center;
  sub.vertex_ids = s.members;
  const std::size_t d = features.cols();
  sub.features_offset = DenseMatrix<double>(s.size(), d);
  const auto fc = features.row(s.center);
  for (std::size_t p = 0; p < s.size(); ++p) {
    const auto fj = features.row(s.members[p]);
    for (std::size_t t = 0; t < d; ++t)
      sub.features_offset(p, t) = static_cast<double>(fj[t]) - static_cast<double>(fc[t]);
  }
  sub.adjacency = normalize_with_self_loops(induced_adjacency(g.adjacency, s.members));
  return sub;
}

// 1 where a member shares the centre's label, else 0.
inline std::vector<double> ground_truth_connectivity(const CandidateSet& s, const LabelVector& labels) {
  detail::require(s.center < labels.size(), "ground_truth_connectivity: centre not labelled");
  std::vector<double> r;
  r.reserve(s.size());
  for (auto j : s.members) {
    detail::require(j < labels.size(), "ground_truth_connectivity: member not labelled");
    r.push_back(labels[j] == labels[s.center] ? 1.0 : 0.0);
  }
  return r;
}

struct ConnectivitySample {
  Subgraph subgraph;
  std::vector<double> targets;
};

// One sample per vertex with a nonempty candidate set. Candidate sets come
// from the confidence passed in (ground truth at training time).
inline std::vector<ConnectivitySample> build_connectivity_dataset(const KnnGraph& g,
                                                                  const LabelVector& labels,
                                                                  const DenseMatrix<float>& features,
                                                                  const ConfidenceVector& conf) {
  std::vector<ConnectivitySample> out;
  for (std::size_t i = 0; i < g.n; ++i) {
    auto s = candidate_set(i, g, conf);
    if (s.empty()) continue;
    auto targets = ground_truth_connectivity(s, labels);
    out.push_back({build_subgraph(s, g, features), std::move(targets)});
  }
  return out;
}

// Mini-batch training: each subgraph contributes its summed squared error,
// averaged over the subgraphs of a batch. The loss history holds the mean
// per-subgraph loss seen during each epoch.
inline TrainResult train_gcne(GcnModel model, const std::vector<ConnectivitySample>& dataset,
                              const TrainConfig& cfg) {
  cfg.validate();
  detail::require(!dataset.empty(), "train_gcne: empty dataset");
  for (const auto& s : dataset)
    detail::require(s.subgraph.vertex_ids.size() == s.targets.size() && !s.targets.empty(),
                    "train_gcne: malformed sample");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainResult out;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      auto grads = GcnGradients::zeros_like(model);
      for (std::size_t b = start; b < stop; ++b) {
        const auto& sample = dataset[order[b]];
        auto fwd = gcn_forward(model, sample.subgraph.adjacency, sample.subgraph.features_offset);
        epoch_loss += mse_loss(fwd.predictions, sample.targets, LossMode::sum);
        grads += gcn_backward(model, fwd.cache,
                              mse_loss_grad(fwd.predictions, sample.targets, LossMode::sum, scale));
      }
      sgd_step(model, grads, cfg);
    }
    out.loss_history.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  out.model = std::move(model);
  return out;
}

struct ConnectivityPrediction {
  std::uint32_t center = 0;
  std::vector<std::uint32_t> members;
  std::vector<double> scores;
};

inline ConnectivityPrediction predict_connectivity(const GcnModel& model, const CandidateSet& s,
                                                   const KnnGraph& g,
                                                   const DenseMatrix<float>& features) {
  detail::require(!s.empty(), "predict_connectivity: empty candidate set");
  const auto sub = build_subgraph(s, g, features);
  auto fwd = gcn_forward(model, sub.adjacency, sub.features_offset);
  return {s.center, s.members, std::move(fwd.predictions)};
}

// The ceil(rho * n) most confident vertices, most confident first.
inline std::vector<std::uint32_t> select_top_rho(const ConfidenceVector& conf, double rho) {
  detail::require(rho >= 0.0 && rho <= 1.0, "select_top_rho: rho must be in [0,1]");
  const std::size_t n = conf.size();
  // The small slack keeps products like 0.7 * 10 from rounding up past 7.
  const auto count = std::min(
      n, static_cast<std::size_t>(std::ceil(rho * static_cast<double>(n) - 1e-9)));
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  auto better = [&conf](std::uint32_t a, std::uint32_t b) { return outranks(conf, a, b); };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count), ids.end(), better);
  ids.resize(count);
  return ids;
}

// GCN-E scores for every vertex of `vertices` that has a nonempty candidate set.
inline std::vector<ConnectivityPrediction> predict_connectivity_for(
    const GcnModel& model, std::span<const std::uint32_t> vertices, const KnnGraph& g,
    const DenseMatrix<float>& features, const ConfidenceVector& conf) {
  std::vector<ConnectivityPrediction> out;
  for (auto v : vertices) {
    auto s = candidate_set(v, g, conf);
    if (s.empty()) continue;
    out.push_back(predict_connectivity(model, s, g, features));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.center < b.center; });
  return out;
}

}  // namespace gcnclust
