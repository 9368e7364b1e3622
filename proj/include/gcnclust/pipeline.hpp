#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confidence.hpp"
#include "config.hpp"
#include "connectivity.hpp"
#include "error.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "metrics.hpp"
#include "partition.hpp"
#include "synthetic.hpp"
#include "tensor.hpp"

namespace gcnclust {

namespace detail {

template <typename F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline std::size_t hidden_width(const PipelineConfig& cfg, std::size_t input_dim) {
  return cfg.hidden == 0 ? input_dim : cfg.hidden;
}

}  // namespace detail

struct TrainedModels {
  std::optional<GcnModel> gcnv;  // absent for unsupervised confidence kinds
  std::optional<GcnModel> gcne;  // absent when rho == 0
  std::vector<double> gcnv_loss;
  std::vector<double> gcne_loss;
};

inline TrainConfig with_seed(TrainConfig t, std::uint64_t seed) {
  t.seed = seed;
  return t;
}

inline GcnModel train_confidence_model(const PipelineConfig& cfg, const KnnGraph& g,
                                       const DenseMatrix<float>& features, const LabelVector& labels,
                                       std::vector<double>* loss = nullptr) {
  auto targets = confidence_variant(g, &labels, features, cfg.confidence_kind, cfg.radius);
  const auto d = features.cols();
  auto model = GcnModel::create(d, cfg.gcnv_layers, detail::hidden_width(cfg, d),
                                derive_seed(cfg.seed, "gcnv-init"));
  auto res = train_gcnv(std::move(model), normalized_adjacency(g), features, targets,
                        with_seed(cfg.train_v, derive_seed(cfg.seed, "gcnv-train")));
  if (loss) *loss = std::move(res.loss_history);
  return std::move(res.model);
}

inline GcnModel train_connectivity_model(const PipelineConfig& cfg, const KnnGraph& g,
                                         const DenseMatrix<float>& features,
                                         const LabelVector& labels,
                                         std::vector<double>* loss = nullptr) {
  const auto gt = ground_truth_confidence(g, labels);
  const auto dataset = build_connectivity_dataset(g, labels, features, gt);
  const auto d = features.cols();
  auto model = GcnModel::create(d, cfg.gcne_layers, detail::hidden_width(cfg, d),
                                derive_seed(cfg.seed, "gcne-init"));
  auto res = train_gcne(std::move(model), dataset,
                        with_seed(cfg.train_e, derive_seed(cfg.seed, "gcne-train")));
  if (loss) *loss = std::move(res.loss_history);
  return std::move(res.model);
}

// Trains GCN-V (unless the confidence kind is unsupervised) and, when
// rho > 0, GCN-E on a labelled training split.
inline TrainedModels train_models(const PipelineConfig& cfg, const DenseMatrix<float>& features,
                                  const LabelVector& labels) {
  cfg.validate();
  detail::stage("input", [&] {
    detail::require(features.rows() == labels.size(),
                    "training features and labels differ in length");
    detail::require(features.rows() >= 2, "need at least two training vertices");
    return 0;
  });
  TrainedModels out;
  const auto g = detail::stage("build-graph", [&] { return build_knn_graph(features, cfg.k); });
  if (!is_unsupervised(cfg.confidence_kind)) {
    out.gcnv = detail::stage("train-v", [&] {
      return train_confidence_model(cfg, g, features, labels, &out.gcnv_loss);
    });
  }
  if (cfg.rho > 0.0) {
    out.gcne = detail::stage("train-e", [&] {
      return train_connectivity_model(cfg, g, features, labels, &out.gcne_loss);
    });
  }
  return out;
}

// Everything the inference half of the pipeline produced.
struct ClusteringResult {
  ClusterAssignment clusters;
  ConfidenceVector confidence;
  KnnGraph link_graph;  // the graph links were chosen on
  std::vector<ConnectivityPrediction> predictions;
  std::vector<LinkChoice> links;
};

// Per-test-set state that does not depend on tau or m, so partitions for
// several of those settings can share one inference pass.
struct InferenceState {
  ConfidenceVector confidence;
  KnnGraph link_graph;
  std::vector<std::uint32_t> rho_set;
  std::vector<ConnectivityPrediction> predictions;
};

inline InferenceState infer(const PipelineConfig& cfg, const TrainedModels& models,
                            const DenseMatrix<float>& features) {
  cfg.validate();
  InferenceState st;
  auto g = detail::stage("build-graph", [&] {
    detail::require(features.rows() >= 1, "no test vertices");
    return build_knn_graph(features, cfg.k);
  });
  if (is_unsupervised(cfg.confidence_kind)) {
    st.confidence = detail::stage("infer-v", [&] {
      return confidence_variant(g, nullptr, features, cfg.confidence_kind, cfg.radius);
    });
    st.link_graph = std::move(g);
  } else {
    detail::require(models.gcnv.has_value(), "infer: GCN-V model missing");
    auto pred = detail::stage("infer-v", [&] {
      return predict_confidence(*models.gcnv, normalized_adjacency(g), features);
    });
    st.confidence = std::move(pred.confidence);
    if (cfg.confidence_kind == ConfidenceKind::s_nbr_f) {
      st.link_graph = detail::stage("rebuild-graph", [&] { return rebuild_graph(pred.embeddings, cfg.k); });
    } else {
      st.link_graph = std::move(g);
    }
  }
  if (cfg.rho > 0.0) {
    detail::require(models.gcne.has_value(), "infer: GCN-E model missing");
    st.rho_set = select_top_rho(st.confidence, cfg.rho);
    st.predictions = detail::stage("infer-e", [&] {
      return predict_connectivity_for(*models.gcne, st.rho_set, st.link_graph, features,
                                      st.confidence);
    });
  }
  return st;
}

inline ClusterAssignment partition_clusters(const InferenceState& st, std::size_t m, double tau,
                                            std::vector<LinkChoice>* links_out = nullptr) {
  return detail::stage("partition", [&] {
    auto links = choose_links(st.link_graph, st.confidence, st.predictions, st.rho_set, m, tau);
    auto clusters = extract_clusters(links, st.link_graph.n);
    if (links_out) *links_out = std::move(links);
    return clusters;
  });
}

inline ClusteringResult cluster(const PipelineConfig& cfg, const TrainedModels& models,
                                const DenseMatrix<float>& features) {
  auto st = infer(cfg, models, features);
  ClusteringResult out;
  out.clusters = partition_clusters(st, cfg.m, cfg.tau, &out.links);
  out.confidence = std::move(st.confidence);
  out.link_graph = std::move(st.link_graph);
  out.predictions = std::move(st.predictions);
  return out;
}

// Picks the tau maximising pairwise F on a labelled split (normally the
// training split). Ties go to the smaller tau.
inline double tune_tau(const PipelineConfig& cfg, const TrainedModels& models,
                       const DenseMatrix<float>& features, const LabelVector& labels,
                       std::span<const double> candidates) {
  detail::require(!candidates.empty(), "tune_tau: no candidate thresholds");
  const auto st = infer(cfg, models, features);
  double best_tau = candidates.front();
  double best_f = -1.0;
  for (double tau : candidates) {
    const double f = pairwise_fscore(partition_clusters(st, cfg.m, tau), labels).f;
    if (f > best_f) {
      best_f = f;
      best_tau = tau;
    }
  }
  return best_tau;
}

struct PipelineResult {
  ClusteringResult clustering;
  std::optional<ScoreReport> report;
  TrainedModels models;
};

// Build graph, train and apply GCN-V (and GCN-E when rho > 0), link, extract
// clusters, and score against test labels when given.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const DenseMatrix<float>& train_features,
                                   const LabelVector& train_labels,
                                   const DenseMatrix<float>& test_features,
                                   const LabelVector* test_labels = nullptr) {
  PipelineResult out;
  out.models = train_models(cfg, train_features, train_labels);
  out.clustering = cluster(cfg, out.models, test_features);
  if (test_labels) {
    out.report = detail::stage("evaluate", [&] { return evaluate(out.clustering.clusters, *test_labels); });
  }
  return out;
}

}  // namespace gcnclust
