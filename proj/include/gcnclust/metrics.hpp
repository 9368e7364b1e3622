#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "confidence.hpp"
#include "error.hpp"
#include "partition.hpp"

namespace gcnclust {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline double harmonic_mean(double p, double r) noexcept {
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

namespace detail {

struct Contingency {
  // Ordered maps fix the accumulation order, so swapping the two labelings
  // swaps precision and recall bit for bit.
  std::map<std::uint32_t, std::uint64_t> pred_sizes;
  std::map<std::uint32_t, std::uint64_t> gt_sizes;
  std::unordered_map<std::uint64_t, std::uint64_t> cells;  // (pred << 32 | gt) -> count
};

inline Contingency contingency(std::span<const std::uint32_t> pred,
                               std::span<const std::uint32_t> gt) {
  require(pred.size() == gt.size(), "metrics: prediction has " + std::to_string(pred.size()) +
                                        " labels but ground truth has " + std::to_string(gt.size()));
  Contingency c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++c.pred_sizes[pred[i]];
    ++c.gt_sizes[gt[i]];
    ++c.cells[(std::uint64_t{pred[i]} << 32) | gt[i]];
  }
  return c;
}

inline double pairs(std::uint64_t k) noexcept {
  return static_cast<double>(k * (k - 1) / 2);
}

}  // namespace detail

// Precision/recall over unordered same-cluster pairs, from the contingency
// table rather than pair enumeration.
inline PrecisionRecall pairwise_fscore(std::span<const std::uint32_t> pred,
                                       std::span<const std::uint32_t> gt) {
  detail::require(pred.size() >= 2, "pairwise_fscore: need at least two vertices");
  const auto c = detail::contingency(pred, gt);
  double together_both = 0.0, together_pred = 0.0, together_gt = 0.0;
  std::uint64_t both = 0;
  for (const auto& [key, k] : c.cells) both += k * (k - 1) / 2;
  together_both = static_cast<double>(both);
  for (const auto& [key, k] : c.pred_sizes) together_pred += detail::pairs(k);
  for (const auto& [key, k] : c.gt_sizes) together_gt += detail::pairs(k);
  PrecisionRecall out;
  out.precision = together_pred > 0.0 ? together_both / together_pred : 0.0;
  out.recall = together_gt > 0.0 ? together_both / together_gt : 0.0;
  out.f = harmonic_mean(out.precision, out.recall);
  return out;
}

// Per-vertex precision |C ∩ L| / |C| and recall |C ∩ L| / |L|, averaged.
inline PrecisionRecall bcubed_fscore(std::span<const std::uint32_t> pred,
                                     std::span<const std::uint32_t> gt) {
  detail::require(!pred.empty(), "bcubed_fscore: need at least one vertex");
  const auto c = detail::contingency(pred, gt);
  // Integer sums of squared overlaps per cluster, then one division each.
  std::map<std::uint32_t, std::uint64_t> sq_pred, sq_gt;
  for (const auto& [key, k] : c.cells) {
    sq_pred[static_cast<std::uint32_t>(key >> 32)] += k * k;
    sq_gt[static_cast<std::uint32_t>(key & 0xffffffffu)] += k * k;
  }
  double p = 0.0, r = 0.0;
  for (const auto& [id, sq] : sq_pred)
    p += static_cast<double>(sq) / static_cast<double>(c.pred_sizes.at(id));
  for (const auto& [id, sq] : sq_gt)
    r += static_cast<double>(sq) / static_cast<double>(c.gt_sizes.at(id));
  const double n = static_cast<double>(pred.size());
  PrecisionRecall out{p / n, r / n, 0.0};
  out.f = harmonic_mean(out.precision, out.recall);
  return out;
}

inline PrecisionRecall pairwise_fscore(const ClusterAssignment& pred, const LabelVector& gt) {
  return pairwise_fscore(pred.labels, gt.labels);
}
inline PrecisionRecall bcubed_fscore(const ClusterAssignment& pred, const LabelVector& gt) {
  return bcubed_fscore(pred.labels, gt.labels);
}

struct ScoreReport {
  PrecisionRecall pairwise;
  PrecisionRecall bcubed;
  std::size_t num_pred_clusters = 0;
  std::size_t num_gt_clusters = 0;

  // Single-line key=value record.
  std::string to_record() const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "pairwise_precision=%.6f pairwise_recall=%.6f pairwise_f=%.6f "
                  "bcubed_precision=%.6f bcubed_recall=%.6f bcubed_f=%.6f "
                  "num_pred_clusters=%zu num_gt_clusters=%zu",
                  pairwise.precision, pairwise.recall, pairwise.f, bcubed.precision,
                  bcubed.recall, bcubed.f, num_pred_clusters, num_gt_clusters);
    return buf;
  }

  std::string to_table() const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "metric     precision    recall         F\n"
                  "pairwise   %9.4f %9.4f %9.4f\n"
                  "bcubed     %9.4f %9.4f %9.4f\n"
                  "clusters   predicted %zu, ground truth %zu\n",
                  pairwise.precision, pairwise.recall, pairwise.f, bcubed.precision,
                  bcubed.recall, bcubed.f, num_pred_clusters, num_gt_clusters);
    return buf;
  }
};

inline ScoreReport evaluate(const ClusterAssignment& pred, const LabelVector& gt) {
  ScoreReport r;
  r.pairwise = pairwise_fscore(pred, gt);
  r.bcubed = bcubed_fscore(pred, gt);
  r.num_pred_clusters = pred.num_clusters;
  std::vector<std::uint32_t> distinct(gt.labels);
  std::sort(distinct.begin(), distinct.end());
  r.num_gt_clusters = static_cast<std::size_t>(
      std::unique(distinct.begin(), distinct.end()) - distinct.begin());
  return r;
}

}  // namespace gcnclust
