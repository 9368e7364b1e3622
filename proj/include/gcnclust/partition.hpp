#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "confidence.hpp"
#include "connectivity.hpp"
#include "error.hpp"
#include "graph.hpp"

namespace gcnclust {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }

  std::uint32_t find(std::uint32_t x) {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const auto next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  bool unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct LinkChoice {
  std::uint32_t source = 0;
  std::vector<std::uint32_t> targets;
  std::vector<double> scores;  // ranking key: affinity or predicted connectivity
};

struct ClusterAssignment {
  std::vector<std::uint32_t> labels;
  std::size_t num_clusters = 0;

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

// Every vertex keeps up to `m` outranking neighbours whose affinity is at
// least `tau`. Vertices in `rho_set` that have a GCN-E prediction rank those
// neighbours by predicted connectivity, all others by affinity. Vertices with
// nothing left after filtering emit no links and become roots.
inline std::vector<LinkChoice> choose_links(const KnnGraph& g, const ConfidenceVector& conf,
                                            std::span<const ConnectivityPrediction> preds,
                                            std::span<const std::uint32_t> rho_set, std::size_t m,
                                            double tau) {
  detail::require(m >= 1, "choose_links: m must be >= 1");
  detail::require(tau >= -1.0 && tau <= 1.0, "choose_links: tau must be in [-1,1]");
  detail::require(conf.size() == g.n, "choose_links: confidence length does not match graph");

  std::vector<bool> in_rho(g.n, false);
  for (auto v : rho_set) {
    detail::require(v < g.n, "choose_links: rho vertex out of range");
    in_rho[v] = true;
  }
  std::unordered_map<std::uint32_t, const ConnectivityPrediction*> by_center;
  for (const auto& p : preds) by_center[p.center] = &p;

  struct Ranked {
    std::uint32_t id;
    double score;
  };
  std::vector<LinkChoice> out;
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < g.n; ++i) {
    const ConnectivityPrediction* pred = nullptr;
    if (in_rho[i]) {
      auto it = by_center.find(static_cast<std::uint32_t>(i));
      if (it != by_center.end()) pred = it->second;
    }
    ranked.clear();
    for (const auto& nb : g.neighbors[i]) {
      if (!outranks(conf, nb.id, i) || static_cast<double>(nb.affinity) < tau) continue;
      double score = nb.affinity;
      if (pred != nullptr) {
        auto pos = std::find(pred->members.begin(), pred->members.end(), nb.id);
        score = pos == pred->members.end()
                    ? -std::numeric_limits<double>::infinity()
                    : pred->scores[static_cast<std::size_t>(pos - pred->members.begin())];
      }
      ranked.push_back({nb.id, score});
    }
    if (ranked.empty()) continue;
    const auto keep = std::min(m, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                      ranked.end(), [](const Ranked& a, const Ranked& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return a.id < b.id;
                      });
    LinkChoice link;
    link.source = static_cast<std::uint32_t>(i);
    for (std::size_t r = 0; r < keep; ++r) {
      link.targets.push_back(ranked[r].id);
      link.scores.push_back(ranked[r].score);
    }
    out.push_back(std::move(link));
  }
  return out;
}

// Weakly connected components of the link graph, numbered in order of their
// smallest vertex id.
inline ClusterAssignment extract_clusters(std::span<const LinkChoice> links, std::size_t n) {
  DisjointSets sets(n);
  for (const auto& link : links) {
    detail::require(link.source < n, "extract_clusters: source out of range");
    for (auto t : link.targets) {
      detail::require(t < n, "extract_clusters: target out of range");
      sets.unite(link.source, t);
    }
  }
  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> root_label(n, unset);
  ClusterAssignment out;
  out.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto r = sets.find(i);
    if (root_label[r] == unset) root_label[r] = static_cast<std::uint32_t>(out.num_clusters++);
    out.labels[i] = root_label[r];
  }
  return out;
}

}  // namespace gcnclust
