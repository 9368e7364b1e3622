#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include "error.hpp"
#include "tensor.hpp"

namespace gcnclust {

struct Neighbor {
  std::uint32_t id = 0;
  float affinity = 0.0f;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Higher affinity first, lower vertex id on ties.
inline bool neighbor_before(const Neighbor& a, const Neighbor& b) noexcept {
  if (a.affinity != b.affinity) return a.affinity > b.affinity;
  return a.id < b.id;
}

// Directed K-nearest-neighbour lists plus their symmetrised affinity matrix.
// Neighbour affinities are raw cosine values; the adjacency clamps negatives
// to zero.
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::vector<Neighbor>> neighbors;
  SparseAdjacency adjacency;

  // Builds the symmetric adjacency as the union of the directed lists.
  static KnnGraph from_neighbors(std::size_t n, std::size_t k,
                                 std::vector<std::vector<Neighbor>> lists) {
    detail::require(lists.size() == n, "KnnGraph: expected one neighbour list per vertex");
    std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges;
    for (std::size_t i = 0; i < n; ++i) {
      detail::require(lists[i].size() <= k, "KnnGraph: neighbour list longer than k");
      for (const auto& nb : lists[i]) {
        detail::require(nb.id < n && nb.id != i, "KnnGraph: invalid neighbour id");
        const double v = std::max(0.0, static_cast<double>(nb.affinity));
        edges.emplace_back(static_cast<std::uint32_t>(i), nb.id, v);
        edges.emplace_back(nb.id, static_cast<std::uint32_t>(i), v);
      }
    }
    std::sort(edges.begin(), edges.end());
    std::vector<std::uint64_t> offsets(n + 1, 0);
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    cols.reserve(edges.size());
    vals.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& [r, c, v] = edges[e];
      if (!cols.empty() && e > 0 && std::get<0>(edges[e - 1]) == r &&
          std::get<1>(edges[e - 1]) == c) {
        vals.back() = std::max(vals.back(), v);
        continue;
      }
      cols.push_back(c);
      vals.push_back(v);
      ++offsets[r + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    KnnGraph g;
    g.n = n;
    g.k = k;
    g.neighbors = std::move(lists);
    g.adjacency = SparseAdjacency(n, std::move(offsets), std::move(cols), std::move(vals), true);
    return g;
  }
};

// Exact brute-force cosine KNN. Rows are L2-normalised first.
inline KnnGraph build_knn_graph(const DenseMatrix<float>& features, std::size_t k) {
  detail::require(k > 0, "build_knn_graph: k must be positive");
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const auto x = l2_normalize_rows(features);

  // Transposed copy so the inner loop runs contiguously over candidates.
  std::vector<float> xt(d * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) xt[t * n + i] = x(i, t);

  const std::size_t list_len = n == 0 ? 0 : std::min(k, n - 1);
  std::vector<std::vector<Neighbor>> lists(n);
  std::vector<float> sims(n);
  std::vector<Neighbor> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sims.begin(), sims.end(), 0.0f);
    const float* xi = x.data() + i * d;
    for (std::size_t t = 0; t < d; ++t) {
      const float s = xi[t];
      const float* col = xt.data() + t * n;
      for (std::size_t j = 0; j < n; ++j) sims[j] += s * col[j];
    }
    pool.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      pool.push_back({static_cast<std::uint32_t>(j), std::clamp(sims[j], -1.0f, 1.0f)});
    }
    auto mid = pool.begin() + static_cast<std::ptrdiff_t>(list_len);
    std::nth_element(pool.begin(), mid, pool.end(), neighbor_before);
    std::sort(pool.begin(), mid, neighbor_before);
    lists[i].assign(pool.begin(), mid);
  }
  return KnnGraph::from_neighbors(n, k, std::move(lists));
}

// KNN graph over learned embeddings instead of the input features.
template <typename T>
KnnGraph rebuild_graph(const DenseMatrix<T>& embeddings, std::size_t k) {
  if constexpr (std::is_same_v<T, float>) {
    return build_knn_graph(embeddings, k);
  } else {
    return build_knn_graph(embeddings.template cast<float>(), k);
  }
}

// D^-1 (A + I): adds a unit self-loop to every row and divides by the row sum.
// Negative entries are clamped to zero.
inline SparseAdjacency normalize_with_self_loops(const SparseAdjacency& a) {
  const std::size_t n = a.n();
  std::vector<std::uint64_t> offsets(n + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  cols.reserve(a.nnz() + n);
  vals.reserve(a.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = cols.size();
    bool placed_diag = false;
    auto rc = a.row_cols(i);
    auto rv = a.row_values(i);
    for (std::size_t e = 0; e < rc.size(); ++e) {
      if (!placed_diag && rc[e] >= i) {
        if (rc[e] == i) {
          cols.push_back(rc[e]);
          vals.push_back(1.0 + std::max(0.0, rv[e]));
          placed_diag = true;
          continue;
        }
        cols.push_back(static_cast<std::uint32_t>(i));
        vals.push_back(1.0);
        placed_diag = true;
      }
      cols.push_back(rc[e]);
      vals.push_back(std::max(0.0, rv[e]));
    }
    if (!placed_diag) {
      cols.push_back(static_cast<std::uint32_t>(i));
      vals.push_back(1.0);
    }
    double sum = 0.0;
    for (std::size_t e = start; e < cols.size(); ++e) sum += vals[e];
    for (std::size_t e = start; e < cols.size(); ++e) vals[e] /= sum;
    offsets[i + 1] = cols.size();
  }
  return SparseAdjacency(n, std::move(offsets), std::move(cols), std::move(vals), false);
}

inline SparseAdjacency normalized_adjacency(const KnnGraph& g) {
  return normalize_with_self_loops(g.adjacency);
}

// Adjacency restricted to `members`; local index p stands for members[p].
inline SparseAdjacency induced_adjacency(const SparseAdjacency& a,
                                         std::span<const std::uint32_t> members) {
  const std::size_t m = members.size();
  std::vector<std::uint64_t> offsets(m + 1, 0);
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t p = 0; p < m; ++p) {
    row.clear();
    for (std::size_t q = 0; q < m; ++q) {
      if (p != q && a.contains(members[p], members[q]))
        row.emplace_back(static_cast<std::uint32_t>(q), a.at(members[p], members[q]));
    }
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    offsets[p + 1] = cols.size();
  }
  return SparseAdjacency(m, std::move(offsets), std::move(cols), std::move(vals), a.symmetric());
}

}  // namespace gcnclust
