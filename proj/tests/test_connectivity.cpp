#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace gcnclust;

namespace {

ConfidenceVector random_confidence(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ConfidenceVector c;
  for (std::size_t i = 0; i < n; ++i) c.values.push_back(u(rng));
  return c;
}

}  // namespace

TEST(CandidateSet, LocalMaximumIsEmpty) {
  auto g = KnnGraph::from_neighbors(3, 2, {{{1, 0.9f}, {2, 0.5f}}, {{0, 0.9f}}, {{0, 0.5f}}});
  ConfidenceVector c{{0.9f, 0.1f, 0.2f}};
  EXPECT_TRUE(candidate_set(0, g, c).empty());
}

TEST(CandidateSet, AllNeighboursMoreConfident) {
  auto g = KnnGraph::from_neighbors(3, 2, {{{1, 0.9f}, {2, 0.5f}}, {{0, 0.9f}}, {{0, 0.5f}}});
  ConfidenceVector c{{0.0f, 0.1f, 0.2f}};
  auto s = candidate_set(0, g, c);
  EXPECT_EQ(s.members, (std::vector<std::uint32_t>{1, 2}));
  EXPECT_EQ(s.affinities, (std::vector<float>{0.9f, 0.5f}));
}

TEST(CandidateSet, MatchesFilterLoop) {
  std::mt19937_64 rng(41);
  auto g = oracle::random_graph(40, 6, rng);
  auto c = random_confidence(40, rng);
  for (std::size_t i = 0; i < 40; ++i) {
    std::vector<std::uint32_t> want;
    for (const auto& nb : g.neighbors[i])
      if (c[nb.id] > c[i]) want.push_back(nb.id);
    EXPECT_EQ(candidate_set(i, g, c).members, want);
  }
}

TEST(BuildSubgraph, IdenticalMemberHasZeroOffset) {
  DenseMatrix<float> f{{0.5f, 0.5f}, {0.5f, 0.5f}};
  auto g = build_knn_graph(f, 1);
  CandidateSet s{0, {1}, {1.0f}};
  auto sub = build_subgraph(s, g, f);
  EXPECT_EQ(sub.features_offset, DenseMatrix<double>(1, 2));
  EXPECT_EQ(sub.adjacency.densify(), (DenseMatrix<double>{{1.0}}));
}

TEST(BuildSubgraph, AdjacencyMatchesEdgeFilter) {
  std::mt19937_64 rng(42);
  auto g = oracle::random_graph(30, 8, rng, 0.0f, 1.0f);
  auto f = oracle::random_features(30, 4, rng);
  CandidateSet s{7, {2, 11, 19, 23, 5}, {}};
  auto sub = build_subgraph(s, g, f);
  // Filter the global edge list down to member pairs, then normalise densely.
  DenseMatrix<double> want(5, 5);
  for (std::size_t p = 0; p < 5; ++p) {
    for (std::size_t q = 0; q < 5; ++q)
      for (const auto& nb : g.neighbors[s.members[p]])
        if (nb.id == s.members[q]) {
          want(p, q) = std::max(want(p, q), double(nb.affinity));
          want(q, p) = std::max(want(q, p), double(nb.affinity));
        }
  }
  for (std::size_t p = 0; p < 5; ++p) {
    want(p, p) = 1.0;
    double sum = 0.0;
    for (std::size_t q = 0; q < 5; ++q) sum += want(p, q);
    for (std::size_t q = 0; q < 5; ++q) want(p, q) /= sum;
  }
  auto got = sub.adjacency.densify();
  for (std::size_t i = 0; i < 25; ++i) EXPECT_NEAR(got.values()[i], want.values()[i], 1e-12);
  for (std::size_t p = 0; p < 5; ++p)
    for (std::size_t t = 0; t < 4; ++t)
      EXPECT_EQ(sub.features_offset(p, t), double(f(s.members[p], t)) - double(f(7, t)));
}

TEST(GroundTruthConnectivity, Cases) {
  LabelVector l{{1, 1, 1, 2, 2}};
  EXPECT_EQ(ground_truth_connectivity(CandidateSet{0, {1, 2}, {}}, l), (std::vector<double>{1, 1}));
  EXPECT_EQ(ground_truth_connectivity(CandidateSet{0, {3, 4}, {}}, l), (std::vector<double>{0, 0}));
  std::mt19937_64 rng(43);
  auto r = oracle::random_labels(20, 3, rng);
  CandidateSet s{4, {0, 1, 2, 3, 5, 9, 19}, {}};
  auto got = ground_truth_connectivity(s, r);
  for (std::size_t p = 0; p < s.size(); ++p) EXPECT_EQ(got[p], r[s.members[p]] == r[4] ? 1.0 : 0.0);
}

TEST(TrainGcne, ZeroModelOnOwnOutputsKeepsConstantLoss) {
  auto m = GcnModel::create(2, 1, 2, 0);
  for (auto& v : m.layers[0].values()) v = 0.0;
  for (auto& v : m.regressor_weight.values()) v = 0.0;
  m.regressor_bias = 0.4;
  DenseMatrix<float> f{{0, 0}, {1, 0}, {0, 1}};
  auto g = build_knn_graph(f, 2);
  CandidateSet s{0, {1, 2}, {}};
  std::vector<ConnectivitySample> ds{{build_subgraph(s, g, f), {0.4, 0.4}}};
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.weight_decay = 0.0;
  auto r = train_gcne(m, ds, cfg);
  for (double v : r.loss_history) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.model.regressor_bias, 0.4);
}

// Members close to the centre are positives, far ones negatives.
TEST(TrainGcne, SeparableToyDataset) {
  std::mt19937_64 rng(44);
  std::normal_distribution<float> small(0.0f, 0.05f);
  std::uniform_real_distribution<float> big(1.0f, 2.0f);
  std::vector<ConnectivitySample> ds;
  for (int s = 0; s < 64; ++s) {
    const std::size_t n = 4;
    DenseMatrix<double> off(n, 3);
    std::vector<double> t(n);
    for (std::size_t p = 0; p < n; ++p) {
      const bool near = (s + p) % 2 == 0;
      for (std::size_t q = 0; q < 3; ++q) off(p, q) = near ? small(rng) : big(rng);
      t[p] = near ? 1.0 : 0.0;
    }
    Subgraph sub;
    sub.vertex_ids = {0, 1, 2, 3};
    sub.features_offset = off;
    sub.adjacency = SparseAdjacency::identity(n);
    ds.push_back({std::move(sub), t});
  }
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.02;
  auto r = train_gcne(GcnModel::create(3, 2, 8, 5), ds, cfg);
  EXPECT_LT(r.loss_history.back() / 4.0, 0.05);
}

TEST(TrainGcne, SubgraphGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(45);
  auto g = oracle::random_graph(20, 6, rng, 0.0f, 1.0f);
  auto f = oracle::random_features(20, 4, rng);
  auto sub = build_subgraph(CandidateSet{3, {1, 8, 12, 15}, {}}, g, f);
  for (int rep = 0; rep < 5; ++rep) {
    auto m = GcnModel::create(4, 2, 5, rng());
    if (oracle::min_abs_preactivation(m, sub.adjacency, sub.features_offset) < 1e-3) continue;
    auto r = oracle::finite_difference_check(m, sub.adjacency, sub.features_offset, {1, 0, 1, 0});
    EXPECT_EQ(r.failed, 0u);
  }
}

TEST(PredictConnectivity, ZeroModelScoresEqualBias) {
  auto m = GcnModel::create(2, 2, 3, 0);
  for (auto& w : m.layers)
    for (auto& v : w.values()) v = 0.0;
  for (auto& v : m.regressor_weight.values()) v = 0.0;
  m.regressor_bias = 0.7;
  std::mt19937_64 rng(46);
  auto f = oracle::random_features(6, 2, rng);
  auto g = build_knn_graph(f, 3);
  CandidateSet s{0, {}, {}};
  for (const auto& nb : g.neighbors[0]) s.members.push_back(nb.id);
  auto p = predict_connectivity(m, s, g, f);
  for (double v : p.scores) EXPECT_EQ(v, 0.7);
}

TEST(PredictConnectivity, SingleMemberMatchesEngine) {
  std::mt19937_64 rng(47);
  auto f = oracle::random_features(5, 3, rng);
  auto g = build_knn_graph(f, 2);
  auto m = GcnModel::create(3, 2, 4, 6);
  CandidateSet s{2, {g.neighbors[2][0].id}, {}};
  auto p = predict_connectivity(m, s, g, f);
  DenseMatrix<double> off(1, 3);
  for (std::size_t t = 0; t < 3; ++t) off(0, t) = double(f(s.members[0], t)) - double(f(2, t));
  EXPECT_EQ(p.scores, gcn_forward(m, SparseAdjacency::identity(1), off).predictions);
}

TEST(PredictConnectivity, PermutingMembersPermutesScores) {
  std::mt19937_64 rng(48);
  auto f = oracle::random_features(25, 4, rng);
  auto g = build_knn_graph(f, 6);
  auto m = GcnModel::create(4, 3, 5, 7);
  CandidateSet s{0, {}, {}};
  for (const auto& nb : g.neighbors[0]) s.members.push_back(nb.id);
  auto base = predict_connectivity(m, s, g, f);
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  CandidateSet t{0, {}, {}};
  for (auto p : perm) t.members.push_back(s.members[p]);
  auto moved = predict_connectivity(m, t, g, f);
  for (std::size_t q = 0; q < perm.size(); ++q) EXPECT_NEAR(moved.scores[q], base.scores[perm[q]], 1e-12);
}

TEST(SelectTopRho, Cases) {
  std::mt19937_64 rng(49);
  auto c = random_confidence(10, rng);
  EXPECT_TRUE(select_top_rho(c, 0.0).empty());
  EXPECT_EQ(select_top_rho(c, 1.0).size(), 10u);
  std::vector<std::uint32_t> ids(10);
  std::iota(ids.begin(), ids.end(), 0u);
  std::sort(ids.begin(), ids.end(), [&](auto a, auto b) { return c[a] > c[b]; });
  ids.resize(5);
  EXPECT_EQ(select_top_rho(c, 0.5), ids);
  EXPECT_EQ(select_top_rho(c, 0.7).size(), 7u);
  EXPECT_EQ(select_top_rho(c, 0.71).size(), 8u);
  EXPECT_THROW(select_top_rho(c, 1.5), InputError);
}
