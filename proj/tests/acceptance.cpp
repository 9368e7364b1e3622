// Acceptance runner: one PASS/FAIL line per criterion, exit status is the
// number of failures.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace gcnclust;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and protocol constants.
constexpr double kFdEpsilon = 1e-4;
constexpr double kFdRelTol = 1e-4;
constexpr double kFdAbsTol = 1e-6;
constexpr double kKinkMargin = 1e-3;
constexpr double kMetricTol = 1e-12;
constexpr double kNoisySigma = 0.14;
constexpr double kMinOneNn = 0.99;
constexpr double kModeVTarget = 0.90;
constexpr double kVeSlack = 0.01;
constexpr double kRhoSlack = 0.005;
constexpr double kMaxSlope = 1.3;
constexpr double kGradSeconds = 30.0;
constexpr double kNoisySeconds = 600.0;
constexpr double kMinSpearman = 0.8;

int failures = 0;

void verdict(const char* id, bool ok, const std::string& detail) {
  std::printf("[%s] %s %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void gradient_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> n_dist(1, 10), w_dist(1, 8), depth_dist(1, 4);
  std::size_t configs = 0, entries = 0, bad = 0, resampled = 0;
  double worst = 0.0;
  while (configs < 24) {
    const auto n = n_dist(rng), d = w_dist(rng), depth = depth_dist(rng);
    std::vector<std::size_t> widths(depth);
    for (auto& w : widths) w = w_dist(rng);
    auto g = oracle::random_graph(n, std::min<std::size_t>(4, n - 1), rng, 0.0f, 1.0f);
    auto adj = normalized_adjacency(g);
    auto x = oracle::random_matrix(n, d, rng);
    auto m = GcnModel::create(d, widths, rng());
    m.regressor_bias = 0.2;
    if (oracle::min_abs_preactivation(m, adj, x) < kKinkMargin) {
      ++resampled;
      continue;
    }
    std::vector<double> t(n);
    for (auto& v : t) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    auto r = oracle::finite_difference_check(m, adj, x, t, kFdEpsilon, kFdRelTol, kFdAbsTol);
    entries += r.checked;
    bad += r.failed;
    worst = std::max(worst, r.worst_rel);
    ++configs;
  }
  const double secs = seconds_since(t0);
  verdict("C1 gradient oracle", bad == 0 && secs < kGradSeconds,
          fmt("configs=%zu entries=%zu mismatches=%zu worst_rel=%.2e resampled=%zu time=%.2fs",
              configs, entries, bad, worst, resampled, secs));
}

void confidence_oracle() {
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<std::size_t> n_dist(2, 50), k_dist(1, 12);
  std::uniform_int_distribution<std::uint32_t> c_dist(1, 6);
  std::size_t mismatches = 0, vertices = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto n = n_dist(rng);
    auto g = oracle::random_graph(n, std::min(k_dist(rng), n - 1), rng);
    auto labels = oracle::random_labels(n, c_dist(rng), rng);
    auto got = ground_truth_confidence(g, labels);
    auto want = oracle::eq1(g, labels);
    for (std::size_t i = 0; i < n; ++i, ++vertices)
      mismatches += got[i] != static_cast<float>(want[i]);
  }
  verdict("C2 confidence oracle", mismatches == 0,
          fmt("graphs=100 vertices=%zu mismatches=%zu", vertices, mismatches));
}

void metric_oracle() {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<std::size_t> n_dist(2, 200);
  std::uniform_int_distribution<std::uint32_t> c_dist(1, 20);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto n = n_dist(rng);
    auto p = oracle::random_labels(n, c_dist(rng), rng).labels;
    auto g = oracle::random_labels(n, c_dist(rng), rng).labels;
    auto a = pairwise_fscore(p, g);
    auto b = bcubed_fscore(p, g);
    auto pa = oracle::pairwise(p, g);
    auto pb = oracle::bcubed(p, g);
    for (double e : {a.precision - pa.p, a.recall - pa.r, a.f - pa.f, b.precision - pb.p,
                     b.recall - pb.r, b.f - pb.f})
      worst = std::max(worst, std::abs(e));
  }
  std::vector<std::uint32_t> one(10, 0), two{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto hand = bcubed_fscore(one, two);
  const bool hand_ok = hand.precision == 0.5 && hand.recall == 1.0 && hand.f == 2.0 / 3.0;
  verdict("C3 metric oracle", worst <= kMetricTol && hand_ok,
          fmt("labelings=100 worst_abs_err=%.2e hand_case=(%.17g, %.17g, %.17g)", worst,
              hand.precision, hand.recall, hand.f));
}

void forest_invariant() {
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<std::size_t> n_dist(2, 80), k_dist(1, 10), m_dist(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  const int instances = 1000;
  for (int rep = 0; rep < instances; ++rep) {
    const auto n = n_dist(rng);
    auto g = oracle::random_graph(n, std::min(k_dist(rng), n - 1), rng);
    ConfidenceVector c;
    const bool coarse = rep % 3 == 0;  // many exact ties
    for (std::size_t i = 0; i < n; ++i)
      c.values.push_back(coarse ? std::floor(4.0f * float(u(rng))) : float(2.0 * u(rng) - 1.0));
    const auto m = m_dist(rng);
    const auto rho = select_top_rho(c, u(rng));
    std::vector<ConnectivityPrediction> preds;
    for (auto v : rho) {
      auto s = candidate_set(v, g, c);
      if (s.empty()) continue;
      ConnectivityPrediction p{v, s.members, {}};
      for (std::size_t q = 0; q < s.size(); ++q) p.scores.push_back(u(rng));
      preds.push_back(std::move(p));
    }
    auto links = choose_links(g, c, preds, rho, m, 2.0 * u(rng) - 1.0);
    bool ok = oracle::acyclic(links, n);
    for (const auto& l : links) ok = ok && !l.targets.empty() && l.targets.size() <= m;
    const auto clusters = extract_clusters(links, n);
    if (m == 1) ok = ok && clusters.num_clusters == n - links.size();
    violations += !ok;
  }
  verdict("C4 forest invariant", violations == 0,
          fmt("instances=%d violations=%zu", instances, violations));
}

struct Split {
  LabeledFeatures train, test;
};

Split open_set(std::size_t classes, std::size_t per_class, std::size_t dim, double sigma,
               std::uint64_t seed) {
  auto all = generate_synthetic(classes, per_class, dim, sigma, seed);
  const auto half = static_cast<std::uint32_t>(classes / 2);
  return {select_classes(all, 0, half), select_classes(all, half, static_cast<std::uint32_t>(classes))};
}

std::vector<double> tau_grid() {
  std::vector<double> taus;
  for (int i = 0; i <= 19; ++i) taus.push_back(0.05 * i);
  return taus;
}

void separable_case() {
  const auto t0 = Clock::now();
  auto split = open_set(100, 50, 32, 0.0, 105);
  PipelineConfig cfg;
  cfg.k = 10;
  cfg.rho = 0.0;
  cfg.seed = 105;
  auto r = run_pipeline(cfg, split.train.features, split.train.labels, split.test.features,
                        &split.test.labels);
  const auto& rep = *r.report;
  verdict("C5 separable end-to-end", rep.pairwise.f == 1.0 && rep.bcubed.f == 1.0,
          fmt("F_P=%.6f F_B=%.6f clusters=%zu/%zu time=%.1fs", rep.pairwise.f, rep.bcubed.f,
              rep.num_pred_clusters, rep.num_gt_clusters, seconds_since(t0)));
}

void noisy_benchmark() {
  const auto t0 = Clock::now();
  auto all = generate_synthetic(200, 100, 64, kNoisySigma, 106);
  const double one_nn = oracle::one_nn_accuracy(all.features, all.labels);
  const Split split{select_classes(all, 0, 100), select_classes(all, 100, 200)};

  PipelineConfig cfg;
  cfg.k = 10;
  cfg.m = 1;
  cfg.rho = 0.2;
  cfg.seed = 106;
  const auto models = train_models(cfg, split.train.features, split.train.labels);
  const auto taus = tau_grid();

  auto mode = [&](double rho) {
    auto c = cfg;
    c.rho = rho;
    return c;
  };
  // tau is chosen per mode on the labelled training split.
  const auto cfg_v = mode(0.0), cfg_ve = mode(0.2), cfg_e10 = mode(0.1);
  const double tau_v = tune_tau(cfg_v, models, split.train.features, split.train.labels, taus);
  const double tau_ve = tune_tau(cfg_ve, models, split.train.features, split.train.labels, taus);

  const auto st_v = infer(cfg_v, models, split.test.features);
  const auto st_ve = infer(cfg_ve, models, split.test.features);
  const auto st_e10 = infer(cfg_e10, models, split.test.features);
  const auto& gt = split.test.labels;
  const auto v1 = evaluate(partition_clusters(st_v, 1, tau_v), gt);
  const auto ve = evaluate(partition_clusters(st_ve, 1, tau_ve), gt);
  const double secs = seconds_since(t0);

  verdict("C6a noisy mode V", one_nn >= kMinOneNn && v1.pairwise.f >= kModeVTarget && secs < kNoisySeconds,
          fmt("sigma=%.2f 1nn=%.4f tau=%.2f F_P=%.4f (P=%.4f R=%.4f) F_B=%.4f clusters=%zu/%zu "
              "target>=%.2f time=%.0fs",
              kNoisySigma, one_nn, tau_v, v1.pairwise.f, v1.pairwise.precision, v1.pairwise.recall,
              v1.bcubed.f, v1.num_pred_clusters, v1.num_gt_clusters, kModeVTarget, secs));
  verdict("C6b noisy mode V+E", ve.pairwise.f >= v1.pairwise.f - kVeSlack && secs < kNoisySeconds,
          fmt("rho=0.2 tau=%.2f F_P=%.4f (P=%.4f R=%.4f) vs V F_P=%.4f", tau_ve, ve.pairwise.f,
              ve.pairwise.precision, ve.pairwise.recall, v1.pairwise.f));

  const auto v2 = evaluate(partition_clusters(st_v, 2, tau_v), gt);
  verdict("C7a M=2 lowers precision", v2.pairwise.precision < v1.pairwise.precision,
          fmt("tau=%.2f M=1 P=%.4f F_P=%.4f, M=2 P=%.4f F_P=%.4f", tau_v, v1.pairwise.precision,
              v1.pairwise.f, v2.pairwise.precision, v2.pairwise.f));
  const auto e10 = evaluate(partition_clusters(st_e10, 1, tau_v), gt);
  verdict("C7b rho=0.1 does not hurt", e10.pairwise.f >= v1.pairwise.f - kRhoSlack,
          fmt("tau=%.2f rho=0.1 F_P=%.4f vs rho=0 F_P=%.4f", tau_v, e10.pairwise.f, v1.pairwise.f));

  // Rank agreement of predicted and ground-truth confidence on the held-out graph.
  const auto g_test = build_knn_graph(split.test.features, cfg.k);
  const double rho_s = oracle::spearman(st_v.confidence.as_double(),
                                        ground_truth_confidence(g_test, gt).as_double());
  verdict("GCN-V rank correlation", rho_s >= kMinSpearman,
          fmt("spearman=%.4f target>=%.2f", rho_s, kMinSpearman));
}

// KNN graph over class-major blobs, with neighbours searched inside each
// class block. Affinities are true cosines.
KnnGraph blockwise_knn(const DenseMatrix<float>& x, std::size_t block, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<std::vector<Neighbor>> lists(n);
  std::vector<Neighbor> pool;
  for (std::size_t b0 = 0; b0 < n; b0 += block) {
    const std::size_t b1 = std::min(n, b0 + block);
    for (std::size_t i = b0; i < b1; ++i) {
      pool.clear();
      for (std::size_t j = b0; j < b1; ++j) {
        if (j == i) continue;
        float s = 0.0f;
        for (std::size_t t = 0; t < d; ++t) s += x(i, t) * x(j, t);
        pool.push_back({static_cast<std::uint32_t>(j), std::clamp(s, -1.0f, 1.0f)});
      }
      const auto keep = std::min(k, pool.size());
      std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                        neighbor_before);
      lists[i].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep));
    }
  }
  return KnnGraph::from_neighbors(n, k, std::move(lists));
}

void scaling() {
  const std::vector<std::size_t> sizes{25000, 50000, 100000};
  const auto model = GcnModel::create(64, 1, 64, 107);
  std::vector<double> xs, ys;
  std::string detail;
  for (auto n : sizes) {
    auto data = generate_synthetic(n / 100, 100, 64, 0.14, 107 + n);
    auto g = blockwise_knn(data.features, 100, 20);
    std::vector<double> runs;
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = Clock::now();
      auto pred = predict_confidence(model, normalized_adjacency(g), data.features);
      runs.push_back(seconds_since(t0));
      if (pred.confidence.size() != n) std::abort();
    }
    for (double t : runs) {
      xs.push_back(std::log(double(n)));
      ys.push_back(std::log(t));
    }
    std::sort(runs.begin(), runs.end());
    detail += fmt("n=%zu median=%.3fs ", n, runs[1]);
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / double(ys.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  verdict("C8 scaling", slope <= kMaxSlope, detail + fmt("log-log slope=%.3f max=%.1f", slope, kMaxSlope));
}

#ifndef GCNCLUST_CLI_PATH
#define GCNCLUST_CLI_PATH "gcnclust"
#endif

void cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "gcnclust_acceptance_cli";
  fs::remove_all(root);
  const std::string cli = GCNCLUST_CLI_PATH;
  const std::vector<std::string> stages = {
      "synth --classes 16 --per-class 15 --dim 12 --sigma 0.15 --seed 3 --last-class 8 "
      "--features-out train.feat --labels-out train.labels",
      "synth --classes 16 --per-class 15 --dim 12 --sigma 0.15 --seed 3 --first-class 8 "
      "--features-out test.feat --labels-out test.labels",
      "build-graph --config cfg.txt --features train.feat --out train.graph",
      "build-graph --config cfg.txt --features test.feat --out test.graph",
      "train-v --config cfg.txt --features train.feat --labels train.labels --graph train.graph "
      "--out v.model --loss-out v.loss",
      "train-e --config cfg.txt --features train.feat --labels train.labels --graph train.graph "
      "--out e.model --loss-out e.loss",
      "infer-v --config cfg.txt --features test.feat --graph test.graph --model v.model --out test.conf "
      "--text-out test.conf.txt --graph-out link.graph",
      "infer-e --config cfg.txt --features test.feat --graph link.graph --model e.model "
      "--confidence test.conf --out test.pred",
      "partition --config cfg.txt --graph link.graph --confidence test.conf --predictions test.pred "
      "--out test.clusters",
      "evaluate --pred test.clusters --labels test.labels --report-out stage.report",
      "run --config cfg.txt --features train.feat --labels train.labels --test-features test.feat "
      "--test-labels test.labels --out run.clusters --report-out run.report",
  };
  bool ok = true;
  std::string why;
  for (const char* tag : {"a", "b"}) {
    const auto dir = root / tag;
    fs::create_directories(dir);
    io_detail::save_text((dir / "cfg.txt").string(),
                         "k=6\ntau=0.3\nrho=0.3\nm=1\nepochs_v=30\nepochs_e=4\nseed=11\n"
                         "confidence_kind=s_nbr_f\n");
    for (const auto& s : stages) {
      const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' " + s + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        why = " command failed: " + s.substr(0, s.find(' '));
        break;
      }
    }
  }
  std::size_t compared = 0;
  if (ok) {
    for (const auto& entry : fs::directory_iterator(root / "a")) {
      const auto name = entry.path().filename();
      const auto other = root / "b" / name;
      ++compared;
      if (!fs::exists(other) ||
          io_detail::slurp(entry.path().string()) != io_detail::slurp(other.string())) {
        ok = false;
        why += " differs: " + name.string();
      }
    }
  }
  fs::remove_all(root);
  verdict("C9 CLI determinism", ok && compared >= stages.size(),
          fmt("stages=%zu files_compared=%zu", stages.size(), compared) + why);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria{
      gradient_oracle, confidence_oracle, metric_oracle, forest_invariant, separable_case,
      noisy_benchmark, scaling, cli_determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      verdict("(aborted)", false, e.what());
    }
  }
  std::printf("%d criterion check(s) failed\n", failures);
  return failures;
}
