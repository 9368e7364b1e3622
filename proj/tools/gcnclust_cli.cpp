// gcnclust command line: each pipeline stage as a subcommand, plus `run`
// for the whole chain.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gcnclust/gcnclust.hpp"

using namespace gcnclust;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::size_t> k, m;
  std::optional<double> tau, rho, radius;
  std::optional<std::string> confidence_kind;
  std::optional<std::uint64_t> seed;

  PipelineConfig resolve() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : read_config(config_path);
    if (k) cfg.k = *k;
    if (m) cfg.m = *m;
    if (tau) cfg.tau = *tau;
    if (rho) cfg.rho = *rho;
    if (radius) cfg.radius = *radius;
    if (confidence_kind) cfg.confidence_kind = parse_confidence_kind(*confidence_kind);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

void add_pipeline_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "key=value configuration file");
  app->add_option("--k", o.k, "neighbours per vertex");
  app->add_option("--tau", o.tau, "link affinity threshold");
  app->add_option("--rho", o.rho, "fraction of vertices ranked by GCN-E");
  app->add_option("--m", o.m, "maximum links per vertex");
  app->add_option("--confidence-kind", o.confidence_kind,
                  "u_num, u_weight, s_avg, s_center, s_nbr or s_nbr_f");
  app->add_option("--radius", o.radius, "cosine-distance radius for u_num/u_weight");
  app->add_option("--seed", o.seed, "master random seed");
}

KnnGraph load_or_build_graph(const std::string& graph_path, const DenseMatrix<float>& features,
                             std::size_t k) {
  if (graph_path.empty()) return build_knn_graph(features, k);
  auto g = read_graph(graph_path);
  if (g.n != features.rows())
    throw InputError("graph " + graph_path + " has " + std::to_string(g.n) +
                     " vertices but the features have " + std::to_string(features.rows()) + " rows");
  return g;
}

void report(const ScoreReport& r, const std::string& report_out) {
  std::cout << r.to_table() << r.to_record() << "\n";
  if (!report_out.empty()) io_detail::save_text(report_out, r.to_record() + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised graph clustering with vertex-confidence and edge-connectivity GCNs"};
  app.require_subcommand(1);
  Overrides o;

  // synth
  std::size_t classes = 10, per_class = 100, dim = 64, first_class = 0;
  std::optional<std::size_t> last_class;
  double sigma = 0.1;
  std::string features_out, labels_out;
  auto* synth = app.add_subcommand("synth", "generate Gaussian blobs on the unit sphere");
  synth->add_option("--classes", classes)->check(CLI::PositiveNumber);
  synth->add_option("--per-class", per_class)->check(CLI::PositiveNumber);
  synth->add_option("--dim", dim)->check(CLI::PositiveNumber);
  synth->add_option("--sigma", sigma)->check(CLI::NonNegativeNumber);
  synth->add_option("--first-class", first_class, "keep classes from this index");
  synth->add_option("--last-class", last_class, "keep classes below this index");
  synth->add_option("--seed", o.seed);
  synth->add_option("--features-out", features_out)->required();
  synth->add_option("--labels-out", labels_out)->required();

  // shared paths
  std::string features, labels, graph, model, confidence, predictions, out, text_out, graph_out,
      report_out, test_features, test_labels, loss_out;

  auto* build = app.add_subcommand("build-graph", "exact cosine KNN graph");
  build->add_option("--features", features)->required();
  build->add_option("--out", out)->required();
  add_pipeline_flags(build, o);

  auto* train_v = app.add_subcommand("train-v", "train the vertex-confidence GCN");
  train_v->add_option("--features", features)->required();
  train_v->add_option("--labels", labels)->required();
  train_v->add_option("--graph", graph, "reuse a graph built by build-graph");
  train_v->add_option("--out", out)->required();
  train_v->add_option("--loss-out", loss_out, "per-epoch training loss, one per line");
  add_pipeline_flags(train_v, o);

  auto* infer_v = app.add_subcommand("infer-v", "estimate vertex confidence");
  infer_v->add_option("--features", features)->required();
  infer_v->add_option("--model", model, "GCN-V model (not needed for u_num/u_weight)");
  infer_v->add_option("--graph", graph);
  infer_v->add_option("--out", out, "binary confidence file")->required();
  infer_v->add_option("--text-out", text_out, "confidence as text, one per line");
  infer_v->add_option("--graph-out", graph_out, "graph to link on (rebuilt for s_nbr_f)");
  add_pipeline_flags(infer_v, o);

  auto* train_e = app.add_subcommand("train-e", "train the edge-connectivity GCN");
  train_e->add_option("--features", features)->required();
  train_e->add_option("--labels", labels)->required();
  train_e->add_option("--graph", graph);
  train_e->add_option("--out", out)->required();
  train_e->add_option("--loss-out", loss_out);
  add_pipeline_flags(train_e, o);

  auto* infer_e = app.add_subcommand("infer-e", "score candidate links of the top-rho vertices");
  infer_e->add_option("--features", features)->required();
  infer_e->add_option("--model", model)->required();
  infer_e->add_option("--graph", graph)->required();
  infer_e->add_option("--confidence", confidence)->required();
  infer_e->add_option("--out", out, "center member score triples")->required();
  add_pipeline_flags(infer_e, o);

  auto* partition = app.add_subcommand("partition", "link vertices and extract clusters");
  partition->add_option("--graph", graph)->required();
  partition->add_option("--confidence", confidence)->required();
  partition->add_option("--predictions", predictions, "output of infer-e");
  partition->add_option("--out", out, "cluster label per line")->required();
  add_pipeline_flags(partition, o);

  auto* eval = app.add_subcommand("evaluate", "pairwise and BCubed F-scores");
  eval->add_option("--pred", out, "cluster label per line")->required();
  eval->add_option("--labels", labels)->required();
  eval->add_option("--report-out", report_out);

  auto* run = app.add_subcommand("run", "train on one split, cluster another");
  run->add_option("--features", features, "training features")->required();
  run->add_option("--labels", labels, "training labels")->required();
  run->add_option("--test-features", test_features)->required();
  run->add_option("--test-labels", test_labels);
  run->add_option("--out", out, "cluster label per line")->required();
  run->add_option("--report-out", report_out);
  add_pipeline_flags(run, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto data = generate_synthetic(classes, per_class, dim, sigma, o.seed.value_or(0));
      if (first_class > 0 || last_class)
        data = select_classes(data, static_cast<std::uint32_t>(first_class),
                              static_cast<std::uint32_t>(last_class.value_or(classes)));
      write_features(features_out, data.features);
      write_labels(labels_out, data.labels.labels);
    } else if (build->parsed()) {
      const auto cfg = o.resolve();
      write_graph(out, build_knn_graph(read_features(features), cfg.k));
    } else if (train_v->parsed()) {
      const auto cfg = o.resolve();
      detail::require(!is_unsupervised(cfg.confidence_kind),
                      "confidence kind " + std::string(to_string(cfg.confidence_kind)) +
                          " is unsupervised; nothing to train");
      const auto x = read_features(features);
      const auto y = read_labels(labels);
      std::vector<double> loss;
      auto m = train_confidence_model(cfg, load_or_build_graph(graph, x, cfg.k), x, y, &loss);
      write_model(out, m);
      if (!loss_out.empty()) {
        std::string text;
        for (double v : loss) text += io_detail::format_real(v) + "\n";
        io_detail::save_text(loss_out, text);
      }
    } else if (infer_v->parsed()) {
      const auto cfg = o.resolve();
      const auto x = read_features(features);
      auto g = load_or_build_graph(graph, x, cfg.k);
      ConfidenceVector c;
      if (is_unsupervised(cfg.confidence_kind)) {
        c = confidence_variant(g, nullptr, x, cfg.confidence_kind, cfg.radius);
      } else {
        detail::require(!model.empty(), "--model is required for " +
                                            std::string(to_string(cfg.confidence_kind)));
        auto pred = predict_confidence(read_model(model), normalized_adjacency(g), x);
        c = std::move(pred.confidence);
        if (cfg.confidence_kind == ConfidenceKind::s_nbr_f) g = rebuild_graph(pred.embeddings, cfg.k);
      }
      write_confidence(out, c);
      if (!text_out.empty()) write_confidence_text(text_out, c);
      if (!graph_out.empty()) write_graph(graph_out, g);
    } else if (train_e->parsed()) {
      const auto cfg = o.resolve();
      const auto x = read_features(features);
      const auto y = read_labels(labels);
      std::vector<double> loss;
      auto m = train_connectivity_model(cfg, load_or_build_graph(graph, x, cfg.k), x, y, &loss);
      write_model(out, m);
      if (!loss_out.empty()) {
        std::string text;
        for (double v : loss) text += io_detail::format_real(v) + "\n";
        io_detail::save_text(loss_out, text);
      }
    } else if (infer_e->parsed()) {
      const auto cfg = o.resolve();
      const auto x = read_features(features);
      const auto g = load_or_build_graph(graph, x, cfg.k);
      const auto c = read_confidence(confidence);
      detail::require(c.size() == g.n, "confidence length does not match graph");
      const auto rho_set = select_top_rho(c, cfg.rho);
      write_predictions(out, predict_connectivity_for(read_model(model), rho_set, g, x, c));
    } else if (partition->parsed()) {
      const auto cfg = o.resolve();
      const auto g = read_graph(graph);
      const auto c = read_confidence(confidence);
      detail::require(c.size() == g.n, "confidence length does not match graph");
      std::vector<ConnectivityPrediction> preds;
      std::vector<std::uint32_t> rho_set;
      if (!predictions.empty()) {
        preds = read_predictions(predictions);
        rho_set = select_top_rho(c, cfg.rho);
      }
      const auto links = choose_links(g, c, preds, rho_set, cfg.m, cfg.tau);
      write_labels(out, extract_clusters(links, g.n).labels);
    } else if (eval->parsed()) {
      report(evaluate(read_clusters(out), read_labels(labels)), report_out);
    } else if (run->parsed()) {
      const auto cfg = o.resolve();
      const auto x = read_features(features);
      const auto y = read_labels(labels);
      const auto tx = read_features(test_features);
      std::optional<LabelVector> ty;
      if (!test_labels.empty()) ty = read_labels(test_labels);
      const auto r = run_pipeline(cfg, x, y, tx, ty ? &*ty : nullptr);
      write_labels(out, r.clustering.clusters.labels);
      if (r.report) report(*r.report, report_out);
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error in stage %s\n", e.what());
    return 4;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 3;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
