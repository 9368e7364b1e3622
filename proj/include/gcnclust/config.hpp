#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "confidence.hpp"
#include "error.hpp"
#include "gcn.hpp"
#include "io.hpp"

namespace gcnclust {

struct PipelineConfig {
  std::size_t k = 80;
  double tau = 0.8;
  double rho = 0.2;
  std::size_t m = 1;
  std::size_t gcnv_layers = 1;
  std::size_t gcne_layers = 4;
  // Hidden width of every GCN layer; 0 means "same as the feature width".
  std::size_t hidden = 0;
  ConfidenceKind confidence_kind = ConfidenceKind::s_nbr;
  // Cosine-distance radius for the unsupervised density confidences.
  std::optional<double> radius;
  TrainConfig train_v{0.1, 0.9, 1e-5, 200, 0, 32};
  TrainConfig train_e{0.1, 0.9, 1e-5, 80, 0, 32};
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(k >= 1, "config: k must be >= 1");
    detail::require(tau >= -1.0 && tau <= 1.0, "config: tau must be in [-1,1]");
    detail::require(rho >= 0.0 && rho <= 1.0, "config: rho must be in [0,1]");
    detail::require(m >= 1, "config: m must be >= 1");
    detail::require(gcnv_layers >= 1 && gcne_layers >= 1, "config: layer counts must be >= 1");
    detail::require(!is_unsupervised(confidence_kind) || radius.has_value(),
                    "config: confidence kind " + std::string(to_string(confidence_kind)) +
                        " needs a radius");
    train_v.validate();
    train_e.validate();
  }

  // Applies one key=value setting. Keys match the CLI flag names with
  // dashes replaced by underscores.
  void set(std::string_view key, std::string_view value) {
    auto real = [&](double& out) {
      if (!io_detail::parse_number(value, out))
        throw InputError("config: '" + std::string(key) + "' expects a number, got '" +
                         std::string(value) + "'");
    };
    auto count = [&](std::size_t& out) {
      std::uint64_t v = 0;
      if (!io_detail::parse_number(value, v))
        throw InputError("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                         std::string(value) + "'");
      out = static_cast<std::size_t>(v);
    };
    double d = 0.0;
    std::string norm(key);
    for (auto& c : norm)
      if (c == '-') c = '_';
    if (norm == "k") count(k);
    else if (norm == "tau") real(tau);
    else if (norm == "rho") real(rho);
    else if (norm == "m") count(m);
    else if (norm == "gcnv_layers") count(gcnv_layers);
    else if (norm == "gcne_layers") count(gcne_layers);
    else if (norm == "hidden") count(hidden);
    else if (norm == "confidence_kind") confidence_kind = parse_confidence_kind(value);
    else if (norm == "radius") { real(d); radius = d; }
    else if (norm == "seed") {
      std::uint64_t s = 0;
      if (!io_detail::parse_number(value, s)) throw InputError("config: seed expects an integer");
      seed = s;
    }
    else if (norm == "learning_rate") { real(d); train_v.learning_rate = train_e.learning_rate = d; }
    else if (norm == "lr_v") real(train_v.learning_rate);
    else if (norm == "lr_e") real(train_e.learning_rate);
    else if (norm == "momentum") { real(d); train_v.momentum = train_e.momentum = d; }
    else if (norm == "weight_decay") { real(d); train_v.weight_decay = train_e.weight_decay = d; }
    else if (norm == "epochs_v") count(train_v.epochs);
    else if (norm == "epochs_e") count(train_e.epochs);
    else if (norm == "batch_size") { count(train_e.batch_size); }
    else throw InputError("config: unknown key '" + std::string(key) + "'");
  }

  std::string to_text() const {
    std::string s;
    auto line = [&s](std::string_view key, const std::string& v) {
      s.append(key).append("=").append(v).append("\n");
    };
    using io_detail::format_real;
    line("k", std::to_string(k));
    line("tau", format_real(tau));
    line("rho", format_real(rho));
    line("m", std::to_string(m));
    line("gcnv_layers", std::to_string(gcnv_layers));
    line("gcne_layers", std::to_string(gcne_layers));
    line("hidden", std::to_string(hidden));
    line("confidence_kind", std::string(to_string(confidence_kind)));
    if (radius) line("radius", format_real(*radius));
    line("lr_v", format_real(train_v.learning_rate));
    line("lr_e", format_real(train_e.learning_rate));
    line("momentum", format_real(train_v.momentum));
    line("weight_decay", format_real(train_v.weight_decay));
    line("epochs_v", std::to_string(train_v.epochs));
    line("epochs_e", std::to_string(train_e.epochs));
    line("batch_size", std::to_string(train_e.batch_size));
    line("seed", std::to_string(seed));
    return s;
  }
};

// key=value per line; blank lines and '#' comments are ignored.
inline PipelineConfig parse_config(std::string_view text, PipelineConfig cfg = {}) {
  std::size_t line_no = 0;
  for (auto raw : io_detail::lines(text)) {
    ++line_no;
    auto line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    try {
      cfg.set(io_detail::trim(line.substr(0, eq)), io_detail::trim(line.substr(eq + 1)));
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return cfg;
}

inline PipelineConfig read_config(const std::string& path, PipelineConfig cfg = {}) {
  return parse_config(io_detail::slurp(path), std::move(cfg));
}

}  // namespace gcnclust
