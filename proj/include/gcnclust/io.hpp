#pragma once

// On-disk formats. Binary files are little-endian and begin with a four-byte
// magic and a u32 version:
//   FEAT  n:u64 d:u32 | f32[n*d]
//   GCGR  n:u64 k:u32 | adjacency CSR: u64[n+1] u32[nnz] f32[nnz]
//                     | directed neighbour lists: u64[n+1] u32[m] f32[m]
//   GCNM  layers:u32 | per layer rows:u32 cols:u32 f32[rows*cols]
//                    | regressor rows:u32 cols:u32 f32[rows] bias:f32
//   CONF  is not tagged: count:u64 | f32[count]
// Text files hold one record per line.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "confidence.hpp"
#include "connectivity.hpp"
#include "error.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "partition.hpp"
#include "tensor.hpp"

namespace gcnclust {

namespace io_detail {

inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::uint32_t kGraphVersion = 1;
inline constexpr std::uint32_t kModelVersion = 1;

class ByteWriter {
 public:
  void magic(std::string_view m) { buf_.append(m); }

  template <typename T>
  void put(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    static_assert(sizeof(T) == sizeof(U));
    const U bits = std::bit_cast<U>(v);
    for (std::size_t b = 0; b < sizeof(U); ++b)
      buf_.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
  }

  template <typename T>
  void put_all(std::span<const T> vs) {
    buf_.reserve(buf_.size() + vs.size() * sizeof(T));
    for (const T& v : vs) put(v);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw FormatError("short write to '" + path + "'");
  }

  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string path) : buf_(std::move(bytes)), path_(std::move(path)) {}

  void expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::string_view(buf_).substr(pos_, m.size()) != m)
      throw FormatError(path_ + ": bad magic, expected '" + std::string(m) + "'");
    pos_ += m.size();
  }

  template <typename T>
  T get(const char* what) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U), what);
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      bits |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + b])) << (8 * b);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  template <typename T>
  std::vector<T> get_all(std::size_t count, const char* what) {
    need(count * sizeof(T), what);
    std::vector<T> out(count);
    for (auto& v : out) v = get<T>(what);
    return out;
  }

  std::size_t remaining() const noexcept { return buf_.size() - pos_; }
  std::size_t size() const noexcept { return buf_.size(); }

  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(path_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }

  const std::string& path() const noexcept { return path_; }

 private:
  void need(std::size_t bytes, const char* what) const {
    if (remaining() < bytes)
      throw FormatError(path_ + ": truncated while reading " + what + ", need " +
                        std::to_string(bytes) + " bytes, have " + std::to_string(remaining()));
  }

  std::string buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

inline void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw FormatError("short write to '" + path + "'");
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for floating point is incomplete in some standard libraries.
    std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) return false;
    out = static_cast<T>(v);
    return true;
  } else {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  }
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace io_detail

// ---- features ------------------------------------------------------------

inline void write_features(const std::string& path, const DenseMatrix<float>& x) {
  io_detail::ByteWriter w;
  w.magic("FEAT");
  w.put(io_detail::kFeatureVersion);
  w.put(static_cast<std::uint64_t>(x.rows()));
  w.put(static_cast<std::uint32_t>(x.cols()));
  w.put_all<float>(x.values());
  w.save(path);
}

inline DenseMatrix<float> read_features(const std::string& path) {
  io_detail::ByteReader r(io_detail::slurp(path), path);
  r.expect_magic("FEAT");
  const auto version = r.get<std::uint32_t>("version");
  if (version != io_detail::kFeatureVersion)
    throw FormatError(path + ": unsupported feature file version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>("row count");
  const auto d = r.get<std::uint32_t>("column count");
  const std::uint64_t expected = n * d * sizeof(float);
  if (r.remaining() != expected)
    throw FormatError(path + ": payload should be " + std::to_string(expected) +
                      " bytes for " + std::to_string(n) + "x" + std::to_string(d) +
                      " features, found " + std::to_string(r.remaining()));
  DenseMatrix<float> x(n, d, r.get_all<float>(n * d, "features"));
  if (!x.all_finite()) throw ValidationError(path + ": non-finite feature value");
  return x;
}

// ---- labels / clusters ---------------------------------------------------

// Labels need not be contiguous; they are remapped to 0..C-1 in ascending
// order of the original values.
inline LabelVector parse_labels(std::string_view text) {
  std::vector<std::uint64_t> raw;
  std::size_t line_no = 0;
  for (auto line : io_detail::lines(text)) {
    ++line_no;
    const auto t = io_detail::trim(line);
    std::uint64_t v = 0;
    if (!io_detail::parse_number(t, v))
      throw ParseError("expected a non-negative integer label, got '" + std::string(t) + "'", line_no);
    raw.push_back(v);
  }
  std::map<std::uint64_t, std::uint32_t> dense;
  for (auto v : raw) dense.emplace(v, 0);
  std::uint32_t next = 0;
  for (auto& [v, id] : dense) id = next++;
  LabelVector out;
  out.labels.reserve(raw.size());
  for (auto v : raw) out.labels.push_back(dense.at(v));
  return out;
}

inline LabelVector read_labels(const std::string& path) {
  return parse_labels(io_detail::slurp(path));
}

inline void write_labels(const std::string& path, std::span<const std::uint32_t> labels) {
  std::string text;
  text.reserve(labels.size() * 4);
  for (auto v : labels) {
    text += std::to_string(v);
    text += '\n';
  }
  io_detail::save_text(path, text);
}

inline ClusterAssignment read_clusters(const std::string& path) {
  auto labels = read_labels(path);
  ClusterAssignment c;
  c.num_clusters = labels.labels.empty()
                       ? 0
                       : *std::max_element(labels.labels.begin(), labels.labels.end()) + 1;
  c.labels = std::move(labels.labels);
  return c;
}

// ---- graph ---------------------------------------------------------------

inline void write_graph(const std::string& path, const KnnGraph& g) {
  io_detail::ByteWriter w;
  w.magic("GCGR");
  w.put(io_detail::kGraphVersion);
  w.put(static_cast<std::uint64_t>(g.n));
  w.put(static_cast<std::uint32_t>(g.k));
  const auto& a = g.adjacency;
  w.put_all<std::uint64_t>(a.row_offsets());
  w.put_all<std::uint32_t>(a.col_indices());
  for (double v : a.values()) w.put(static_cast<float>(v));
  std::uint64_t off = 0;
  w.put(off);
  for (const auto& list : g.neighbors) w.put(off += list.size());
  for (const auto& list : g.neighbors)
    for (const auto& nb : list) w.put(nb.id);
  for (const auto& list : g.neighbors)
    for (const auto& nb : list) w.put(nb.affinity);
  w.save(path);
}

inline KnnGraph read_graph(const std::string& path) {
  io_detail::ByteReader r(io_detail::slurp(path), path);
  r.expect_magic("GCGR");
  const auto version = r.get<std::uint32_t>("version");
  if (version != io_detail::kGraphVersion)
    throw FormatError(path + ": unsupported graph file version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>("vertex count");
  const auto k = r.get<std::uint32_t>("k");
  auto offsets = r.get_all<std::uint64_t>(n + 1, "row offsets");
  const auto nnz = offsets.back();
  auto cols = r.get_all<std::uint32_t>(nnz, "column indices");
  auto fvals = r.get_all<float>(nnz, "values");
  auto list_offsets = r.get_all<std::uint64_t>(n + 1, "neighbour offsets");
  const auto m = list_offsets.back();
  auto ids = r.get_all<std::uint32_t>(m, "neighbour ids");
  auto affs = r.get_all<float>(m, "neighbour affinities");
  r.expect_end();

  std::vector<std::vector<Neighbor>> lists(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (list_offsets[i] > list_offsets[i + 1] || list_offsets[i + 1] > m)
      throw FormatError(path + ": neighbour offsets not monotone");
    for (auto e = list_offsets[i]; e < list_offsets[i + 1]; ++e) {
      if (!std::isfinite(affs[e])) throw ValidationError(path + ": non-finite affinity");
      lists[i].push_back({ids[e], affs[e]});
    }
  }
  try {
    KnnGraph g = KnnGraph::from_neighbors(n, k, std::move(lists));
    SparseAdjacency stored(n, std::move(offsets), std::move(cols),
                           std::vector<double>(fvals.begin(), fvals.end()), true);
    if (!(stored == g.adjacency))
      throw ValidationError(path + ": adjacency does not match the neighbour lists");
    return g;
  } catch (const InputError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// ---- model ---------------------------------------------------------------

inline void write_model(const std::string& path, const GcnModel& m) {
  m.validate();
  io_detail::ByteWriter w;
  w.magic("GCNM");
  w.put(io_detail::kModelVersion);
  w.put(static_cast<std::uint32_t>(m.layers.size()));
  auto put_matrix = [&w](const DenseMatrix<double>& x) {
    w.put(static_cast<std::uint32_t>(x.rows()));
    w.put(static_cast<std::uint32_t>(x.cols()));
    for (double v : x.values()) w.put(static_cast<float>(v));
  };
  for (const auto& l : m.layers) put_matrix(l);
  put_matrix(m.regressor_weight);
  w.put(static_cast<float>(m.regressor_bias));
  w.save(path);
}

inline GcnModel read_model(const std::string& path) {
  io_detail::ByteReader r(io_detail::slurp(path), path);
  r.expect_magic("GCNM");
  const auto version = r.get<std::uint32_t>("version");
  if (version != io_detail::kModelVersion)
    throw FormatError(path + ": unsupported model file version " + std::to_string(version));
  const auto depth = r.get<std::uint32_t>("layer count");
  auto get_matrix = [&r](const char* what) {
    const auto rows = r.get<std::uint32_t>(what);
    const auto cols = r.get<std::uint32_t>(what);
    auto f = r.get_all<float>(std::size_t{rows} * cols, what);
    return DenseMatrix<double>(rows, cols, std::vector<double>(f.begin(), f.end()));
  };
  GcnModel m;
  for (std::uint32_t l = 0; l < depth; ++l) m.layers.push_back(get_matrix("layer weights"));
  m.regressor_weight = get_matrix("regressor weights");
  m.regressor_bias = r.get<float>("regressor bias");
  r.expect_end();
  m.validate();
  m.reset_optimizer();
  return m;
}

// ---- confidence ----------------------------------------------------------

inline void write_confidence(const std::string& path, const ConfidenceVector& c) {
  io_detail::ByteWriter w;
  w.put(static_cast<std::uint64_t>(c.size()));
  w.put_all<float>(c.values);
  w.save(path);
}

inline ConfidenceVector read_confidence(const std::string& path,
                                        ConfidenceSource source = ConfidenceSource::predicted) {
  io_detail::ByteReader r(io_detail::slurp(path), path);
  const auto n = r.get<std::uint64_t>("length");
  if (r.remaining() != n * sizeof(float))
    throw FormatError(path + ": payload should be " + std::to_string(n * sizeof(float)) +
                      " bytes, found " + std::to_string(r.remaining()));
  ConfidenceVector c{r.get_all<float>(n, "confidence"), source};
  for (float v : c.values)
    if (!std::isfinite(v)) throw ValidationError(path + ": non-finite confidence");
  return c;
}

inline void write_confidence_text(const std::string& path, const ConfidenceVector& c) {
  std::string text;
  for (float v : c.values) text += io_detail::format_real(v) + "\n";
  io_detail::save_text(path, text);
}

// ---- connectivity predictions -------------------------------------------

inline void write_predictions(const std::string& path,
                              std::span<const ConnectivityPrediction> preds) {
  std::string text;
  for (const auto& p : preds)
    for (std::size_t e = 0; e < p.members.size(); ++e)
      text += std::to_string(p.center) + " " + std::to_string(p.members[e]) + " " +
              io_detail::format_real(p.scores[e]) + "\n";
  io_detail::save_text(path, text);
}

// Consecutive lines with the same centre form one prediction.
inline std::vector<ConnectivityPrediction> read_predictions(const std::string& path) {
  const auto text = io_detail::slurp(path);
  std::vector<ConnectivityPrediction> out;
  std::size_t line_no = 0;
  for (auto line : io_detail::lines(text)) {
    ++line_no;
    const auto t = io_detail::trim(line);
    if (t.empty()) continue;
    std::istringstream ss{std::string(t)};
    std::string a, b, c, extra;
    ss >> a >> b >> c;
    std::uint32_t center = 0, member = 0;
    double score = 0.0;
    if (!io_detail::parse_number(a, center) || !io_detail::parse_number(b, member) ||
        !io_detail::parse_number(c, score) || (ss >> extra) || !std::isfinite(score))
      throw ParseError("expected 'center member score'", line_no);
    if (out.empty() || out.back().center != center) out.push_back({center, {}, {}});
    out.back().members.push_back(member);
    out.back().scores.push_back(score);
  }
  return out;
}

}  // namespace gcnclust
