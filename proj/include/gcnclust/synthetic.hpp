#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "confidence.hpp"
#include "error.hpp"
#include "tensor.hpp"

namespace gcnclust {

// Derives an independent stream seed for a named stage (splitmix64 over an
// FNV-1a hash of the name).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct LabeledFeatures {
  DenseMatrix<float> features;
  LabelVector labels;
};

// Gaussian blobs on the unit sphere: class centres are uniform on S^{dim-1},
// each point is normalize(centre + N(0, sigma^2 I)). Points are stored class
// by class.
inline LabeledFeatures generate_synthetic(std::size_t num_classes, std::size_t points_per_class,
                                          std::size_t dim, double noise_sigma, std::uint64_t seed) {
  detail::require(num_classes >= 1 && points_per_class >= 1 && dim >= 1,
                  "generate_synthetic: counts must be >= 1");
  detail::require(noise_sigma >= 0.0, "generate_synthetic: noise_sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> centre(dim), point(dim);
  LabeledFeatures out{DenseMatrix<float>(num_classes * points_per_class, dim), {}};
  out.labels.labels.reserve(num_classes * points_per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto& v : centre) {
        v = normal(rng);
        sq += v * v;
      }
    } while (sq == 0.0);
    for (auto& v : centre) v /= std::sqrt(sq);

    for (std::size_t p = 0; p < points_per_class; ++p, ++row) {
      double psq = 0.0;
      for (std::size_t t = 0; t < dim; ++t) {
        point[t] = centre[t] + (noise_sigma > 0.0 ? noise_sigma * normal(rng) : 0.0);
        psq += point[t] * point[t];
      }
      const double inv = psq > 0.0 ? 1.0 / std::sqrt(psq) : 0.0;
      for (std::size_t t = 0; t < dim; ++t) out.features(row, t) = static_cast<float>(point[t] * inv);
      out.labels.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return out;
}

// Rows whose label lies in [first_class, last_class), relabelled from 0.
inline LabeledFeatures select_classes(const LabeledFeatures& data, std::uint32_t first_class,
                                      std::uint32_t last_class) {
  LabeledFeatures out;
  std::vector<float> values;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    const auto y = data.labels[i];
    if (y < first_class || y >= last_class) continue;
    auto r = data.features.row(i);
    values.insert(values.end(), r.begin(), r.end());
    out.labels.labels.push_back(y - first_class);
    ++rows;
  }
  out.features = DenseMatrix<float>(rows, data.features.cols(), std::move(values));
  return out;
}

}  // namespace gcnclust
