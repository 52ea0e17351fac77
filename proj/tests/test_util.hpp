#pragma once

// Test-only generators and brute-force oracles. Nothing here calls into the
// gallery code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "osfr/embedding_db.hpp"
#include "osfr/image.hpp"

namespace osfr::testing {

inline std::vector<double> random_unit(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  for (double& x : v) {
    x = n(gen);
    sq += x * x;
  }
  for (double& x : v) x /= std::sqrt(sq);
  return v;
}

inline Embedding random_embedding(std::mt19937_64& gen, std::size_t dim) {
  return Embedding::normalized(random_unit(gen, dim));
}

inline Embedding axis(std::size_t dim, std::size_t i, double sign = 1.0) {
  std::vector<double> v(dim, 0.0);
  v[i] = sign;
  return Embedding::from_unit(v);
}

inline double naive_dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Recomputes every threshold from scratch: entry i's threshold is sigma times
// the largest similarity among (a) the entries inside i's own update window at
// registration and (b) later entries whose update window contained i.
inline std::vector<std::optional<double>> replay_thresholds(
    const std::vector<std::vector<double>>& vectors, std::optional<std::size_t> window,
    double sigma) {
  const std::size_t n = vectors.size();
  const auto in_window = [&](std::size_t earlier, std::size_t later) {
    return !window || later - earlier <= *window;
  };
  std::vector<std::optional<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<double> best;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::size_t earlier = std::min(i, j), later = std::max(i, j);
      if (!in_window(earlier, later)) continue;
      const double s = naive_dot(vectors[later], vectors[earlier]);
      if (!best || s > *best) best = s;
    }
    if (best) out[i] = sigma * *best;
  }
  return out;
}

// Exhaustive argmax over the last `window` entries, first index on ties.
inline std::optional<std::size_t> scan_argmax(const std::vector<std::vector<double>>& vectors,
                                              const std::vector<double>& probe,
                                              std::optional<std::size_t> window) {
  if (vectors.empty()) return std::nullopt;
  const std::size_t first = (window && *window < vectors.size()) ? vectors.size() - *window : 0;
  std::size_t best = first;
  double best_score = naive_dot(probe, vectors[first]);
  for (std::size_t i = first + 1; i < vectors.size(); ++i) {
    const double s = naive_dot(probe, vectors[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

inline RasterImage random_image(std::mt19937_64& gen, int w, int h) {
  std::uniform_int_distribution<int> d(0, 255);
  RasterImage img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(gen));
  return img;
}

// Smooth pattern with some structure, handy for visual-ish checks.
inline RasterImage gradient_image(int w, int h) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<std::uint8_t>((x * 255) / std::max(1, w - 1));
      img.at(x, y, 1) = static_cast<std::uint8_t>((y * 255) / std::max(1, h - 1));
      img.at(x, y, 2) = static_cast<std::uint8_t>(((x + y) * 7) % 256);
    }
  }
  return img;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("osfr_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace osfr::testing

#include "osfr/splitter.hpp"

namespace osfr::testing {

// Identity sizes shaped like the cleaned LFW set: 5718 people, 13156 images,
// ~70% singletons and a heavy tail led by one identity with 530 images.
inline std::vector<std::size_t> lfw_shaped_sizes() {
  constexpr std::size_t kIdentities = 5718, kImages = 13156, kSingletons = 4040;
  std::vector<std::size_t> sizes;
  const std::size_t multi = kIdentities - kSingletons;
  for (std::size_t i = 0; i < multi; ++i) {
    sizes.push_back(std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(530.0 / std::pow(i + 1.0, 0.9)))));
  }
  std::size_t total = kSingletons;
  for (auto s : sizes) total += s;
  // Spread the remainder over the tail so the total matches exactly.
  for (std::size_t i = multi - 1; total < kImages; i = (i == 20 ? multi - 1 : i - 1)) {
    ++sizes[i];
    ++total;
  }
  sizes.insert(sizes.end(), kSingletons, 1);
  return sizes;
}

inline Manifest manifest_from_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<ManifestRecord> recs;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (std::size_t i = 0; i < sizes[k]; ++i) {
      recs.push_back({"person" + std::to_string(k) + "_" + std::to_string(i),
                      "person" + std::to_string(k)});
    }
  }
  return Manifest(std::move(recs));
}

}  // namespace osfr::testing
