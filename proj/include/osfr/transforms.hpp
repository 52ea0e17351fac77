#pragma once

// Basic image manipulations. Every transform keeps the image dimensions.

#include <array>
#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "osfr/image.hpp"
#include "osfr/rng.hpp"

namespace osfr {

struct HFlip {
  friend bool operator==(const HFlip&, const HFlip&) = default;
};

// Black rectangle, clipped to the image.
struct Occlusion {
  int x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const Occlusion&, const Occlusion&) = default;
};

// brightness -> contrast -> saturation, each a multiply about an anchor
// (0, channel mean, pixel luma), clamped after every step.
struct ColorJitter {
  double brightness = 1.0, contrast = 1.0, saturation = 1.0;
  friend bool operator==(const ColorJitter&, const ColorJitter&) = default;
};

// Contrast-limited adaptive histogram equalization on luma.
struct Clahe {
  double clip_limit = 2.0;
  int tiles = 8;
  friend bool operator==(const Clahe&, const Clahe&) = default;
};

struct GaussianBlur {
  double sigma = 1.0;
  friend bool operator==(const GaussianBlur&, const GaussianBlur&) = default;
};

// Box-filter down by `factor`, bilinear back up to the original size.
struct Downscale {
  double factor = 0.5;
  friend bool operator==(const Downscale&, const Downscale&) = default;
};

// Additive N(0, std^2) per sample, std in 8-bit units. Draws from the chain RNG.
struct GaussNoise {
  double std = 10.0;
  friend bool operator==(const GaussNoise&, const GaussNoise&) = default;
};

// Radial model about the image center: p_src = p + (p - c) * k * r^2, with r
// normalized by the half-diagonal.
struct OpticalDistortion {
  double k = 0.0;
  friend bool operator==(const OpticalDistortion&, const OpticalDistortion&) = default;
};

// (cells+1)^2 control nodes; interior nodes move by uniform(+-limit * cell
// size) drawn from the chain RNG, pixels remap piecewise-bilinearly.
struct GridDistortion {
  int cells = 5;
  double limit = 0.3;
  friend bool operator==(const GridDistortion&, const GridDistortion&) = default;
};

using TransformSpec = std::variant<HFlip, Occlusion, ColorJitter, Clahe, GaussianBlur, Downscale,
                                   GaussNoise, OpticalDistortion, GridDistortion>;

std::string_view transform_name(const TransformSpec& t) noexcept;

// Throws UsageError when a parameter is outside its range.
void validate(const TransformSpec& t);

nlohmann::json to_json(const TransformSpec& t);
TransformSpec transform_from_json(const nlohmann::json& j);

RasterImage apply(const RasterImage& img, const TransformSpec& t, CounterRng& rng);

// An ordered list of transforms plus the seed of the RNG they draw from.
struct Chain {
  std::vector<TransformSpec> ops;
  std::uint64_t seed = 0;
  friend bool operator==(const Chain&, const Chain&) = default;
};

nlohmann::json to_json(const Chain& c);
Chain chain_from_json(const nlohmann::json& j);

RasterImage apply_chain(const RasterImage& img, const Chain& chain);

// Clips every bin to `limit` and spreads the excess over all bins. The total
// count is preserved exactly.
void clip_histogram(std::array<std::uint32_t, 256>& hist, std::uint32_t limit);

// Rec.601 luma.
inline double luma(double r, double g, double b) noexcept {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

}  // namespace osfr
