#pragma once

// Augmentation plans: how many chains per source image and what goes into
// each chain. A chain is a pure function of (seed, image id, chain index,
// image size, policy), so plans can be rebuilt anywhere without coordination.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "osfr/transforms.hpp"

namespace osfr {

inline constexpr std::size_t kChainsPerImage = 24;

struct Range {
  double lo = 0.0, hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

// Per chain: HFlip with p_hflip; one geometric op with p_geometric; one
// photometric op with p_photometric (picked by weight); occlusion with
// p_occlusion. Applied in that order. A chain that samples no op gets an
// identity ColorJitter so every chain has at least one transform.
struct AugmentPolicy {
  double p_hflip = 0.5;

  double p_photometric = 1.0;
  double w_color_jitter = 1.0;
  double w_clahe = 1.0;
  double w_gauss_noise = 1.0;
  double w_blur = 1.0;
  double w_downscale = 1.0;

  double p_geometric = 0.5;
  double w_optical = 1.0;
  double w_grid = 1.0;

  double p_occlusion = 0.3;
  Range occlusion_area{0.02, 0.20};

  Range brightness{0.8, 1.2};
  Range contrast{0.8, 1.2};
  Range saturation{0.8, 1.2};
  Range clahe_clip{2.0, 2.0};
  int clahe_tiles = 8;
  Range blur_sigma{0.5, 1.5};
  Range downscale{0.5, 0.9};
  Range noise_std{5.0, 20.0};
  Range optical_k{-0.3, 0.3};
  int grid_cells = 5;
  Range grid_limit{0.0, 0.3};

  // Every probability zero: chains are identities.
  static AugmentPolicy neutral();

  // Throws UsageError on probabilities outside [0,1], negative weights or
  // parameter ranges outside what the transforms accept.
  void validate() const;

  friend bool operator==(const AugmentPolicy&, const AugmentPolicy&) = default;
};

nlohmann::json to_json(const AugmentPolicy& p);
AugmentPolicy policy_from_json(const nlohmann::json& j);

Chain build_chain(std::uint64_t seed, const std::string& image_id, std::size_t chain_index,
                  int width, int height, const AugmentPolicy& policy);

// Throws UsageError when n_chains < 1.
std::vector<Chain> build_plan(std::uint64_t seed, const std::string& image_id, int width,
                              int height, const AugmentPolicy& policy,
                              std::size_t n_chains = kChainsPerImage);

struct ImagePlan {
  int width = 0;
  int height = 0;
  std::vector<Chain> chains;
  friend bool operator==(const ImagePlan&, const ImagePlan&) = default;
};

// Seed + policy, optionally with chains materialized for specific images.
// Images without an entry get chains derived on demand.
struct AugmentPlan {
  std::uint64_t seed = 0;
  std::size_t n_chains = kChainsPerImage;
  AugmentPolicy policy;
  std::map<std::string, ImagePlan> images;

  // Materialized chains when present and sized for (width, height),
  // otherwise freshly derived ones.
  std::vector<Chain> chains_for(const std::string& image_id, int width, int height) const;
  Chain chain_for(const std::string& image_id, std::size_t k, int width, int height) const;

  friend bool operator==(const AugmentPlan&, const AugmentPlan&) = default;
};

inline constexpr int kPlanSchemaVersion = 1;

nlohmann::json to_json(const AugmentPlan& plan);
// Throws DataError on a version mismatch or malformed content.
AugmentPlan plan_from_json(const nlohmann::json& j);

// Attribute settings for one externally generated image.
struct AttributeCombo {
  std::string hair;
  std::string eyeglasses;
  std::string facial_hair;
  std::map<std::string, std::string> extras;

  friend bool operator==(const AttributeCombo&, const AttributeCombo&) = default;
};

// The 4 x 2 x 3 grid of hair x eyeglasses x facial hair (hair varies
// slowest), each with a seeded random subset of the remaining attributes.
std::vector<AttributeCombo> enumerate_attribute_combos(std::uint64_t seed);

nlohmann::json attribute_plan_to_json(const std::vector<AttributeCombo>& combos,
                                      std::uint64_t seed);
std::vector<AttributeCombo> attribute_plan_from_json(const nlohmann::json& j);

}  // namespace osfr
