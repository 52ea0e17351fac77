#include "osfr/plan.hpp"

#include <array>
#include <cmath>

#include "osfr/errors.hpp"
#include "osfr/version.hpp"

namespace osfr {

using nlohmann::json;

AugmentPolicy AugmentPolicy::neutral() {
  AugmentPolicy p;
  p.p_hflip = p.p_photometric = p.p_geometric = p.p_occlusion = 0.0;
  return p;
}

void AugmentPolicy::validate() const {
  const auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError(std::string(name) + " must lie in [0, 1]");
  };
  const auto weight = [](double w, const char* name) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw UsageError(std::string(name) + " must be non-negative");
    }
  };
  const auto range = [](const Range& r, double lo, double hi, bool open_lo, bool open_hi,
                        const char* name) {
    const bool lo_ok = open_lo ? r.lo > lo : r.lo >= lo;
    const bool hi_ok = open_hi ? r.hi < hi : r.hi <= hi;
    if (!(lo_ok && hi_ok && r.lo <= r.hi)) {
      throw UsageError(std::string(name) + " range is invalid");
    }
  };
  prob(p_hflip, "p_hflip");
  prob(p_photometric, "p_photometric");
  prob(p_geometric, "p_geometric");
  prob(p_occlusion, "p_occlusion");
  weight(w_color_jitter, "w_color_jitter");
  weight(w_clahe, "w_clahe");
  weight(w_gauss_noise, "w_gauss_noise");
  weight(w_blur, "w_blur");
  weight(w_downscale, "w_downscale");
  weight(w_optical, "w_optical");
  weight(w_grid, "w_grid");
  if (p_photometric > 0.0 &&
      w_color_jitter + w_clahe + w_gauss_noise + w_blur + w_downscale <= 0.0) {
    throw UsageError("photometric weights must not all be zero");
  }
  if (p_geometric > 0.0 && w_optical + w_grid <= 0.0) {
    throw UsageError("geometric weights must not all be zero");
  }
  constexpr double kInf = 1e300;
  range(occlusion_area, 0.0, 1.0, true, false, "occlusion_area");
  range(brightness, 0.0, kInf, true, true, "brightness");
  range(contrast, 0.0, kInf, true, true, "contrast");
  range(saturation, 0.0, kInf, true, true, "saturation");
  range(clahe_clip, 0.0, kInf, true, true, "clahe_clip");
  range(blur_sigma, 0.0, kInf, true, true, "blur_sigma");
  range(downscale, 0.0, 1.0, true, true, "downscale");
  range(noise_std, 0.0, kInf, false, true, "noise_std");
  range(optical_k, -kInf, kInf, true, true, "optical_k");
  range(grid_limit, 0.0, 1.0, false, true, "grid_limit");
  if (clahe_tiles < 1) throw UsageError("clahe_tiles must be at least 1");
  if (grid_cells < 2) throw UsageError("grid_cells must be at least 2");
}

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j) { return Range{j.at(0).get<double>(), j.at(1).get<double>()}; }

double draw(CounterRng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

// Index picked proportionally to `weights`.
std::size_t pick(CounterRng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform01() * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

Occlusion draw_occlusion(CounterRng& rng, const AugmentPolicy& p, int width, int height) {
  const double area = draw(rng, p.occlusion_area) * width * height;
  const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  const int w = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, width);
  const int h = std::clamp(static_cast<int>(std::lround(std::sqrt(area / aspect))), 1, height);
  const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - w + 1)));
  const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - h + 1)));
  return Occlusion{x, y, w, h};
}

}  // namespace

json to_json(const AugmentPolicy& p) {
  return json{{"p_hflip", p.p_hflip},
              {"p_photometric", p.p_photometric},
              {"w_color_jitter", p.w_color_jitter},
              {"w_clahe", p.w_clahe},
              {"w_gauss_noise", p.w_gauss_noise},
              {"w_blur", p.w_blur},
              {"w_downscale", p.w_downscale},
              {"p_geometric", p.p_geometric},
              {"w_optical", p.w_optical},
              {"w_grid", p.w_grid},
              {"p_occlusion", p.p_occlusion},
              {"occlusion_area", range_json(p.occlusion_area)},
              {"brightness", range_json(p.brightness)},
              {"contrast", range_json(p.contrast)},
              {"saturation", range_json(p.saturation)},
              {"clahe_clip", range_json(p.clahe_clip)},
              {"clahe_tiles", p.clahe_tiles},
              {"blur_sigma", range_json(p.blur_sigma)},
              {"downscale", range_json(p.downscale)},
              {"noise_std", range_json(p.noise_std)},
              {"optical_k", range_json(p.optical_k)},
              {"grid_cells", p.grid_cells},
              {"grid_limit", range_json(p.grid_limit)}};
}

// Missing keys keep their defaults, so partial policy files are accepted.
AugmentPolicy policy_from_json(const json& j) {
  AugmentPolicy p;
  const auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  const auto rng = [&](const char* key, Range& field) {
    if (j.contains(key)) field = range_from(j.at(key));
  };
  try {
    num("p_hflip", p.p_hflip);
    num("p_photometric", p.p_photometric);
    num("w_color_jitter", p.w_color_jitter);
    num("w_clahe", p.w_clahe);
    num("w_gauss_noise", p.w_gauss_noise);
    num("w_blur", p.w_blur);
    num("w_downscale", p.w_downscale);
    num("p_geometric", p.p_geometric);
    num("w_optical", p.w_optical);
    num("w_grid", p.w_grid);
    num("p_occlusion", p.p_occlusion);
    rng("occlusion_area", p.occlusion_area);
    rng("brightness", p.brightness);
    rng("contrast", p.contrast);
    rng("saturation", p.saturation);
    rng("clahe_clip", p.clahe_clip);
    if (j.contains("clahe_tiles")) p.clahe_tiles = j.at("clahe_tiles").get<int>();
    rng("blur_sigma", p.blur_sigma);
    rng("downscale", p.downscale);
    rng("noise_std", p.noise_std);
    rng("optical_k", p.optical_k);
    if (j.contains("grid_cells")) p.grid_cells = j.at("grid_cells").get<int>();
    rng("grid_limit", p.grid_limit);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed policy: ") + e.what());
  }
  try {
    p.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("invalid policy: ") + e.what());
  }
  return p;
}

Chain build_chain(std::uint64_t seed, const std::string& image_id, std::size_t chain_index,
                  int width, int height, const AugmentPolicy& p) {
  if (width <= 0 || height <= 0) throw UsageError("image dimensions must be positive");
  const CounterRng stream = CounterRng(seed).split(image_id).split(chain_index);
  CounterRng rng = stream.split("plan");
  Chain chain;
  chain.seed = stream.split("apply").key();

  // Every decision is drawn regardless of outcome so that changing one
  // probability does not shift the draws of the others.
  const bool flip = rng.bernoulli(p.p_hflip);
  const bool geometric = rng.bernoulli(p.p_geometric);
  const bool photometric = rng.bernoulli(p.p_photometric);
  const bool occlude = rng.bernoulli(p.p_occlusion);

  if (flip) chain.ops.emplace_back(HFlip{});
  if (geometric) {
    const std::array<double, 2> w{p.w_optical, p.w_grid};
    if (pick(rng, w) == 0) {
      chain.ops.emplace_back(OpticalDistortion{draw(rng, p.optical_k)});
    } else {
      chain.ops.emplace_back(GridDistortion{p.grid_cells, draw(rng, p.grid_limit)});
    }
  }
  if (photometric) {
    const std::array<double, 5> w{p.w_color_jitter, p.w_clahe, p.w_gauss_noise, p.w_blur,
                                  p.w_downscale};
    switch (pick(rng, w)) {
      case 0: {
        const double b = draw(rng, p.brightness);
        const double c = draw(rng, p.contrast);
        const double s = draw(rng, p.saturation);
        chain.ops.emplace_back(ColorJitter{b, c, s});
        break;
      }
      case 1: chain.ops.emplace_back(Clahe{draw(rng, p.clahe_clip), p.clahe_tiles}); break;
      case 2: chain.ops.emplace_back(GaussNoise{draw(rng, p.noise_std)}); break;
      case 3: chain.ops.emplace_back(GaussianBlur{draw(rng, p.blur_sigma)}); break;
      default: chain.ops.emplace_back(Downscale{draw(rng, p.downscale)}); break;
    }
  }
  if (occlude) chain.ops.emplace_back(draw_occlusion(rng, p, width, height));
  if (chain.ops.empty()) chain.ops.emplace_back(ColorJitter{1.0, 1.0, 1.0});
  return chain;
}

std::vector<Chain> build_plan(std::uint64_t seed, const std::string& image_id, int width,
                              int height, const AugmentPolicy& policy, std::size_t n_chains) {
  if (n_chains < 1) throw UsageError("a plan needs at least one chain per image");
  policy.validate();
  std::vector<Chain> chains;
  chains.reserve(n_chains);
  for (std::size_t k = 0; k < n_chains; ++k) {
    chains.push_back(build_chain(seed, image_id, k, width, height, policy));
  }
  return chains;
}

std::vector<Chain> AugmentPlan::chains_for(const std::string& image_id, int width,
                                           int height) const {
  if (auto it = images.find(image_id);
      it != images.end() && it->second.width == width && it->second.height == height) {
    return it->second.chains;
  }
  return build_plan(seed, image_id, width, height, policy, n_chains);
}

Chain AugmentPlan::chain_for(const std::string& image_id, std::size_t k, int width,
                             int height) const {
  if (k >= n_chains) throw UsageError("chain index out of range");
  if (auto it = images.find(image_id);
      it != images.end() && it->second.width == width && it->second.height == height) {
    return it->second.chains.at(k);
  }
  return build_chain(seed, image_id, k, width, height, policy);
}

json to_json(const AugmentPlan& plan) {
  json images = json::object();
  for (const auto& [id, ip] : plan.images) {
    json chains = json::array();
    for (const auto& c : ip.chains) chains.push_back(to_json(c));
    images[id] = {{"width", ip.width}, {"height", ip.height}, {"chains", std::move(chains)}};
  }
  return json{{"schema", "osfr.augment-plan"},
              {"version", kPlanSchemaVersion},
              {"tool", std::string(kToolName) + " " + kToolVersion},
              {"seed", plan.seed},
              {"n_chains", plan.n_chains},
              {"policy", to_json(plan.policy)},
              {"images", std::move(images)}};
}

AugmentPlan plan_from_json(const json& j) {
  AugmentPlan plan;
  try {
    if (j.at("schema").get<std::string>() != "osfr.augment-plan") {
      throw DataError("not an augmentation plan");
    }
    if (j.at("version").get<int>() != kPlanSchemaVersion) {
      throw DataError("unsupported plan version " + j.at("version").dump());
    }
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.n_chains = j.at("n_chains").get<std::size_t>();
    if (plan.n_chains < 1) throw DataError("plan needs at least one chain per image");
    plan.policy = policy_from_json(j.at("policy"));
    for (const auto& [id, ip] : j.at("images").items()) {
      ImagePlan image{ip.at("width").get<int>(), ip.at("height").get<int>(), {}};
      for (const auto& c : ip.at("chains")) image.chains.push_back(chain_from_json(c));
      if (image.chains.size() != plan.n_chains) {
        throw DataError("image '" + id + "' has " + std::to_string(image.chains.size()) +
                        " chains, expected " + std::to_string(plan.n_chains));
      }
      plan.images.emplace(id, std::move(image));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

namespace {

constexpr std::array<const char*, 4> kHair = {"bald", "blond", "black", "brown"};
constexpr std::array<const char*, 2> kEyeglasses = {"yes", "no"};
constexpr std::array<const char*, 3> kFacialHair = {"beard", "mustache", "none"};

struct ExtraAttribute {
  const char* name;
  std::array<const char*, 2> values;
};

constexpr std::array<ExtraAttribute, 6> kExtras = {{
    {"age", {"old", "young"}},
    {"bangs", {"yes", "no"}},
    {"eyebrows", {"usual", "bushy"}},
    {"gender", {"male", "female"}},
    {"mouth", {"open", "closed"}},
    {"skin", {"pale", "usual"}},
}};

}  // namespace

std::vector<AttributeCombo> enumerate_attribute_combos(std::uint64_t seed) {
  const CounterRng root = CounterRng(seed).split("attributes");
  std::vector<AttributeCombo> out;
  out.reserve(kHair.size() * kEyeglasses.size() * kFacialHair.size());
  for (const char* hair : kHair) {
    for (const char* glasses : kEyeglasses) {
      for (const char* facial : kFacialHair) {
        AttributeCombo combo{hair, glasses, facial, {}};
        CounterRng rng = root.split(out.size());
        for (const auto& extra : kExtras) {
          const bool include = rng.bernoulli(0.5);
          const auto value = rng.below(2);
          if (include) combo.extras.emplace(extra.name, extra.values[value]);
        }
        out.push_back(std::move(combo));
      }
    }
  }
  return out;
}

json attribute_plan_to_json(const std::vector<AttributeCombo>& combos, std::uint64_t seed) {
  json list = json::array();
  for (std::size_t k = 0; k < combos.size(); ++k) {
    const auto& c = combos[k];
    list.push_back({{"index", k},
                    {"hair", c.hair},
                    {"eyeglasses", c.eyeglasses},
                    {"facial_hair", c.facial_hair},
                    {"extras", c.extras}});
  }
  return json{{"schema", "osfr.attribute-plan"},
              {"version", kPlanSchemaVersion},
              {"tool", std::string(kToolName) + " " + kToolVersion},
              {"seed", seed},
              {"output_name", "<id>_attr<index>"},
              {"combos", std::move(list)}};
}

std::vector<AttributeCombo> attribute_plan_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != "osfr.attribute-plan" ||
        j.at("version").get<int>() != kPlanSchemaVersion) {
      throw DataError("not a version " + std::to_string(kPlanSchemaVersion) + " attribute plan");
    }
    std::vector<AttributeCombo> out;
    for (const auto& c : j.at("combos")) {
      out.push_back(AttributeCombo{c.at("hair").get<std::string>(),
                                   c.at("eyeglasses").get<std::string>(),
                                   c.at("facial_hair").get<std::string>(),
                                   c.at("extras").get<std::map<std::string, std::string>>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed attribute plan: ") + e.what());
  }
}

}  // namespace osfr
