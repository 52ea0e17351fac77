#pragma once

// Directory-level augmentation runs. Sources are processed independently
// (in parallel) and the report is merged in image-id order, so outputs and
// reports do not depend on the thread count.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "osfr/align.hpp"
#include "osfr/plan.hpp"

namespace osfr {

struct GenerationFailure {
  std::string id;
  std::string reason;
  friend bool operator==(const GenerationFailure&, const GenerationFailure&) = default;
};

struct GenerationReport {
  std::string mode;
  std::size_t sources = 0;
  std::vector<std::string> outputs;  // file names, sorted
  std::vector<GenerationFailure> failures;

  nlohmann::json to_json() const;
};

// Writes `<id>_aug<k>.<ext>` for every source image in `src_dir` and every
// chain k of the plan. Unreadable sources are reported and skipped.
GenerationReport run_basic(const std::filesystem::path& src_dir, const AugmentPlan& plan,
                           const std::filesystem::path& out_dir, unsigned threads = 0);

// Expects `<id>_attr<k>.<ext>` images in `generated_dir` and applies chain k
// of the plan for `<id>` to attribute image k, writing `<id>_aug<k>.<ext>`.
// Missing or unreadable attribute images are reported per id.
GenerationReport run_combined(const std::filesystem::path& generated_dir, const AugmentPlan& plan,
                              const std::filesystem::path& out_dir, unsigned threads = 0);

// Aligns each image listed in `landmarks` onto `tmpl`, writing `<id>.<ext>`.
GenerationReport run_align(const std::filesystem::path& src_dir,
                           const std::map<std::string, LandmarkSet>& landmarks,
                           const LandmarkSet& tmpl, const std::filesystem::path& out_dir,
                           int out_width = 0, int out_height = 0, unsigned threads = 0);

}  // namespace osfr
