#include "osfr/pipeline.hpp"

#include <algorithm>
#include <optional>
#include <regex>
#include <set>

#include "osfr/errors.hpp"
#include "osfr/parallel.hpp"

namespace osfr {

namespace fs = std::filesystem;
using nlohmann::json;

json GenerationReport::to_json() const {
  json failures_json = json::array();
  for (const auto& f : failures) failures_json.push_back({{"id", f.id}, {"reason", f.reason}});
  return json{{"mode", mode},
              {"sources", sources},
              {"output_count", outputs.size()},
              {"outputs", outputs},
              {"failures", std::move(failures_json)}};
}

namespace {

struct SourceResult {
  std::vector<std::string> outputs;
  std::vector<GenerationFailure> failures;
};

GenerationReport merge(std::string mode, std::size_t sources, std::vector<SourceResult> results) {
  GenerationReport report;
  report.mode = std::move(mode);
  report.sources = sources;
  for (auto& r : results) {
    report.outputs.insert(report.outputs.end(), r.outputs.begin(), r.outputs.end());
    report.failures.insert(report.failures.end(), r.failures.begin(), r.failures.end());
  }
  std::sort(report.outputs.begin(), report.outputs.end());
  return report;
}

std::string output_name(const std::string& id, std::size_t k, const fs::path& ext) {
  return id + "_aug" + std::to_string(k) + ext.string();
}

}  // namespace

GenerationReport run_basic(const fs::path& src_dir, const AugmentPlan& plan,
                           const fs::path& out_dir, unsigned threads) {
  plan.policy.validate();
  const auto sources = list_images(src_dir);
  fs::create_directories(out_dir);
  std::vector<SourceResult> results(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    const fs::path& path = sources[i];
    const std::string id = path.stem().string();
    auto& res = results[i];
    try {
      const RasterImage img = read_image(path);
      const auto chains = plan.chains_for(id, img.width(), img.height());
      for (std::size_t k = 0; k < chains.size(); ++k) {
        const std::string name = output_name(id, k, path.extension());
        write_image(apply_chain(img, chains[k]), out_dir / name);
        res.outputs.push_back(name);
      }
    } catch (const DataError& e) {
      res.failures.push_back({id, e.what()});
    }
  });
  return merge("basic", sources.size(), std::move(results));
}

GenerationReport run_combined(const fs::path& generated_dir, const AugmentPlan& plan,
                              const fs::path& out_dir, unsigned threads) {
  plan.policy.validate();
  static const std::regex kAttrName(R"((.+)_attr(\d+))");
  // id -> attribute index -> path
  std::map<std::string, std::map<std::size_t, fs::path>> groups;
  std::vector<GenerationFailure> stray;
  for (const auto& path : list_images(generated_dir)) {
    const std::string stem = path.stem().string();
    std::smatch m;
    if (!std::regex_match(stem, m, kAttrName)) {
      stray.push_back({stem, "file name does not match <id>_attr<k>"});
      continue;
    }
    const std::size_t k = std::stoul(m[2].str());
    if (k >= plan.n_chains) {
      stray.push_back({m[1].str(), "attribute index " + m[2].str() + " is out of range"});
      continue;
    }
    groups[m[1].str()][k] = path;
  }
  fs::create_directories(out_dir);

  std::vector<std::pair<std::string, std::map<std::size_t, fs::path>>> work(groups.begin(),
                                                                            groups.end());
  std::vector<SourceResult> results(work.size());
  parallel_for(work.size(), threads, [&](std::size_t i) {
    const auto& [id, images] = work[i];
    auto& res = results[i];
    for (std::size_t k = 0; k < plan.n_chains; ++k) {
      const auto it = images.find(k);
      if (it == images.end()) {
        res.failures.push_back({id, "missing attribute image " + std::to_string(k)});
        continue;
      }
      try {
        const RasterImage img = read_image(it->second);
        const Chain chain = plan.chain_for(id, k, img.width(), img.height());
        const std::string name = output_name(id, k, it->second.extension());
        write_image(apply_chain(img, chain), out_dir / name);
        res.outputs.push_back(name);
      } catch (const DataError& e) {
        res.failures.push_back({id, e.what()});
      }
    }
  });
  GenerationReport report = merge("combined", work.size(), std::move(results));
  report.failures.insert(report.failures.end(), stray.begin(), stray.end());
  return report;
}

GenerationReport run_align(const fs::path& src_dir,
                           const std::map<std::string, LandmarkSet>& landmarks,
                           const LandmarkSet& tmpl, const fs::path& out_dir, int out_width,
                           int out_height, unsigned threads) {
  const auto sources = list_images(src_dir);
  fs::create_directories(out_dir);
  std::vector<SourceResult> results(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    const fs::path& path = sources[i];
    const std::string id = path.stem().string();
    auto& res = results[i];
    const auto it = landmarks.find(id);
    if (it == landmarks.end()) {
      res.failures.push_back({id, "no landmarks for image"});
      return;
    }
    try {
      if (it->second.size() != tmpl.size()) {
        throw DataError("landmark count differs from template");
      }
      const RasterImage img = read_image(path);
      const std::string name = id + path.extension().string();
      write_image(align_affine(img, it->second, tmpl, out_width, out_height), out_dir / name);
      res.outputs.push_back(name);
    } catch (const DataError& e) {
      res.failures.push_back({id, e.what()});
    }
  });
  GenerationReport report = merge("align", sources.size(), std::move(results));
  std::set<std::string> seen;
  for (const auto& path : sources) seen.insert(path.stem().string());
  for (const auto& [id, pts] : landmarks) {
    if (!seen.contains(id)) report.failures.push_back({id, "no image for landmarks"});
  }
  std::stable_sort(report.failures.begin(), report.failures.end(),
                   [](const auto& a, const auto& b) { return a.id < b.id; });
  return report;
}

}  // namespace osfr
