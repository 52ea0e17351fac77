#pragma once

// Identity-aware train/test splits over a labeled image manifest.
//
//  Unique: identities are shuffled and moved whole into test until the test
//          image count first reaches ratio * N. No identity straddles.
//  Both:   each identity with two or more images contributes exactly one
//          (seeded) image to test; singleton identities stay in train.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace osfr {

struct ManifestRecord {
  std::string image_id;
  std::string label;
};

class Manifest {
 public:
  // Throws DataError on empty input or duplicate ids.
  explicit Manifest(std::vector<ManifestRecord> records);

  const std::vector<ManifestRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t identity_count() const noexcept { return by_label_.size(); }

  // Identities in order of first appearance, each with its record indices.
  const std::vector<std::pair<std::string, std::vector<std::size_t>>>& identities() const noexcept {
    return by_label_;
  }

 private:
  std::vector<ManifestRecord> records_;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> by_label_;
};

// Tab-separated `image_id<TAB>label` lines. Blank lines are skipped.
// Throws ParseError (with line number) on malformed lines or duplicate ids.
Manifest parse_manifest(std::istream& in, const std::string& source_name);
Manifest load_manifest(const std::filesystem::path& path);

enum class SplitKind { kUnique, kBoth };

std::string_view to_string(SplitKind k) noexcept;
SplitKind split_kind_from_string(std::string_view s);

struct SplitResult {
  SplitKind kind = SplitKind::kUnique;
  // Image ids in manifest order.
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  // Requested test fraction (Unique only).
  double target_ratio = 0.0;

  double test_fraction() const noexcept {
    const auto n = train.size() + test.size();
    return n == 0 ? 0.0 : static_cast<double>(test.size()) / static_cast<double>(n);
  }
};

// Throws UsageError unless 0 < test_ratio < 1, DataError when the manifest
// has a single identity.
SplitResult split_unique(const Manifest& m, std::uint64_t seed, double test_ratio = 0.1);

SplitResult split_both(const Manifest& m, std::uint64_t seed);

// Counts, ratio and seed; for Both splits also per-identity train/test counts.
nlohmann::json split_summary(const Manifest& m, const SplitResult& s);

// Writes train.txt, test.txt and summary.json into `dir` (created if needed).
void write_split(const std::filesystem::path& dir, const Manifest& m, const SplitResult& s,
                 const nlohmann::json& config_echo);

}  // namespace osfr
