#pragma once

// Online open-set evaluation: every probe is recognized against the gallery
// built from the probes before it, classified into one of five outcomes, and
// then enrolled under its true label.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "osfr/embedding_db.hpp"

namespace osfr {

enum class Outcome : std::uint8_t {
  kTrueAccept,
  kFalseReject,
  kIdentificationError,
  kFalseAccept,
  kTrueReject,
};

inline constexpr std::array<Outcome, 5> kAllOutcomes = {
    Outcome::kTrueAccept, Outcome::kFalseReject, Outcome::kIdentificationError,
    Outcome::kFalseAccept, Outcome::kTrueReject};

// "TA", "FR", "IE", "FA", "TR".
std::string_view to_string(Outcome o) noexcept;
Outcome outcome_from_string(std::string_view s);

// `truth_known` is whether the true label was already enrolled before this
// probe was registered.
Outcome classify(const Decision& decision, const Label& truth, bool truth_known) noexcept;
Outcome classify(const Decision& decision, const Label& truth, const std::set<Label>& known);

struct Tally {
  std::array<std::uint64_t, 5> counts{};

  std::uint64_t& operator[](Outcome o) noexcept { return counts[static_cast<std::size_t>(o)]; }
  std::uint64_t operator[](Outcome o) const noexcept {
    return counts[static_cast<std::size_t>(o)];
  }

  std::uint64_t ta() const noexcept { return (*this)[Outcome::kTrueAccept]; }
  std::uint64_t fr() const noexcept { return (*this)[Outcome::kFalseReject]; }
  std::uint64_t ie() const noexcept { return (*this)[Outcome::kIdentificationError]; }
  std::uint64_t fa() const noexcept { return (*this)[Outcome::kFalseAccept]; }
  std::uint64_t tr() const noexcept { return (*this)[Outcome::kTrueReject]; }

  std::uint64_t accepted() const noexcept { return ta() + ie() + fa(); }
  std::uint64_t rejected() const noexcept { return fr() + tr(); }
  std::uint64_t total() const noexcept { return accepted() + rejected(); }

  void add(Outcome o) noexcept { ++(*this)[o]; }

  friend bool operator==(const Tally&, const Tally&) = default;
};

struct StreamItem {
  std::string id;
  Embedding embedding;
  Label true_label;
};

struct RunConfig {
  GalleryConfig gallery;
  bool shuffle = true;
  std::uint64_t seed = 0;
  std::size_t runs = 10;

  // Throws UsageError on runs == 0 or an invalid gallery config.
  void validate() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.gallery.search_window == b.gallery.search_window &&
           a.gallery.update_window == b.gallery.update_window &&
           a.gallery.sigma == b.gallery.sigma && a.shuffle == b.shuffle &&
           a.seed == b.seed && a.runs == b.runs;
  }
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

struct LogRecord {
  std::string id;
  Outcome outcome = Outcome::kTrueReject;
  bool accepted = false;
  std::optional<std::string> predicted;
  std::optional<std::size_t> matched_seq;
  std::optional<double> best_score;
  std::optional<double> matched_threshold;
};

nlohmann::json to_json(const LogRecord& rec);

struct StreamResult {
  Tally tally;
  std::vector<LogRecord> log;
};

// One pass of the protocol over `items`, shuffled by `seed` when requested.
// Throws DataError naming the item when embedding dimensions disagree.
StreamResult run_stream(const std::vector<StreamItem>& items, const GalleryConfig& gallery,
                        bool shuffle, std::uint64_t seed);

// Per-metric count of runs whose value was null and left out of a mean.
struct Exclusions {
  std::uint32_t acc = 0, tar = 0, trr = 0, far = 0, frr = 0, war = 0;
  friend bool operator==(const Exclusions&, const Exclusions&) = default;
};

struct MetricsReport {
  std::optional<double> acc, tar, trr, far, frr, war;
  Tally tally;
  std::uint64_t run_seed = 0;
  // Number of runs folded into this report (1 for a single run).
  std::size_t runs = 1;
  Exclusions excluded;
  RunConfig config;
  std::vector<MetricsReport> per_run;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Rates from a tally; rates with a zero denominator are null.
MetricsReport metrics(const Tally& tally);

// Mean of each metric over the runs where it is defined. Tallies are summed.
// Throws UsageError on an empty list or mismatched configurations.
MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports);

// Seed for run `run_index` derived from the base seed by stream splitting.
std::uint64_t derive_run_seed(std::uint64_t base_seed, std::size_t run_index) noexcept;

struct Evaluation {
  std::vector<MetricsReport> runs;
  std::vector<StreamResult> streams;
  MetricsReport aggregate;
};

// Runs the protocol cfg.runs times on independent galleries, in parallel up
// to `threads` workers. Results do not depend on the thread count.
Evaluation evaluate(const std::vector<StreamItem>& items, const RunConfig& cfg,
                    unsigned threads = 0);

}  // namespace osfr
