#pragma once

// Incremental face gallery with per-entry adaptive thresholds.
//
// Each enrolled embedding carries a threshold T. On enrollment of a new
// embedding x, let U be the most recent W entries already in the gallery:
//
//   T_new = sigma * max_{j in U} S(x, j)          (unset if U is empty)
//   T_j   = max(T_j, sigma * S(x, j))  for j in U (unset counts as -inf)
//
// A probe is accepted when its best match m (within the search window)
// satisfies S(probe, m) >= T_m. An unset threshold never accepts.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace osfr {

// Unit-norm feature vector.
class Embedding {
 public:
  static constexpr double kNormTolerance = 1e-4;

  // L2-normalizes `values`. Throws DataError on empty input, non-finite
  // components or a zero vector.
  static Embedding normalized(std::vector<double> values);

  // Wraps values that are already unit-norm (within kNormTolerance).
  static Embedding from_unit(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

// Identity label. Non-empty, compared by exact byte equality.
class Label {
 public:
  explicit Label(std::string value);

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const Label&, const Label&) = default;

 private:
  std::string value_;
};

// Cosine similarity of two unit vectors. Throws UsageError on dimension
// mismatch. Symmetric bit-for-bit.
double similarity(const Embedding& a, const Embedding& b);

// Number of most recent entries an operation looks at.
class Window {
 public:
  static Window unbounded() noexcept { return Window(); }
  // Throws UsageError when n == 0.
  static Window last(std::size_t n);

  bool is_unbounded() const noexcept { return !limit_.has_value(); }
  std::optional<std::size_t> limit() const noexcept { return limit_; }

  // First index of the window over a list of `size` entries.
  std::size_t begin_index(std::size_t size) const noexcept {
    return (limit_ && *limit_ < size) ? size - *limit_ : 0;
  }

  std::string to_string() const;
  // Accepts a positive integer or "unbounded".
  static Window parse(std::string_view text);

  friend bool operator==(const Window&, const Window&) = default;

 private:
  Window() = default;
  explicit Window(std::size_t n) : limit_(n) {}

  std::optional<std::size_t> limit_;
};

struct GalleryConfig {
  Window search_window = Window::last(100);
  Window update_window = Window::last(100);
  double sigma = 1.0;

  // Throws UsageError unless sigma is finite and positive.
  void validate() const;
};

struct GalleryEntry {
  Embedding embedding;
  Label label;
  std::optional<double> threshold;
  std::size_t seq = 0;
};

struct Match {
  std::size_t seq = 0;
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct Accepted {
  Label predicted;
  Match match;
};

struct Rejected {
  std::optional<Match> best;
};

using Decision = std::variant<Accepted, Rejected>;

inline bool is_accepted(const Decision& d) noexcept {
  return std::holds_alternative<Accepted>(d);
}

class Gallery {
 public:
  Gallery(std::size_t dim, GalleryConfig config);

  std::size_t dim() const noexcept { return dim_; }
  const GalleryConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<GalleryEntry>& entries() const noexcept { return entries_; }
  const GalleryEntry& entry(std::size_t seq) const { return entries_.at(seq); }

  // Best entry in the search window; ties go to the smallest seq.
  std::optional<Match> query(const Embedding& probe) const;

  Decision decide(const std::optional<Match>& match) const;

  Decision recognize(const Embedding& probe) const { return decide(query(probe)); }

  // Appends an entry and updates thresholds of the update window. Returns the
  // new entry's seq.
  std::size_t enroll(Embedding embedding, Label label);

  bool knows(const Label& label) const { return label_counts_.contains(label); }
  std::set<Label> known_labels() const;

  // Versioned text dump: seq, label, threshold and leading components.
  void dump(std::ostream& out) const;

 private:
  void check_dim(const Embedding& e) const;

  std::size_t dim_;
  GalleryConfig config_;
  std::vector<GalleryEntry> entries_;
  std::map<Label, std::size_t> label_counts_;
};

}  // namespace osfr
