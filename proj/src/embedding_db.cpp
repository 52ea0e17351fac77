#include "osfr/embedding_db.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "osfr/errors.hpp"

namespace osfr {

Embedding Embedding::normalized(std::vector<double> values) {
  if (values.empty()) throw DataError("embedding has no components");
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("embedding has a non-finite component");
    sq += v * v;
  }
  if (sq == 0.0) throw DataError("cannot normalize a zero embedding");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : values) v *= inv;
  return Embedding(std::move(values));
}

Embedding Embedding::from_unit(std::vector<double> values) {
  if (values.empty()) throw DataError("embedding has no components");
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("embedding has a non-finite component");
    sq += v * v;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
    throw DataError("embedding is not unit-norm (norm " + std::to_string(std::sqrt(sq)) + ")");
  }
  return Embedding(std::move(values));
}

Label::Label(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw DataError("label must be non-empty");
}

double similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw UsageError("similarity: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
  const auto x = a.values();
  const auto y = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return dot;
}

Window Window::last(std::size_t n) {
  if (n == 0) throw UsageError("window must be a positive integer or 'unbounded'");
  return Window(n);
}

std::string Window::to_string() const {
  return limit_ ? std::to_string(*limit_) : std::string("unbounded");
}

Window Window::parse(std::string_view text) {
  if (text == "unbounded" || text == "inf") return unbounded();
  std::size_t n = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, n);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("invalid window '" + std::string(text) + "'");
  }
  return last(n);
}

void GalleryConfig::validate() const {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw UsageError("sigma must be a positive finite number");
  }
}

Gallery::Gallery(std::size_t dim, GalleryConfig config) : dim_(dim), config_(config) {
  if (dim == 0) throw UsageError("gallery dimension must be positive");
  config_.validate();
}

void Gallery::check_dim(const Embedding& e) const {
  if (e.dim() != dim_) {
    throw UsageError("embedding dimension " + std::to_string(e.dim()) +
                     " does not match gallery dimension " + std::to_string(dim_));
  }
}

std::optional<Match> Gallery::query(const Embedding& probe) const {
  check_dim(probe);
  if (entries_.empty()) return std::nullopt;
  const std::size_t first = config_.search_window.begin_index(entries_.size());
  Match best{first, similarity(probe, entries_[first].embedding)};
  for (std::size_t i = first + 1; i < entries_.size(); ++i) {
    const double s = similarity(probe, entries_[i].embedding);
    if (s > best.score) best = Match{i, s};
  }
  return best;
}

Decision Gallery::decide(const std::optional<Match>& match) const {
  if (!match) return Rejected{};
  const GalleryEntry& e = entries_.at(match->seq);
  if (e.threshold && match->score >= *e.threshold) {
    return Accepted{e.label, *match};
  }
  return Rejected{match};
}

std::size_t Gallery::enroll(Embedding embedding, Label label) {
  check_dim(embedding);
  const std::size_t seq = entries_.size();
  const std::size_t first = config_.update_window.begin_index(seq);
  std::optional<double> own;
  for (std::size_t j = first; j < seq; ++j) {
    const double scaled = config_.sigma * similarity(embedding, entries_[j].embedding);
    own = own ? std::max(*own, scaled) : scaled;
    auto& t = entries_[j].threshold;
    t = t ? std::max(*t, scaled) : scaled;
  }
  ++label_counts_[label];
  entries_.push_back(GalleryEntry{std::move(embedding), std::move(label), own, seq});
  return seq;
}

std::set<Label> Gallery::known_labels() const {
  std::set<Label> out;
  for (const auto& [label, count] : label_counts_) out.insert(label);
  return out;
}

void Gallery::dump(std::ostream& out) const {
  out << "osfr-gallery-dump 1\n";
  out << "dim " << dim_ << " sigma " << config_.sigma << " search "
      << config_.search_window.to_string() << " update " << config_.update_window.to_string()
      << " entries " << entries_.size() << '\n';
  for (const auto& e : entries_) {
    out << e.seq << '\t' << e.label.str() << '\t';
    if (e.threshold) {
      out << *e.threshold;
    } else {
      out << "unset";
    }
    const auto v = e.embedding.values();
    for (std::size_t i = 0; i < std::min<std::size_t>(4, v.size()); ++i) out << '\t' << v[i];
    out << '\n';
  }
}

}  // namespace osfr
