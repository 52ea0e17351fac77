#include "osfr/splitter.hpp"

#include <fstream>
#include <istream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "osfr/errors.hpp"
#include "osfr/rng.hpp"
#include "osfr/version.hpp"

namespace osfr {

Manifest::Manifest(std::vector<ManifestRecord> records) : records_(std::move(records)) {
  if (records_.empty()) throw DataError("manifest is empty");
  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!ids.insert(r.image_id).second) throw DataError("duplicate image id '" + r.image_id + "'");
    auto [it, inserted] = slot.try_emplace(r.label, by_label_.size());
    if (inserted) by_label_.emplace_back(r.label, std::vector<std::size_t>{});
    by_label_[it->second].second.push_back(i);
  }
}

Manifest parse_manifest(std::istream& in, const std::string& source_name) {
  std::vector<ManifestRecord> records;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(source_name, lineno, "expected 'image_id<TAB>label'");
    }
    ManifestRecord rec{line.substr(0, tab), line.substr(tab + 1)};
    if (rec.image_id.empty() || rec.label.empty()) {
      throw ParseError(source_name, lineno, "empty image id or label");
    }
    if (!ids.insert(rec.image_id).second) {
      throw ParseError(source_name, lineno, "duplicate image id '" + rec.image_id + "'");
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError(source_name + ": manifest is empty");
  return Manifest(std::move(records));
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.string());
}

std::string_view to_string(SplitKind k) noexcept {
  return k == SplitKind::kUnique ? "unique" : "both";
}

SplitKind split_kind_from_string(std::string_view s) {
  if (s == "unique") return SplitKind::kUnique;
  if (s == "both") return SplitKind::kBoth;
  throw UsageError("split kind must be 'unique' or 'both'");
}

namespace {

SplitResult collect(const Manifest& m, SplitKind kind, std::uint64_t seed,
                    const std::vector<bool>& in_test) {
  SplitResult out;
  out.kind = kind;
  out.seed = seed;
  for (std::size_t i = 0; i < m.size(); ++i) {
    (in_test[i] ? out.test : out.train).push_back(m.records()[i].image_id);
  }
  return out;
}

}  // namespace

SplitResult split_unique(const Manifest& m, std::uint64_t seed, double test_ratio) {
  if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
    throw UsageError("test ratio must lie strictly between 0 and 1");
  }
  const auto& ids = m.identities();
  if (ids.size() < 2) throw DataError("unique split needs at least two identities");

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng = CounterRng(seed).split("split-unique");
  rng.shuffle(std::span(order));

  const double target = test_ratio * static_cast<double>(m.size());
  std::vector<bool> in_test(m.size(), false);
  std::size_t test_count = 0;
  // The last identity in shuffled order always stays in train.
  for (std::size_t k = 0; k + 1 < order.size() && static_cast<double>(test_count) < target; ++k) {
    for (std::size_t rec : ids[order[k]].second) in_test[rec] = true;
    test_count += ids[order[k]].second.size();
  }
  SplitResult out = collect(m, SplitKind::kUnique, seed, in_test);
  out.target_ratio = test_ratio;
  return out;
}

SplitResult split_both(const Manifest& m, std::uint64_t seed) {
  std::vector<bool> in_test(m.size(), false);
  const CounterRng root = CounterRng(seed).split("split-both");
  for (const auto& [label, recs] : m.identities()) {
    if (recs.size() < 2) continue;
    CounterRng rng = root.split(label);
    in_test[recs[rng.below(recs.size())]] = true;
  }
  return collect(m, SplitKind::kBoth, seed, in_test);
}

nlohmann::json split_summary(const Manifest& m, const SplitResult& s) {
  nlohmann::json j{{"kind", to_string(s.kind)},
                   {"seed", s.seed},
                   {"images", m.size()},
                   {"identities", m.identity_count()},
                   {"train_images", s.train.size()},
                   {"test_images", s.test.size()},
                   {"test_fraction", s.test_fraction()}};
  if (s.kind == SplitKind::kUnique) j["target_ratio"] = s.target_ratio;

  std::unordered_set<std::string> test_ids(s.test.begin(), s.test.end());
  std::size_t train_identities = 0, test_identities = 0;
  nlohmann::json per_identity = nlohmann::json::object();
  for (const auto& [label, recs] : m.identities()) {
    std::size_t in_test = 0;
    for (std::size_t r : recs) in_test += test_ids.contains(m.records()[r].image_id) ? 1 : 0;
    if (in_test > 0) ++test_identities;
    if (in_test < recs.size()) ++train_identities;
    if (s.kind == SplitKind::kBoth) {
      per_identity[label] = {{"train", recs.size() - in_test}, {"test", in_test}};
    }
  }
  j["train_identities"] = train_identities;
  j["test_identities"] = test_identities;
  if (s.kind == SplitKind::kBoth) j["per_identity"] = std::move(per_identity);
  return j;
}

void write_split(const std::filesystem::path& dir, const Manifest& m, const SplitResult& s,
                 const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  const auto write_ids = [&](const char* name, const std::vector<std::string>& ids) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError("cannot write '" + (dir / name).string() + "'");
    for (const auto& id : ids) out << id << '\n';
  };
  write_ids("train.txt", s.train);
  write_ids("test.txt", s.test);
  nlohmann::json summary = split_summary(m, s);
  summary["tool"] = std::string(kToolName) + " " + kToolVersion;
  summary["config"] = config_echo;
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw DataError("cannot write summary in '" + dir.string() + "'");
  out << summary.dump(2) << '\n';
}

}  // namespace osfr
