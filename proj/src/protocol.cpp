#include "osfr/protocol.hpp"

#include <numeric>

#include "osfr/errors.hpp"
#include "osfr/parallel.hpp"
#include "osfr/rng.hpp"

namespace osfr {

using nlohmann::json;

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::kTrueAccept: return "TA";
    case Outcome::kFalseReject: return "FR";
    case Outcome::kIdentificationError: return "IE";
    case Outcome::kFalseAccept: return "FA";
    case Outcome::kTrueReject: return "TR";
  }
  return "?";
}

Outcome outcome_from_string(std::string_view s) {
  for (Outcome o : kAllOutcomes) {
    if (to_string(o) == s) return o;
  }
  throw DataError("unknown outcome '" + std::string(s) + "'");
}

// Rows are conditioned on whether the TRUE label is enrolled: an accepted
// prediction is always an enrolled label, so the printed "P* not in D" rows
// can only be reached through the true label.
Outcome classify(const Decision& decision, const Label& truth, bool truth_known) noexcept {
  if (const auto* acc = std::get_if<Accepted>(&decision)) {
    if (!truth_known) return Outcome::kFalseAccept;
    return acc->predicted == truth ? Outcome::kTrueAccept : Outcome::kIdentificationError;
  }
  return truth_known ? Outcome::kFalseReject : Outcome::kTrueReject;
}

Outcome classify(const Decision& decision, const Label& truth, const std::set<Label>& known) {
  return classify(decision, truth, known.contains(truth));
}

void RunConfig::validate() const {
  gallery.validate();
  if (runs == 0) throw UsageError("runs must be at least 1");
}

json to_json(const RunConfig& cfg) {
  return json{{"search_window", cfg.gallery.search_window.to_string()},
              {"update_window", cfg.gallery.update_window.to_string()},
              {"sigma", cfg.gallery.sigma},
              {"shuffle", cfg.shuffle},
              {"seed", cfg.seed},
              {"runs", cfg.runs}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  cfg.gallery.search_window = Window::parse(j.at("search_window").get<std::string>());
  cfg.gallery.update_window = Window::parse(j.at("update_window").get<std::string>());
  cfg.gallery.sigma = j.at("sigma").get<double>();
  cfg.shuffle = j.at("shuffle").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.runs = j.at("runs").get<std::size_t>();
  return cfg;
}

namespace {

template <typename T>
json nullable(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const LogRecord& rec) {
  return json{{"id", rec.id},
              {"outcome", to_string(rec.outcome)},
              {"accepted", rec.accepted},
              {"predicted", nullable(rec.predicted)},
              {"matched_seq", nullable(rec.matched_seq)},
              {"best_score", nullable(rec.best_score)},
              {"matched_threshold", nullable(rec.matched_threshold)}};
}

StreamResult run_stream(const std::vector<StreamItem>& items, const GalleryConfig& gallery_cfg,
                        bool shuffle, std::uint64_t seed) {
  StreamResult result;
  if (items.empty()) return result;

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    CounterRng rng(seed);
    rng.shuffle(std::span(order));
  }

  const std::size_t dim = items.front().embedding.dim();
  Gallery gallery(dim, gallery_cfg);
  result.log.reserve(items.size());
  for (std::size_t idx : order) {
    const StreamItem& item = items[idx];
    if (item.embedding.dim() != dim) {
      throw DataError("item '" + item.id + "': embedding dimension " +
                      std::to_string(item.embedding.dim()) + " does not match stream dimension " +
                      std::to_string(dim));
    }
    const auto match = gallery.query(item.embedding);
    const Decision decision = gallery.decide(match);
    const Outcome outcome = classify(decision, item.true_label, gallery.knows(item.true_label));
    result.tally.add(outcome);

    LogRecord rec;
    rec.id = item.id;
    rec.outcome = outcome;
    rec.accepted = is_accepted(decision);
    if (const auto* acc = std::get_if<Accepted>(&decision)) rec.predicted = acc->predicted.str();
    if (match) {
      rec.matched_seq = match->seq;
      rec.best_score = match->score;
      rec.matched_threshold = gallery.entry(match->seq).threshold;
    }
    result.log.push_back(std::move(rec));

    gallery.enroll(item.embedding, item.true_label);
  }
  return result;
}

MetricsReport metrics(const Tally& t) {
  MetricsReport r;
  r.tally = t;
  const auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const std::uint64_t acp = t.accepted();
  const std::uint64_t rej = t.rejected();
  r.acc = ratio(t.ta() + t.tr(), t.total());
  r.tar = ratio(t.ta(), acp);
  r.trr = ratio(t.tr(), rej);
  r.far = ratio(t.fa(), acp);
  r.frr = ratio(t.fr(), rej);
  r.war = ratio(t.ie(), acp);
  return r;
}

namespace {

// Mean taken relative to the first value so that constant inputs average to
// exactly that constant.
struct MeanAccumulator {
  double origin = 0.0;
  double offset_sum = 0.0;
  std::size_t count = 0;
  std::uint32_t excluded = 0;

  void add(const std::optional<double>& v) {
    if (!v) {
      ++excluded;
      return;
    }
    if (count == 0) origin = *v;
    offset_sum += *v - origin;
    ++count;
  }
  std::optional<double> mean() const {
    if (count == 0) return std::nullopt;
    return origin + offset_sum / static_cast<double>(count);
  }
};

}  // namespace

MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw UsageError("aggregate_runs: no reports");
  MeanAccumulator acc, tar, trr, far, frr, war;
  MetricsReport out;
  out.config = reports.front().config;
  out.run_seed = reports.front().config.seed;
  out.runs = reports.size();
  for (const auto& r : reports) {
    RunConfig a = r.config, b = out.config;
    a.seed = b.seed = 0;
    if (!(a == b)) throw UsageError("aggregate_runs: reports were produced with different configs");
    acc.add(r.acc);
    tar.add(r.tar);
    trr.add(r.trr);
    far.add(r.far);
    frr.add(r.frr);
    war.add(r.war);
    for (std::size_t k = 0; k < out.tally.counts.size(); ++k) {
      out.tally.counts[k] += r.tally.counts[k];
    }
    out.per_run.push_back(r);
    out.per_run.back().per_run.clear();
  }
  out.acc = acc.mean();
  out.tar = tar.mean();
  out.trr = trr.mean();
  out.far = far.mean();
  out.frr = frr.mean();
  out.war = war.mean();
  out.excluded = Exclusions{acc.excluded, tar.excluded, trr.excluded,
                            far.excluded, frr.excluded, war.excluded};
  return out;
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, std::size_t run_index) noexcept {
  return CounterRng(base_seed).split(static_cast<std::uint64_t>(run_index)).key();
}

Evaluation evaluate(const std::vector<StreamItem>& items, const RunConfig& cfg, unsigned threads) {
  cfg.validate();
  Evaluation ev;
  ev.runs.resize(cfg.runs);
  ev.streams.resize(cfg.runs);
  parallel_for(cfg.runs, threads, [&](std::size_t run) {
    const std::uint64_t seed = derive_run_seed(cfg.seed, run);
    ev.streams[run] = run_stream(items, cfg.gallery, cfg.shuffle, seed);
    MetricsReport rep = metrics(ev.streams[run].tally);
    rep.run_seed = seed;
    rep.config = cfg;
    ev.runs[run] = std::move(rep);
  });
  ev.aggregate = aggregate_runs(ev.runs);
  return ev;
}

}  // namespace osfr
