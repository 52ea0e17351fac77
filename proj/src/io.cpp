#include "osfr/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "osfr/errors.hpp"
#include "osfr/rng.hpp"
#include "osfr/version.hpp"

namespace osfr {

using nlohmann::json;

namespace {

void finish_record(EmbeddingRecord& rec, bool normalize) {
  for (double v : rec.vector) {
    if (!std::isfinite(v)) throw DataError("record '" + rec.id + "': non-finite component");
  }
  if (normalize) {
    try {
      const Embedding e = Embedding::normalized(std::move(rec.vector));
      rec.vector.assign(e.values().begin(), e.values().end());
    } catch (const DataError& e) {
      throw DataError("record '" + rec.id + "': " + e.what());
    }
  }
}

}  // namespace

std::vector<EmbeddingRecord> parse_embeddings(std::istream& in, const std::string& source_name,
                                              bool normalize) {
  std::vector<EmbeddingRecord> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  std::size_t dim_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    EmbeddingRecord rec;
    try {
      const json j = json::parse(line);
      // Provenance header written by `osfr synth`.
      if (j.contains("meta") && !j.contains("id")) continue;
      rec.id = j.at("id").get<std::string>();
      rec.label = j.at("label").get<std::string>();
      for (const auto& v : j.at("vector")) {
        if (v.is_null()) throw DataError("null component");
        rec.vector.push_back(v.get<double>());
      }
    } catch (const json::exception& e) {
      throw ParseError(source_name, lineno, std::string("malformed record: ") + e.what());
    } catch (const DataError& e) {
      throw ParseError(source_name, lineno, e.what());
    }
    if (rec.id.empty() || rec.label.empty()) {
      throw ParseError(source_name, lineno, "empty id or label");
    }
    if (rec.vector.empty()) throw ParseError(source_name, lineno, "empty vector");
    if (dim == 0) {
      dim = rec.vector.size();
      dim_line = lineno;
    } else if (rec.vector.size() != dim) {
      throw DataError(source_name + ":" + std::to_string(lineno) + ": dimension mismatch: record '" +
                      rec.id + "' has " + std::to_string(rec.vector.size()) + " components, line " +
                      std::to_string(dim_line) + " has " + std::to_string(dim));
    }
    try {
      finish_record(rec, normalize);
    } catch (const DataError& e) {
      throw ParseError(source_name, lineno, e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_embeddings(std::ostream& out, const std::vector<EmbeddingRecord>& records) {
  for (const auto& r : records) {
    out << json{{"id", r.id}, {"label", r.label}, {"vector", r.vector}}.dump() << '\n';
  }
}

namespace {

constexpr char kBinaryMagic[4] = {'O', 'S', 'F', 'E'};
constexpr std::uint32_t kBinaryVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary embedding I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& source) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw DataError(source + ": truncated binary embedding file");
  }
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, const std::string& source) {
  const auto len = get<std::uint32_t>(in, source);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw DataError(source + ": truncated string");
  return s;
}

}  // namespace

void write_embeddings_binary(std::ostream& out, const std::vector<EmbeddingRecord>& records) {
  const std::uint32_t dim = records.empty() ? 0 : static_cast<std::uint32_t>(records[0].vector.size());
  out.write(kBinaryMagic, 4);
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint32_t>(out, dim);
  put<std::uint64_t>(out, records.size());
  for (const auto& r : records) {
    if (r.vector.size() != dim) throw DataError("record '" + r.id + "': dimension mismatch");
    for (double v : r.vector) put<float>(out, static_cast<float>(v));
  }
  for (const auto& r : records) {
    put_string(out, r.id);
    put_string(out, r.label);
  }
}

std::vector<EmbeddingRecord> read_embeddings_binary(std::istream& in, const std::string& source,
                                                    bool normalize) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kBinaryMagic, 4) != 0) {
    throw DataError(source + ": not a binary embedding file");
  }
  const auto version = get<std::uint32_t>(in, source);
  if (version != kBinaryVersion) {
    throw DataError(source + ": unsupported binary version " + std::to_string(version));
  }
  const auto dim = get<std::uint32_t>(in, source);
  const auto count = get<std::uint64_t>(in, source);
  if (count > 0 && dim == 0) throw DataError(source + ": zero dimension");
  std::vector<EmbeddingRecord> out(count);
  for (auto& r : out) {
    r.vector.resize(dim);
    for (auto& v : r.vector) v = get<float>(in, source);
  }
  for (auto& r : out) {
    r.id = get_string(in, source);
    r.label = get_string(in, source);
    if (r.id.empty() || r.label.empty()) throw DataError(source + ": empty id or label");
    finish_record(r, normalize);
  }
  return out;
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path, bool normalize) {
  const bool binary = path.extension() == ".bin";
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open embeddings '" + path.string() + "'");
  return binary ? read_embeddings_binary(in, path.string(), normalize)
                : parse_embeddings(in, path.string(), normalize);
}

void save_embeddings(const std::filesystem::path& path,
                     const std::vector<EmbeddingRecord>& records) {
  const bool binary = path.extension() == ".bin";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embeddings '" + path.string() + "'");
  if (binary) {
    write_embeddings_binary(out, records);
  } else {
    write_embeddings(out, records);
  }
}

std::vector<StreamItem> to_stream_items(const std::vector<EmbeddingRecord>& records) {
  std::vector<StreamItem> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    items.push_back(StreamItem{r.id, Embedding::normalized(r.vector), Label(r.label)});
  }
  return items;
}

std::size_t SyntheticSpec::images_for(std::size_t identity) const {
  return images_per_identity.size() == 1 ? images_per_identity[0]
                                         : images_per_identity.at(identity);
}

void SyntheticSpec::validate() const {
  if (identities == 0) throw UsageError("synthetic spec needs at least one identity");
  if (dim == 0) throw UsageError("synthetic dimension must be positive");
  if (!(within_noise >= 0.0) || !std::isfinite(within_noise)) {
    throw UsageError("within-identity noise must be a finite non-negative number");
  }
  if (images_per_identity.size() != 1 && images_per_identity.size() != identities) {
    throw UsageError("images per identity: give one count or one per identity");
  }
  for (std::size_t n : images_per_identity) {
    if (n == 0) throw UsageError("every identity needs at least one image");
  }
}

std::vector<EmbeddingRecord> gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const CounterRng root(spec.seed);
  std::vector<EmbeddingRecord> out;
  std::vector<double> center(spec.dim);
  for (std::size_t k = 0; k < spec.identities; ++k) {
    const CounterRng identity_rng = root.split(static_cast<std::uint64_t>(k));
    CounterRng center_rng = identity_rng.split("center");
    for (double& c : center) c = center_rng.normal();
    const Embedding unit_center = Embedding::normalized(center);
    const std::string label = "id_" + std::to_string(k);
    for (std::size_t i = 0; i < spec.images_for(k); ++i) {
      CounterRng noise_rng = identity_rng.split(static_cast<std::uint64_t>(i));
      std::vector<double> v(unit_center.values().begin(), unit_center.values().end());
      if (spec.within_noise > 0.0) {
        for (double& x : v) x += spec.within_noise * noise_rng.normal();
      }
      const Embedding e = Embedding::normalized(std::move(v));
      out.push_back(EmbeddingRecord{label + "_" + std::to_string(i), label,
                                    std::vector<double>(e.values().begin(), e.values().end())});
    }
  }
  return out;
}

namespace {

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_nullable(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

constexpr const char* kReportSchema = "osfr.metrics";

}  // namespace

json report_to_json(const MetricsReport& r) {
  json j{{"schema", kReportSchema},
         {"version", kReportSchemaVersion},
         {"tool", std::string(kToolName) + " " + kToolVersion},
         {"run_seed", r.run_seed},
         {"runs", r.runs},
         {"config", to_json(r.config)}};
  json tally = json::object();
  for (Outcome o : kAllOutcomes) tally[std::string(to_string(o))] = r.tally[o];
  tally["N"] = r.tally.total();
  tally["ACP"] = r.tally.accepted();
  tally["REJ"] = r.tally.rejected();
  j["tally"] = std::move(tally);
  j["rates"] = {{"acc", nullable(r.acc)}, {"tar", nullable(r.tar)}, {"trr", nullable(r.trr)},
                {"far", nullable(r.far)}, {"frr", nullable(r.frr)}, {"war", nullable(r.war)}};
  j["excluded"] = {{"acc", r.excluded.acc}, {"tar", r.excluded.tar}, {"trr", r.excluded.trr},
                   {"far", r.excluded.far}, {"frr", r.excluded.frr}, {"war", r.excluded.war}};
  json per_run = json::array();
  for (const auto& sub : r.per_run) per_run.push_back(report_to_json(sub));
  j["per_run"] = std::move(per_run);
  return j;
}

MetricsReport report_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw DataError("not a metrics report");
    }
    const int version = j.at("version").get<int>();
    if (version != kReportSchemaVersion) {
      throw DataError("unsupported report version " + std::to_string(version) + " (expected " +
                      std::to_string(kReportSchemaVersion) + ")");
    }
    MetricsReport r;
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.runs = j.at("runs").get<std::size_t>();
    r.config = run_config_from_json(j.at("config"));
    const auto& tally = j.at("tally");
    for (Outcome o : kAllOutcomes) r.tally[o] = tally.at(std::string(to_string(o))).get<std::uint64_t>();
    if (tally.at("N").get<std::uint64_t>() != r.tally.total()) {
      throw DataError("tally N does not equal the sum of outcomes");
    }
    const auto& rates = j.at("rates");
    r.acc = read_nullable(rates, "acc");
    r.tar = read_nullable(rates, "tar");
    r.trr = read_nullable(rates, "trr");
    r.far = read_nullable(rates, "far");
    r.frr = read_nullable(rates, "frr");
    r.war = read_nullable(rates, "war");
    const auto& ex = j.at("excluded");
    r.excluded = Exclusions{ex.at("acc").get<std::uint32_t>(), ex.at("tar").get<std::uint32_t>(),
                            ex.at("trr").get<std::uint32_t>(), ex.at("far").get<std::uint32_t>(),
                            ex.at("frr").get<std::uint32_t>(), ex.at("war").get<std::uint32_t>()};
    for (const auto& sub : j.at("per_run")) r.per_run.push_back(report_from_json(sub));
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed report config: ") + e.what());
  }
}

void write_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report '" + path.string() + "'");
  out << report_to_json(report).dump(2) << '\n';
}

MetricsReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    return report_from_json(j);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace osfr
