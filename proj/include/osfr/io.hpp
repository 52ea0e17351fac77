#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "osfr/protocol.hpp"

namespace osfr {

struct EmbeddingRecord {
  std::string id;
  std::string label;
  std::vector<double> vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

// Line-delimited JSON, one `{"id":..,"label":..,"vector":[..]}` per line.
// Throws ParseError with the line number on malformed input, DataError on a
// dimension mismatch, non-finite component or (when normalizing) zero vector.
std::vector<EmbeddingRecord> parse_embeddings(std::istream& in, const std::string& source_name,
                                              bool normalize = true);
void write_embeddings(std::ostream& out, const std::vector<EmbeddingRecord>& records);

// Packed binary variant, little-endian:
//   "OSFE" | u32 version=1 | u32 dim | u64 count | count*dim f32 |
//   count * (u32 len, id bytes, u32 len, label bytes)
void write_embeddings_binary(std::ostream& out, const std::vector<EmbeddingRecord>& records);
std::vector<EmbeddingRecord> read_embeddings_binary(std::istream& in,
                                                    const std::string& source_name,
                                                    bool normalize = true);

// Dispatches on the ".bin" extension; anything else is read as JSON lines.
std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path,
                                             bool normalize = true);
void save_embeddings(const std::filesystem::path& path,
                     const std::vector<EmbeddingRecord>& records);

std::vector<StreamItem> to_stream_items(const std::vector<EmbeddingRecord>& records);

struct SyntheticSpec {
  std::size_t identities = 10;
  // Either a single count for all identities or one count per identity.
  std::vector<std::size_t> images_per_identity{4};
  std::size_t dim = 512;
  double within_noise = 0.05;
  std::uint64_t seed = 0;

  std::size_t images_for(std::size_t identity) const;
  // Throws UsageError on empty/zero counts, zero dimension or negative noise.
  void validate() const;
};

// Identity centers are normalized standard-normal vectors; each image is
// normalize(center + within_noise * N(0, I)). Labels are id_0 .. id_{K-1},
// record ids are `id_<k>_<i>`. Records are emitted identity by identity.
std::vector<EmbeddingRecord> gen_synthetic(const SyntheticSpec& spec);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json report_to_json(const MetricsReport& report);
// Throws DataError on a schema or version mismatch.
MetricsReport report_from_json(const nlohmann::json& j);

void write_report(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport read_report(const std::filesystem::path& path);

}  // namespace osfr
