#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "osfr/cli.hpp"
#include "osfr/image.hpp"
#include "osfr/io.hpp"
#include "test_util.hpp"

using namespace osfr;
namespace fs = std::filesystem;
using osfr::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run_cli({"split"}).code == cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
  CHECK(run_cli({"--version"}).code == cli::kExitOk);
}

TEST_CASE("split") {
  TempDir dir("cli_split");
  write_text(dir / "m.tsv", "a0\ta\nb0\tb\nb1\tb\nc0\tc\nc1\tc\nc2\tc\n");
  const auto r = run_cli({"split", (dir / "m.tsv").string(), "--kind", "both", "--seed", "3",
                          "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto summary = read_json(dir / "out" / "summary.json");
  CHECK(summary["per_identity"].size() == 3);
  CHECK(summary["per_identity"]["a"]["test"] == 0);
  CHECK(summary["per_identity"]["c"]["train"] == 2);
  CHECK(summary["config"]["seed"] == 3);
  CHECK(summary.contains("tool"));

  const auto missing = run_cli({"split", (dir / "nope.tsv").string(), "--out", (dir / "o2").string()});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("nope.tsv") != std::string::npos);

  write_text(dir / "bad.tsv", "a0\ta\na0\tb\n");
  CHECK(run_cli({"split", (dir / "bad.tsv").string(), "--out", (dir / "o3").string()}).code ==
        cli::kExitData);
  CHECK(run_cli({"split", (dir / "m.tsv").string(), "--kind", "sideways", "--out",
                 (dir / "o4").string()}).code == cli::kExitUsage);
}

TEST_CASE("synth writes the requested number of records") {
  TempDir dir("cli_synth");
  REQUIRE(run_cli({"synth", "--identities", "5", "--per", "3", "--dim", "16", "--seed", "2",
                   "--out", (dir / "e.jsonl").string()}).code == 0);
  CHECK(load_embeddings(dir / "e.jsonl").size() == 15);
  REQUIRE(run_cli({"synth", "--identities", "5", "--per", "3", "--dim", "16", "--seed", "2",
                   "--out", (dir / "e.bin").string()}).code == 0);
  CHECK(load_embeddings(dir / "e.bin").size() == 15);
  CHECK(fs::exists(dir / "e.bin.meta.json"));
  CHECK(run_cli({"synth", "--identities", "0", "--out", (dir / "z.jsonl").string()}).code ==
        cli::kExitUsage);
}

TEST_CASE("eval writes per-run reports and an aggregate") {
  TempDir dir("cli_eval");
  const std::string emb = (dir / "e.jsonl").string();
  REQUIRE(run_cli({"synth", "--identities", "6", "--per", "3", "--dim", "32", "--noise", "0",
                   "--seed", "1", "--out", emb}).code == 0);

  const auto r = run_cli({"eval", emb, "--runs", "10", "--seed", "4", "--log", "--out",
                          (dir / "ev").string()});
  REQUIRE(r.code == 0);
  CHECK(count_files(dir / "ev", ".json") == 11);
  CHECK(count_files(dir / "ev", ".jsonl") == 10);
  CHECK(fs::exists(dir / "ev" / "run_09.json"));
  const auto agg = read_report(dir / "ev" / "aggregate.json");
  CHECK(agg.runs == 10);
  for (int i = 1; i < 10; ++i) {
    const auto ri = read_report(dir / "ev" / ("run_0" + std::to_string(i) + ".json"));
    CHECK(ri.run_seed != read_report(dir / "ev" / "run_00.json").run_seed);
  }

  // Same flags, same artifacts.
  REQUIRE(run_cli({"eval", emb, "--runs", "10", "--seed", "4", "--threads", "1", "--out",
                   (dir / "ev2").string()}).code == 0);
  CHECK(slurp(dir / "ev" / "aggregate.json") == slurp(dir / "ev2" / "aggregate.json"));

  // aggregate subcommand reproduces eval's aggregate.
  std::vector<std::string> args{"aggregate"};
  for (int i = 0; i < 10; ++i) args.push_back((dir / "ev" / ("run_0" + std::to_string(i) + ".json")).string());
  args.insert(args.end(), {"--out", (dir / "agg.json").string()});
  REQUIRE(run_cli(args).code == 0);
  CHECK(read_report(dir / "agg.json") == agg);
}

TEST_CASE("eval on an order-invariant stream has no run-to-run variance") {
  // One identity, exact repeats: every order is TR, FR, then TA for the rest.
  TempDir dir("cli_eval_flat");
  const std::string emb = (dir / "e.jsonl").string();
  REQUIRE(run_cli({"synth", "--identities", "1", "--per", "5", "--dim", "64", "--noise", "0",
                   "--seed", "8", "--out", emb}).code == 0);
  REQUIRE(run_cli({"eval", emb, "--runs", "10", "--out", (dir / "ev").string()}).code == 0);
  const auto agg = read_report(dir / "ev" / "aggregate.json");
  REQUIRE(agg.acc.has_value());
  CHECK(*agg.acc == 0.8);
  for (int i = 0; i < 10; ++i) {
    CHECK(read_report(dir / "ev" / ("run_0" + std::to_string(i) + ".json")).acc == agg.acc);
  }

  // Without shuffling any stream is replayed identically.
  const std::string emb2 = (dir / "e2.jsonl").string();
  REQUIRE(run_cli({"synth", "--identities", "6", "--per", "3", "--dim", "32", "--noise", "0",
                   "--seed", "1", "--out", emb2}).code == 0);
  REQUIRE(run_cli({"eval", emb2, "--runs", "5", "--no-shuffle", "--out", (dir / "ns").string()})
              .code == 0);
  const auto agg2 = read_report(dir / "ns" / "aggregate.json");
  for (int i = 0; i < 5; ++i) {
    CHECK(read_report(dir / "ns" / ("run_0" + std::to_string(i) + ".json")).acc == agg2.acc);
  }
}

TEST_CASE("eval errors") {
  TempDir dir("cli_eval_err");
  const std::string emb = (dir / "e.jsonl").string();
  REQUIRE(run_cli({"synth", "--identities", "2", "--per", "2", "--dim", "8", "--out", emb}).code == 0);
  CHECK(run_cli({"eval", emb, "--window", "0", "--out", (dir / "o").string()}).code ==
        cli::kExitUsage);
  CHECK(run_cli({"eval", emb, "--sigma", "-1", "--out", (dir / "o").string()}).code ==
        cli::kExitUsage);
  CHECK(run_cli({"eval", emb, "--runs", "0", "--out", (dir / "o").string()}).code ==
        cli::kExitUsage);

  write_text(dir / "ids.txt", "id_0_0\nghost_1\nid_1_1\nghost_2\n");
  const auto r = run_cli({"eval", emb, (dir / "ids.txt").string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("ghost_1") != std::string::npos);
  CHECK(r.err.find("ghost_2") != std::string::npos);

  write_text(dir / "ids2.txt", "id_0_0\nid_1_1\n");
  const auto ok = run_cli({"eval", emb, (dir / "ids2.txt").string(), "--runs", "1", "--window",
                           "unbounded", "--out", (dir / "o2").string()});
  CHECK(ok.code == 0);
  CHECK(read_report(dir / "o2" / "aggregate.json").tally.total() == 2);
}

TEST_CASE("plan, attrs and augment") {
  TempDir dir("cli_aug");
  REQUIRE(run_cli({"plan", "--seed", "7", "--out", (dir / "p1.json").string()}).code == 0);
  REQUIRE(run_cli({"plan", "--seed", "7", "--out", (dir / "p2.json").string()}).code == 0);
  CHECK(slurp(dir / "p1.json") == slurp(dir / "p2.json"));
  CHECK(read_json(dir / "p1.json")["seed"] == 7);

  REQUIRE(run_cli({"attrs", "--seed", "3", "--out", (dir / "attrs.json").string()}).code == 0);
  CHECK(read_json(dir / "attrs.json")["combos"].size() == 24);

  fs::create_directories(dir / "src");
  std::mt19937_64 gen(1);
  write_image(osfr::testing::random_image(gen, 24, 20), dir / "src" / "x.png");
  write_image(osfr::testing::random_image(gen, 20, 24), dir / "src" / "y.ppm");
  const auto r = run_cli({"augment", "--src", (dir / "src").string(), "--plan",
                          (dir / "p1.json").string(), "--out", (dir / "aug").string()});
  REQUIRE(r.code == 0);
  CHECK(count_files(dir / "aug", ".png") == 24);
  CHECK(count_files(dir / "aug", ".ppm") == 24);
  CHECK(read_json(dir / "aug" / "report.json")["output_count"] == 48);

  write_text(dir / "src" / "z.png", "broken");
  CHECK(run_cli({"augment", "--src", (dir / "src").string(), "--seed", "7", "--out",
                 (dir / "aug2").string()}).code == cli::kExitData);
  CHECK(run_cli({"augment", "--src", (dir / "src").string(), "--policy",
                 (dir / "missing_policy.json").string(), "--out", (dir / "aug3").string()}).code ==
        cli::kExitData);
}

TEST_CASE("align") {
  TempDir dir("cli_align");
  fs::create_directories(dir / "src");
  std::mt19937_64 gen(2);
  const RasterImage img = osfr::testing::random_image(gen, 30, 30);
  write_image(img, dir / "src" / "f.png");
  write_text(dir / "lm.txt", "f 5 5 20 5 12 20\n");
  write_text(dir / "tmpl.txt", "template 5 5 20 5 12 20\n");
  const auto r = run_cli({"align", "--src", (dir / "src").string(), "--landmarks",
                          (dir / "lm.txt").string(), "--template", (dir / "tmpl.txt").string(),
                          "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(read_image(dir / "out" / "f.png") == img);
}
