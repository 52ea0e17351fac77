#include <doctest.h>

#include <fstream>
#include <iterator>
#include <map>

#include "osfr/image.hpp"
#include "osfr/pipeline.hpp"
#include "test_util.hpp"

using namespace osfr;
namespace fs = std::filesystem;
using osfr::testing::TempDir;

namespace {

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    out[e.path().filename().string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

void write_sources(const fs::path& dir, int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (int i = 0; i < n; ++i) {
    write_image(osfr::testing::random_image(gen, 40 + i, 30), dir / ("face" + std::to_string(i) + ".png"));
  }
}

AugmentPlan neutral_plan() {
  AugmentPlan p;
  p.policy = AugmentPolicy::neutral();
  return p;
}

}  // namespace

TEST_CASE("basic run writes 24 outputs per source and is reproducible") {
  TempDir src("src"), out1("out1"), out2("out2");
  write_sources(src.path(), 3, 1);
  AugmentPlan plan;
  plan.seed = 21;
  const auto report = run_basic(src.path(), plan, out1.path(), 2);
  CHECK(report.mode == "basic");
  CHECK(report.sources == 3);
  CHECK(report.outputs.size() == 72);
  CHECK(report.failures.empty());
  CHECK(std::is_sorted(report.outputs.begin(), report.outputs.end()));
  CHECK(fs::exists(out1 / "face0_aug0.png"));
  CHECK(fs::exists(out1 / "face2_aug23.png"));
  const RasterImage sample = read_image(out1 / "face1_aug5.png");
  CHECK(sample.width() == 41);
  CHECK(sample.height() == 30);

  run_basic(src.path(), plan, out2.path(), 3);
  CHECK(snapshot(out1.path()) == snapshot(out2.path()));
}

TEST_CASE("basic outputs do not depend on the thread count") {
  TempDir src("src");
  write_sources(src.path(), 5, 2);
  AugmentPlan plan;
  plan.seed = 4;
  std::optional<std::map<std::string, std::string>> reference;
  std::optional<nlohmann::json> reference_report;
  for (unsigned threads : {1u, 4u, 16u}) {
    TempDir out("out");
    const auto report = run_basic(src.path(), plan, out.path(), threads);
    const auto files = snapshot(out.path());
    if (!reference) {
      reference = files;
      reference_report = report.to_json();
    } else {
      CHECK(files == *reference);
      CHECK(report.to_json() == *reference_report);
    }
  }
}

TEST_CASE("a corrupt source is reported and skipped") {
  TempDir src("src"), out("out");
  write_sources(src.path(), 3, 3);
  {
    std::ofstream bad(src / "broken.png");
    bad << "garbage";
  }
  const auto report = run_basic(src.path(), AugmentPlan{}, out.path(), 0);
  CHECK(report.sources == 4);
  CHECK(report.outputs.size() == 72);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].id == "broken");
  CHECK(snapshot(out.path()).size() == 72);
}

TEST_CASE("neutral plan reproduces the sources") {
  TempDir src("src"), out("out");
  write_sources(src.path(), 2, 4);
  run_basic(src.path(), neutral_plan(), out.path(), 0);
  const RasterImage orig = read_image(src / "face1.png");
  for (int k = 0; k < 24; ++k) {
    REQUIRE(read_image(out / ("face1_aug" + std::to_string(k) + ".png")) == orig);
  }
}

TEST_CASE("combined run applies chain k to attribute image k") {
  TempDir gen_dir("gen"), out("out");
  std::mt19937_64 gen(5);
  std::vector<RasterImage> attrs;
  for (int k = 0; k < 24; ++k) {
    attrs.push_back(osfr::testing::random_image(gen, 32, 32));
    write_image(attrs.back(), gen_dir / ("alice_attr" + std::to_string(k) + ".png"));
  }
  AugmentPlan plan;
  plan.seed = 9;
  const auto report = run_combined(gen_dir.path(), plan, out.path(), 4);
  CHECK(report.mode == "combined");
  CHECK(report.outputs.size() == 24);
  CHECK(report.failures.empty());
  for (int k : {0, 7, 23}) {
    const Chain c = plan.chain_for("alice", static_cast<std::size_t>(k), 32, 32);
    CHECK(read_image(out / ("alice_aug" + std::to_string(k) + ".png")) == apply_chain(attrs[k], c));
  }

  TempDir out_neutral("outn");
  run_combined(gen_dir.path(), neutral_plan(), out_neutral.path(), 0);
  for (int k = 0; k < 24; ++k) {
    REQUIRE(read_image(out_neutral / ("alice_aug" + std::to_string(k) + ".png")) == attrs[k]);
  }
}

TEST_CASE("combined run records missing attribute images") {
  TempDir gen_dir("gen"), out("out");
  std::mt19937_64 gen(6);
  for (int k = 0; k < 24; ++k) {
    if (k == 13) continue;
    write_image(osfr::testing::random_image(gen, 16, 16), gen_dir / ("bob_attr" + std::to_string(k) + ".png"));
  }
  const auto report = run_combined(gen_dir.path(), AugmentPlan{}, out.path(), 0);
  CHECK(report.outputs.size() == 23);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].id == "bob");
  CHECK(report.failures[0].reason.find("13") != std::string::npos);
}

TEST_CASE("align run") {
  TempDir src("src"), out("out");
  write_sources(src.path(), 2, 7);
  const LandmarkSet tmpl{{10, 10}, {30, 10}, {20, 25}};
  std::map<std::string, LandmarkSet> lm{{"face0", tmpl}, {"face1", {{12, 11}, {31, 9}, {21, 27}}},
                                        {"ghost", tmpl}};
  const auto report = run_align(src.path(), lm, tmpl, out.path(), 40, 30, 0);
  CHECK(report.outputs.size() == 2);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].id == "ghost");
  CHECK(read_image(out / "face0.png") == read_image(src / "face0.png"));
  CHECK(read_image(out / "face1.png").width() == 40);
}
