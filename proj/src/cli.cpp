#include "osfr/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "osfr/errors.hpp"
#include "osfr/io.hpp"
#include "osfr/pipeline.hpp"
#include "osfr/splitter.hpp"
#include "osfr/version.hpp"

namespace osfr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string tool_id() { return std::string(kToolName) + " " + kToolVersion; }

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open id list '" + path.string() + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

// ---- split ----------------------------------------------------------------

struct SplitArgs {
  std::string manifest;
  std::string kind = "unique";
  double ratio = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const SplitKind kind = split_kind_from_string(a.kind);
  const Manifest m = load_manifest(a.manifest);
  const SplitResult s =
      kind == SplitKind::kUnique ? split_unique(m, a.seed, a.ratio) : split_both(m, a.seed);
  const json config{{"manifest", a.manifest}, {"kind", a.kind}, {"ratio", a.ratio}, {"seed", a.seed}};
  write_split(a.out, m, s, config);
  out << "split " << a.kind << ": " << s.train.size() << " train, " << s.test.size()
      << " test (fraction " << s.test_fraction() << ") -> " << a.out << '\n';
  return kExitOk;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::size_t identities = 10;
  std::vector<std::size_t> per{4};
  std::size_t dim = 512;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  spec.identities = a.identities;
  spec.images_per_identity = a.per;
  spec.dim = a.dim;
  spec.within_noise = a.noise;
  spec.seed = a.seed;
  const auto records = gen_synthetic(spec);
  const json meta{{"tool", tool_id()},
                  {"config",
                   {{"identities", a.identities},
                    {"per", a.per},
                    {"dim", a.dim},
                    {"noise", a.noise},
                    {"seed", a.seed}}}};
  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (path.extension() == ".bin") {
    save_embeddings(path, records);
    write_json_file(fs::path(a.out + ".meta.json"), meta);
  } else {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + a.out + "'");
    f << json{{"meta", meta}}.dump() << '\n';
    write_embeddings(f, records);
  }
  out << "wrote " << records.size() << " records -> " << a.out << '\n';
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string embeddings;
  std::string test_ids;
  std::size_t runs = 10;
  std::string window = "100";
  std::string search_window;
  std::string update_window;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  bool no_shuffle = false;
  bool log = false;
  unsigned threads = 0;
  std::string out;
};

std::string run_file_name(std::size_t run, const char* prefix, const char* ext) {
  std::ostringstream name;
  name << prefix << (run < 10 ? "0" : "") << run << ext;
  return name.str();
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  const Window w = Window::parse(a.window);
  cfg.gallery.search_window = a.search_window.empty() ? w : Window::parse(a.search_window);
  cfg.gallery.update_window = a.update_window.empty() ? w : Window::parse(a.update_window);
  cfg.gallery.sigma = a.sigma;
  cfg.shuffle = !a.no_shuffle;
  cfg.seed = a.seed;
  cfg.runs = a.runs;
  cfg.validate();

  const auto records = load_embeddings(a.embeddings);
  std::vector<EmbeddingRecord> selected;
  if (a.test_ids.empty()) {
    selected = records;
  } else {
    std::map<std::string, const EmbeddingRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);
    std::vector<std::string> missing;
    for (const auto& id : read_id_list(a.test_ids)) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        missing.push_back(id);
      } else {
        selected.push_back(*it->second);
      }
    }
    if (!missing.empty()) {
      err << "error: no embedding for " << missing.size() << " test id(s):";
      for (const auto& id : missing) err << ' ' << id;
      err << '\n';
      return kExitData;
    }
  }

  const Evaluation ev = evaluate(to_stream_items(selected), cfg, a.threads);
  fs::create_directories(a.out);
  for (std::size_t r = 0; r < ev.runs.size(); ++r) {
    write_report(ev.runs[r], fs::path(a.out) / run_file_name(r, "run_", ".json"));
    if (a.log) {
      std::ofstream log(fs::path(a.out) / run_file_name(r, "log_", ".jsonl"), std::ios::binary);
      for (const auto& rec : ev.streams[r].log) log << to_json(rec).dump() << '\n';
    }
  }
  write_report(ev.aggregate, fs::path(a.out) / "aggregate.json");

  const auto show = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) {
      s << std::fixed << std::setprecision(4) << *v;
    } else {
      s << "null";
    }
    return s.str();
  };
  const auto& g = ev.aggregate;
  out << "items " << selected.size() << ", runs " << cfg.runs << "\n"
      << "ACC " << show(g.acc) << "  TAR " << show(g.tar) << "  TRR " << show(g.trr) << "  FAR "
      << show(g.far) << "  FRR " << show(g.frr) << "  WAR " << show(g.war) << '\n';
  return kExitOk;
}

// ---- aggregate ------------------------------------------------------------

int cmd_aggregate(const std::vector<std::string>& inputs, const std::string& out_path,
                  std::ostream& out) {
  std::vector<MetricsReport> reports;
  for (const auto& p : inputs) reports.push_back(read_report(p));
  const MetricsReport agg = aggregate_runs(reports);
  write_report(agg, out_path);
  out << "aggregated " << reports.size() << " reports -> " << out_path << '\n';
  return kExitOk;
}

// ---- plan / attrs / augment / align ----------------------------------------

AugmentPolicy load_policy(const std::string& path) {
  if (path.empty()) return AugmentPolicy{};
  if (path == "neutral") return AugmentPolicy::neutral();
  return policy_from_json(read_json_file(path));
}

struct PlanArgs {
  std::uint64_t seed = 0;
  std::size_t chains = kChainsPerImage;
  std::string policy;
  std::string src;
  std::string out;
};

AugmentPlan make_plan(const PlanArgs& a) {
  AugmentPlan plan;
  plan.seed = a.seed;
  plan.n_chains = a.chains;
  plan.policy = load_policy(a.policy);
  plan.policy.validate();
  if (plan.n_chains < 1) throw UsageError("--chains must be at least 1");
  return plan;
}

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  AugmentPlan plan = make_plan(a);
  if (!a.src.empty()) {
    for (const auto& path : list_images(a.src)) {
      const RasterImage img = read_image(path);
      const std::string id = path.stem().string();
      plan.images[id] = ImagePlan{img.width(), img.height(),
                                  build_plan(plan.seed, id, img.width(), img.height(),
                                             plan.policy, plan.n_chains)};
    }
  }
  write_json_file(a.out, to_json(plan));
  out << "plan with " << plan.n_chains << " chains per image (" << plan.images.size()
      << " materialized) -> " << a.out << '\n';
  return kExitOk;
}

int cmd_attrs(std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const auto combos = enumerate_attribute_combos(seed);
  write_json_file(out_path, attribute_plan_to_json(combos, seed));
  out << "wrote " << combos.size() << " attribute combinations -> " << out_path << '\n';
  return kExitOk;
}

struct AugmentArgs {
  std::string mode = "basic";
  std::string src;
  std::string plan_file;
  PlanArgs plan;
  unsigned threads = 0;
  std::string out;
};

int cmd_augment(const AugmentArgs& a, std::ostream& out) {
  const AugmentPlan plan =
      a.plan_file.empty() ? make_plan(a.plan) : plan_from_json(read_json_file(a.plan_file));
  GenerationReport report;
  if (a.mode == "basic") {
    report = run_basic(a.src, plan, a.out, a.threads);
  } else if (a.mode == "combined") {
    report = run_combined(a.src, plan, a.out, a.threads);
  } else {
    throw UsageError("--mode must be 'basic' or 'combined'");
  }
  json j = report.to_json();
  j["tool"] = tool_id();
  j["config"] = {{"mode", a.mode}, {"src", a.src}, {"plan_file", a.plan_file}};
  j["plan"] = {{"seed", plan.seed}, {"n_chains", plan.n_chains}, {"policy", to_json(plan.policy)}};
  write_json_file(fs::path(a.out) / "report.json", j);
  out << a.mode << ": " << report.outputs.size() << " outputs from " << report.sources
      << " sources, " << report.failures.size() << " failures -> " << a.out << '\n';
  return report.failures.empty() ? kExitOk : kExitData;
}

struct AlignArgs {
  std::string src;
  std::string landmarks;
  std::string tmpl;
  int width = 0;
  int height = 0;
  unsigned threads = 0;
  std::string out;
};

int cmd_align(const AlignArgs& a, std::ostream& out) {
  const auto landmarks = load_landmarks(a.landmarks);
  const auto tmpl_file = load_landmarks(a.tmpl);
  if (tmpl_file.size() != 1) throw DataError("template file must hold exactly one landmark line");
  const auto report = run_align(a.src, landmarks, tmpl_file.begin()->second, a.out, a.width,
                                a.height, a.threads);
  json j = report.to_json();
  j["tool"] = tool_id();
  j["config"] = {{"src", a.src}, {"landmarks", a.landmarks}, {"template", a.tmpl},
                 {"width", a.width}, {"height", a.height}};
  write_json_file(fs::path(a.out) / "report.json", j);
  out << "align: " << report.outputs.size() << " outputs, " << report.failures.size()
      << " failures -> " << a.out << '\n';
  return report.failures.empty() ? kExitOk : kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-set face identification evaluation harness", kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_id());

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Unique/Both train-test split of a manifest");
  split_cmd->add_option("manifest", split.manifest, "Tab-separated image_id/label file")->required();
  split_cmd->add_option("--kind", split.kind, "unique | both")->check(CLI::IsMember({"unique", "both"}));
  split_cmd->add_option("--ratio", split.ratio, "Target test fraction (unique)");
  split_cmd->add_option("--seed", split.seed);
  split_cmd->add_option("--out", split.out, "Output directory")->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate clustered synthetic embeddings");
  synth_cmd->add_option("--identities", synth.identities);
  synth_cmd->add_option("--per", synth.per, "Images per identity (one value or one per identity)");
  synth_cmd->add_option("--dim", synth.dim);
  synth_cmd->add_option("--noise", synth.noise, "Within-identity noise std");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--out", synth.out, "Output file (.jsonl or .bin)")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Run the online evaluation protocol");
  eval_cmd->add_option("embeddings", ev.embeddings, "Embedding file")->required();
  eval_cmd->add_option("test_ids", ev.test_ids, "Optional file of test image ids");
  eval_cmd->add_option("--runs", ev.runs);
  eval_cmd->add_option("--window", ev.window, "Gallery window (entries) or 'unbounded'");
  eval_cmd->add_option("--search-window", ev.search_window, "Overrides --window for search");
  eval_cmd->add_option("--update-window", ev.update_window, "Overrides --window for thresholds");
  eval_cmd->add_option("--sigma", ev.sigma, "Threshold scale");
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_flag("--no-shuffle", ev.no_shuffle, "Keep file order in every run");
  eval_cmd->add_flag("--log", ev.log, "Write per-item logs");
  eval_cmd->add_option("--threads", ev.threads);
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();

  std::vector<std::string> agg_inputs;
  std::string agg_out;
  auto* agg_cmd = app.add_subcommand("aggregate", "Average per-run metric reports");
  agg_cmd->add_option("reports", agg_inputs, "Report files")->required();
  agg_cmd->add_option("--out", agg_out)->required();

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Write an augmentation plan");
  plan_cmd->add_option("--seed", plan.seed);
  plan_cmd->add_option("--chains", plan.chains);
  plan_cmd->add_option("--policy", plan.policy, "Policy JSON file or 'neutral'");
  plan_cmd->add_option("--src", plan.src, "Materialize chains for images in this directory");
  plan_cmd->add_option("--out", plan.out)->required();

  std::uint64_t attrs_seed = 0;
  std::string attrs_out;
  auto* attrs_cmd = app.add_subcommand("attrs", "Write the attribute-combination plan");
  attrs_cmd->add_option("--seed", attrs_seed);
  attrs_cmd->add_option("--out", attrs_out)->required();

  AugmentArgs aug;
  auto* aug_cmd = app.add_subcommand("augment", "Apply augmentation chains to a directory");
  aug_cmd->add_option("--mode", aug.mode, "basic | combined")->check(CLI::IsMember({"basic", "combined"}));
  aug_cmd->add_option("--src", aug.src, "Source (basic) or generated (combined) directory")->required();
  aug_cmd->add_option("--plan", aug.plan_file, "Plan file from 'plan'");
  aug_cmd->add_option("--seed", aug.plan.seed, "Seed when no plan file is given");
  aug_cmd->add_option("--chains", aug.plan.chains);
  aug_cmd->add_option("--policy", aug.plan.policy);
  aug_cmd->add_option("--threads", aug.threads);
  aug_cmd->add_option("--out", aug.out)->required();

  AlignArgs align;
  auto* align_cmd = app.add_subcommand("align", "Affine-align images onto template landmarks");
  align_cmd->add_option("--src", align.src)->required();
  align_cmd->add_option("--landmarks", align.landmarks)->required();
  align_cmd->add_option("--template", align.tmpl, "Landmark file with one line")->required();
  align_cmd->add_option("--width", align.width);
  align_cmd->add_option("--height", align.height);
  align_cmd->add_option("--threads", align.threads);
  align_cmd->add_option("--out", align.out)->required();

  std::vector<std::string> argv_store{kToolName};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*split_cmd) return cmd_split(split, out);
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*eval_cmd) return cmd_eval(ev, out, err);
    if (*agg_cmd) return cmd_aggregate(agg_inputs, agg_out, out);
    if (*plan_cmd) return cmd_plan(plan, out);
    if (*attrs_cmd) return cmd_attrs(attrs_seed, attrs_out, out);
    if (*aug_cmd) return cmd_augment(aug, out);
    if (*align_cmd) return cmd_align(align, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace osfr::cli
