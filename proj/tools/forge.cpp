// forge: builds instruction-following shards from aerial OBB corpora and
// scores model predictions against the generated benchmark.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "geoforge/annotation.hpp"
#include "geoforge/attributes.hpp"
#include "geoforge/error.hpp"
#include "geoforge/eval.hpp"
#include "geoforge/pipeline.hpp"
#include "geoforge/shards.hpp"
#include "geoforge/util.hpp"

namespace {

using namespace geoforge;
using ojson = nlohmann::ordered_json;

struct StrictFailure : Error {
  using Error::Error;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex(fnv1a(ss.str()));
}

void require_file(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw Error("no such file: " + p.string());
}

void write_report(const std::string& path, const ojson& report) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << report.dump(2) << '\n';
  if (!out.flush()) throw Error("write failed: " + path);
}

std::string fmt_pct(const Bucket& b) {
  if (b.total == 0) return "     -";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f", b.percent());
  return buf;
}

void row(const std::string& name, const Bucket& b) {
  std::printf("  %-12s %s  (%zu/%zu)\n", name.c_str(), fmt_pct(b).c_str(), b.matched, b.total);
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config;
  bool offline = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string tasks;
  std::string output;
};

int cmd_generate(const GenerateArgs& a, bool strict) {
  require_file(a.config);
  ForgeConfig config = load_forge_config(a.config);
  if (a.offline) config.offline = true;
  if (a.seed) config.seed = *a.seed;
  if (a.jobs) config.jobs = std::max(1, *a.jobs);
  if (!a.tasks.empty()) config.tasks = parse_task_list(a.tasks);
  if (!a.output.empty()) config.output_dir = std::filesystem::absolute(a.output);
  for (const auto& m : config.manifests) require_file(m);
  for (const auto& m : config.pseudo_manifests) require_file(m);

  const PipelineReport report = run_pipeline(config);
  std::printf("config %s  seed %llu\n", report.config_hash.c_str(),
              static_cast<unsigned long long>(config.seed));
  std::printf("%-22s %10s %10s %10s\n", "task", "requested", "available", "emitted");
  std::size_t total = 0;
  for (const auto& [task, c] : report.tasks) {
    std::printf("%-22s %10s %10zu %10zu\n", std::string(to_string(task)).c_str(),
                c.requested ? std::to_string(*c.requested).c_str() : "all", c.available, c.emitted);
    total += c.emitted;
  }
  std::printf("%-22s %10s %10s %10zu\n", "total", "", "", total);
  std::printf("train %zu records / %zu images, test %zu records / %zu images, benchmark %zu\n",
              report.shards.train_records, report.shards.train_images.size(),
              report.shards.test_records, report.shards.test_images.size(), report.benchmark_items);
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  if (strict && (!report.warnings.empty() || !report.chat_failures.empty())) {
    throw StrictFailure(std::to_string(report.warnings.size() + report.chat_failures.size()) +
                        " warnings with --strict");
  }
  return 0;
}

// ---------------------------------------------------------------- validate / stats

enum class FileKind { Manifest, Shard, Benchmark };

FileKind detect_kind(const std::filesystem::path& path, const std::string& forced) {
  if (forced == "manifest") return FileKind::Manifest;
  if (forced == "shard") return FileKind::Shard;
  if (forced == "benchmark") return FileKind::Benchmark;
  if (!forced.empty() && forced != "auto") throw Error("unknown file kind '" + forced + "'");
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (j.contains("conversations")) return FileKind::Shard;
    if (j.contains("kind") && j.contains("question")) return FileKind::Benchmark;
    if (j.contains("instances") || j.contains("width")) return FileKind::Manifest;
  }
  return FileKind::Shard;
}

LoadOptions registry_options(const std::string& registry) {
  LoadOptions opts;
  if (!registry.empty()) opts.registry = load_class_registry(registry);
  return opts;
}

int cmd_validate(const std::string& file, const std::string& kind, const std::string& registry) {
  require_file(file);
  try {
    switch (detect_kind(file, kind)) {
      case FileKind::Manifest: {
        const Corpus c = load_corpus(std::filesystem::path(file), registry_options(registry));
        std::printf("ok: manifest with %zu images, %zu instances\n", c.images.size(), c.instance_count());
        break;
      }
      case FileKind::Shard: {
        const auto records = read_shard(file);
        std::printf("ok: shard with %zu records\n", records.size());
        break;
      }
      case FileKind::Benchmark: {
        const auto items = load_benchmark(file);
        std::printf("ok: benchmark with %zu questions\n", items.size());
        break;
      }
    }
  } catch (const Error& e) {
    std::printf("invalid: %s: %s\n", file.c_str(), e.what());
    return 1;
  }
  return 0;
}

int cmd_stats(const std::string& file, const std::string& kind, const std::string& registry,
              std::uint64_t seed, const std::string& output) {
  require_file(file);
  ojson report;
  report["file"] = file;
  report["config_hash"] = file_hash(file);
  report["seed"] = seed;
  if (detect_kind(file, kind) == FileKind::Manifest) {
    const Corpus c = load_corpus(std::filesystem::path(file), registry_options(registry));
    const SizeThresholds t = compute_size_thresholds(c);
    std::map<std::string, std::size_t> hist;
    std::vector<double> areas;
    for (const auto& img : c.images) {
      for (const auto& inst : img.instances) {
        ++hist[inst.class_name];
        areas.push_back(inst.box.area());
      }
    }
    std::sort(areas.begin(), areas.end());
    report["images"] = c.images.size();
    report["instances"] = c.instance_count();
    std::printf("%zu images, %zu instances\n", c.images.size(), c.instance_count());
    std::printf("%-24s %8s %12s %12s\n", "class", "count", "area_p20", "area_p80");
    auto& classes = report["classes"] = ojson::object();
    for (const auto& [name, count] : hist) {
      const ClassThresholds& ct = t.per_class.at(name);
      std::printf("%-24s %8zu %12.2f %12.2f\n", name.c_str(), count, ct.p20, ct.p80);
      classes[name] = {{"count", count}, {"area_p20", ct.p20}, {"area_p80", ct.p80}};
    }
    if (!areas.empty()) {
      const double p20 = nearest_rank(areas, 20), p80 = nearest_rank(areas, 80);
      std::printf("%-24s %8zu %12.2f %12.2f\n", "(all)", areas.size(), p20, p80);
      report["all"] = {{"count", areas.size()}, {"area_p20", p20}, {"area_p80", p80}};
    }
  } else {
    const auto records = read_shard(file);
    std::map<std::string, std::size_t> counts;
    std::set<std::string> images;
    for (const auto& r : records) {
      ++counts[std::string(to_string(r.task))];
      images.insert(r.image);
    }
    std::printf("%zu records, %zu images\n", records.size(), images.size());
    for (const auto& [task, n] : counts) std::printf("%-22s %8zu\n", task.c_str(), n);
    report["records"] = records.size();
    report["images"] = images.size();
    report["tasks"] = counts;
  }
  write_report(output, report);
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string output;
  std::string classes;
  double tau = 0.5;
  double max_missing = 0.1;
  std::uint64_t seed = 0;
};

ojson eval_header(const std::string& command, const EvalArgs& a) {
  ojson inputs{{"command", command},
               {"pred", file_hash(a.pred)},
               {"truth", file_hash(a.truth)},
               {"tau", a.tau},
               {"classes", a.classes.empty() ? std::string() : file_hash(a.classes)}};
  ojson report;
  report["command"] = command;
  report["config_hash"] = hex(fnv1a(inputs.dump()));
  report["seed"] = a.seed;
  report["pred"] = a.pred;
  report["truth"] = a.truth;
  return report;
}

int finish_eval(const ScoringStatus& s, const EvalArgs& a, bool strict) {
  for (const auto& w : s.warnings) spdlog::warn("{}", w);
  if (s.questions == 0) throw Error("the truth file has no questions of this kind");
  const double missing = static_cast<double>(s.missing) / static_cast<double>(s.questions);
  if (missing > a.max_missing) {
    spdlog::error("{} of {} questions have no prediction (limit {:.1f}%)", s.missing, s.questions,
                  100 * a.max_missing);
    return 1;
  }
  if (strict && !s.warnings.empty()) throw StrictFailure(std::to_string(s.warnings.size()) + " warnings with --strict");
  return 0;
}

int cmd_eval(const std::string& which, const EvalArgs& a, bool strict) {
  require_file(a.pred);
  require_file(a.truth);
  const Predictions preds = load_predictions(std::filesystem::path(a.pred));
  const auto truth = load_benchmark(a.truth);
  ojson report = eval_header(which, a);

  if (which == "ground") {
    const auto card = score_grounding(preds, truth, a.tau);
    report["scorecard"] = to_json(card);
    std::printf("acc@%.2f over %zu boxes in %zu questions\n", a.tau, card.overall.total, card.status.questions);
    row("overall", card.overall);
    for (const char* k : {"small", "medium", "large"}) row(k, card.by_size.at(k));
    for (const char* k : {"single", "multi"}) row(k, card.by_arity.at(k));
    for (const auto& [k, b] : card.by_task) row("[" + k + "]", b);
    const double macro = card.macro();
    if (!std::isnan(macro)) std::printf("  %-12s %6.2f\n", "size macro", macro);
    write_report(a.output, report);
    return finish_eval(card.status, a, strict);
  }
  if (which == "describe") {
    const auto card = score_grounded_description(preds, truth);
    report["scorecard"] = to_json(card);
    std::printf("grounded description, %zu questions\n", card.status.questions);
    row("acc@0.5", card.acc50);
    row("acc@0.25", card.acc25);
    std::printf("  %-12s %8.4f\n", "METEOR", card.meteor);
    write_report(a.output, report);
    return finish_eval(card.status, a, strict);
  }
  if (which == "region") {
    const auto card = score_region_captions(preds, truth);
    report["scorecard"] = to_json(card);
    std::printf("region captions, %zu questions\n", card.status.questions);
    std::printf("  %-12s %8.4f\n  %-12s %8.4f\n  %-12s %8.4f\n", "ROUGE-1", card.rouge1, "ROUGE-L",
                card.rougeL, "METEOR", card.meteor);
    write_report(a.output, report);
    return finish_eval(card.status, a, strict);
  }
  std::vector<std::string> classes;
  if (!a.classes.empty()) classes = load_class_registry(a.classes);
  const ClosedKind kind = which == "classify" ? ClosedKind::Classification
                          : which == "rural"  ? ClosedKind::RuralUrban
                                              : ClosedKind::VqaYesNo;
  const auto card = score_closed_answers(preds, truth, kind, classes);
  report["scorecard"] = to_json(card);
  std::printf("%s accuracy, %zu questions (%zu count/area skipped)\n", which.c_str(),
              card.status.questions, card.skipped);
  for (const auto& [cat, b] : card.per_category) row(cat, b);
  row("overall", card.overall);
  if (!std::isnan(card.mean)) std::printf("  %-12s %6.2f\n", "mean", card.mean);
  write_report(a.output, report);
  return finish_eval(card.status, a, strict);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build aerial-image instruction data and score predictions"};
  app.require_subcommand(1);
  std::string log_level = "info";
  bool strict = false;
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_flag("--strict", strict, "treat warnings as errors");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "run the pipeline and write shards");
  generate->add_option("--config", gen.config, "pipeline config (JSON)")->required();
  generate->add_flag("--offline", gen.offline, "use the deterministic chat stub");
  generate->add_option("--seed", gen.seed, "override the config seed");
  generate->add_option("--jobs", gen.jobs, "worker threads");
  generate->add_option("--tasks", gen.tasks, "comma-separated task filter, e.g. refer,identify");
  generate->add_option("--output", gen.output, "output directory");
  generate->add_flag("--strict", strict, "treat warnings as errors");

  std::string file, kind = "auto", registry, stats_output;
  std::uint64_t stats_seed = 0;
  auto* validate = app.add_subcommand("validate", "check a manifest, shard or benchmark file");
  validate->add_option("file", file)->required();
  validate->add_option("--kind", kind, "manifest, shard, benchmark or auto");
  validate->add_option("--registry", registry, "closed class registry for manifests");

  auto* stats = app.add_subcommand("stats", "class histogram, area percentiles, task counts");
  stats->add_option("file", file)->required();
  stats->add_option("--kind", kind, "manifest, shard or auto");
  stats->add_option("--registry", registry, "closed class registry for manifests");
  stats->add_option("--seed", stats_seed, "recorded in the report");
  stats->add_option("--output", stats_output, "JSON report path");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "score predictions against a benchmark");
  eval->require_subcommand(1);
  std::string eval_which;
  const std::pair<const char*, const char*> kinds[] = {
      {"ground", "referring and grounded-description boxes, acc@tau"},
      {"describe", "grounded descriptions: acc@0.5 and METEOR"},
      {"region", "region captions: ROUGE-1 and ROUGE-L"},
      {"vqa", "closed VQA answers, count and area questions skipped"},
      {"rural", "rural or urban questions"},
      {"classify", "scene classification"}};
  for (const auto& kind : kinds) {
    const char* name = kind.first;
    auto* sub = eval->add_subcommand(name, kind.second);
    sub->add_option("--pred", ev.pred, "predictions (JSONL of {id, output})")->required();
    sub->add_option("--truth", ev.truth, "benchmark.jsonl")->required();
    sub->add_option("--output", ev.output, "JSON scorecard path");
    sub->add_option("--max-missing", ev.max_missing, "fraction of missing ids tolerated")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--seed", ev.seed, "recorded in the report");
    sub->add_flag("--strict", strict, "treat warnings as errors");
    if (std::string_view(name) == "ground") {
      sub->add_option("--tau", ev.tau, "IoU threshold")->check(CLI::Range(0.0, 1.0));
    }
    if (std::string_view(name) == "classify") {
      sub->add_option("--classes", ev.classes, "class list (JSON array)");
    }
    sub->callback([&eval_which, name] { eval_which = name; });
  }

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("forge");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (generate->parsed()) return cmd_generate(gen, strict);
    if (validate->parsed()) return cmd_validate(file, kind, registry);
    if (stats->parsed()) return cmd_stats(file, kind, registry, stats_seed, stats_output);
    if (eval->parsed()) return cmd_eval(eval_which, ev, strict);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
