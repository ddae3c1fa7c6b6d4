#include "geoforge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "geoforge/error.hpp"
#include "geoforge/eval.hpp"
#include "geoforge/util.hpp"

namespace geoforge {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  auto rel = p.lexically_relative(base);
  return (rel.empty() ? p : rel).generic_string();
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError("wrong type", 0, key);
  }
}

std::vector<std::filesystem::path> path_list(const json& j, const char* key,
                                             const std::filesystem::path& base) {
  std::vector<std::filesystem::path> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (it->is_string()) {
    out.push_back(resolve(base, it->get<std::string>()));
    return out;
  }
  if (!it->is_array()) throw ValidationError("expected a path or list of paths", 0, key);
  for (const auto& p : *it) {
    if (!p.is_string()) throw ValidationError("expected a path", 0, key);
    out.push_back(resolve(base, p.get<std::string>()));
  }
  return out;
}

std::optional<std::filesystem::path> optional_path(const json& j, const char* key,
                                                   const std::filesystem::path& base) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError("expected a path", 0, key);
  return resolve(base, it->get<std::string>());
}

std::optional<ConversationKind> conversation_kind(InstructionTask t) {
  switch (t) {
    case InstructionTask::MultiRound: return ConversationKind::MultiRound;
    case InstructionTask::ComplexQa: return ConversationKind::ComplexQa;
    case InstructionTask::DetailedDescription: return ConversationKind::Detailed;
    default: return std::nullopt;
  }
}

// Keeps a seeded random subset of `budget` items, preserving input order.
template <class T>
std::vector<T> sample(std::vector<T> items, std::optional<std::size_t> budget, std::uint64_t seed,
                      InstructionTask task) {
  if (!budget || *budget >= items.size()) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, "budget/" + std::string(to_string(task))));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(*budget);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(std::move(items[i]));
  return out;
}

std::optional<std::size_t> budget_of(const ForgeConfig& c, InstructionTask t) {
  auto it = c.budgets.find(t);
  if (it == c.budgets.end()) return std::nullopt;
  return it->second;
}

Rng record_rng(const ForgeConfig& c, std::string_view stream, std::string_view key) {
  std::string k(stream);
  k += '/';
  k += key;
  return Rng(derive_seed(c.seed, k));
}

}  // namespace

std::set<InstructionTask> parse_task_list(std::string_view list) {
  std::set<InstructionTask> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view name = list.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      const auto t = parse_task(name);
      if (!t) throw ValidationError("unknown task '" + std::string(name) + "'", 0, "tasks");
      out.insert(*t);
    }
    pos = comma + 1;
  }
  return out;
}

ForgeConfig parse_forge_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ForgeConfig c;
  c.base_dir = base_dir;
  c.manifests = path_list(j, "manifests", base_dir);
  if (c.manifests.empty()) throw ValidationError("at least one manifest is required", 0, "manifests");
  c.pseudo_manifests = path_list(j, "pseudo_manifests", base_dir);
  c.class_registry = optional_path(j, "class_registry", base_dir);
  c.raster_root = optional_path(j, "raster_root", base_dir);
  c.output_dir = resolve(base_dir, field<std::string>(j, "output_dir", "out"));
  const auto seed = field<std::int64_t>(j, "seed", 0);
  if (seed < 0) throw ValidationError("must be nonnegative", 0, "seed");
  c.seed = static_cast<std::uint64_t>(seed);
  c.split = field<double>(j, "split", 0.9);
  if (!(c.split > 0.0 && c.split < 1.0)) throw ValidationError("must lie in (0, 1)", 0, "split");
  c.pseudo_iou = field<double>(j, "pseudo_iou", 0.5);
  c.relation_distance = field<double>(j, "relation_distance", 0.1);
  if (!(c.relation_distance > 0)) throw ValidationError("must be positive", 0, "relation_distance");
  if (auto it = j.find("kmeans"); it != j.end()) {
    c.kmeans.k = field<int>(*it, "k", 3);
    c.kmeans.max_iterations = field<int>(*it, "max_iterations", 50);
    if (c.kmeans.k < 1 || c.kmeans.max_iterations < 1) {
      throw ValidationError("k and max_iterations must be positive", 0, "kmeans");
    }
  }
  if (auto it = j.find("budgets"); it != j.end()) {
    if (!it->is_object()) throw ValidationError("expected an object", 0, "budgets");
    for (const auto& [name, value] : it->items()) {
      const auto t = parse_task(name);
      if (!t) throw ValidationError("unknown task '" + name + "'", 0, "budgets");
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw ValidationError("count must be a nonnegative integer", 0, "budgets." + name);
      }
      c.budgets[*t] = value.get<std::size_t>();
    }
  }
  if (auto it = j.find("tasks"); it != j.end()) {
    if (it->is_string()) {
      c.tasks = parse_task_list(it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& t : *it) c.tasks.merge(parse_task_list(t.get<std::string>()));
    } else {
      throw ValidationError("expected a list of task names", 0, "tasks");
    }
  }
  c.palette = optional_path(j, "palette", base_dir);
  c.relations = optional_path(j, "relations", base_dir);
  if (auto it = j.find("prompts"); it != j.end()) {
    for (ConversationKind k :
         {ConversationKind::MultiRound, ConversationKind::ComplexQa, ConversationKind::Detailed}) {
      if (auto p = optional_path(*it, std::string(to_string(k)).c_str(), base_dir)) c.prompts[k] = *p;
    }
  }
  c.classification_classes = field<std::vector<std::string>>(j, "classification_classes", {});
  if (auto it = j.find("chat"); it != j.end()) {
    c.chat.http.endpoint = field<std::string>(*it, "endpoint", c.chat.http.endpoint);
    c.chat.http.model = field<std::string>(*it, "model", c.chat.http.model);
    c.chat.http.temperature = field<double>(*it, "temperature", c.chat.http.temperature);
    c.chat.http.timeout_seconds = field<int>(*it, "timeout_seconds", c.chat.http.timeout_seconds);
    c.chat.api_key_env = field<std::string>(*it, "api_key_env", c.chat.api_key_env);
    c.chat.max_in_flight = field<int>(*it, "max_in_flight", c.chat.max_in_flight);
    c.chat.attempts = field<int>(*it, "attempts", c.chat.attempts);
    c.chat.backoff_ms = field<int>(*it, "backoff_ms", c.chat.backoff_ms);
    if (c.chat.max_in_flight < 1 || c.chat.attempts < 1 || c.chat.backoff_ms < 0) {
      throw ValidationError("max_in_flight and attempts must be positive", 0, "chat");
    }
  }
  c.offline = field<bool>(j, "offline", false);
  c.jobs = std::max(1, field<int>(j, "jobs", 1));
  return c;
}

ForgeConfig load_forge_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return parse_forge_config(j, std::filesystem::absolute(path).parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json canonical_json(const ForgeConfig& c) {
  const auto& base = c.base_dir;
  auto paths = [&](const std::vector<std::filesystem::path>& v) {
    std::vector<std::string> out;
    for (const auto& p : v) out.push_back(relative_to(p, base));
    return out;
  };
  auto opt = [&](const std::optional<std::filesystem::path>& p) -> nlohmann::ordered_json {
    if (!p) return nullptr;
    return relative_to(*p, base);
  };
  nlohmann::ordered_json j;
  j["manifests"] = paths(c.manifests);
  j["pseudo_manifests"] = paths(c.pseudo_manifests);
  j["class_registry"] = opt(c.class_registry);
  j["raster_root"] = opt(c.raster_root);
  j["seed"] = c.seed;
  j["split"] = c.split;
  j["pseudo_iou"] = c.pseudo_iou;
  j["relation_distance"] = c.relation_distance;
  j["kmeans"] = {{"k", c.kmeans.k}, {"max_iterations", c.kmeans.max_iterations}};
  auto& budgets = j["budgets"] = nlohmann::ordered_json::object();
  for (const auto& [t, n] : c.budgets) budgets[std::string(to_string(t))] = n;
  auto& tasks = j["tasks"] = nlohmann::ordered_json::array();
  for (auto t : c.tasks) tasks.push_back(std::string(to_string(t)));
  j["palette"] = opt(c.palette);
  j["relations"] = opt(c.relations);
  auto& prompts = j["prompts"] = nlohmann::ordered_json::object();
  for (const auto& [k, p] : c.prompts) prompts[std::string(to_string(k))] = relative_to(p, base);
  j["classification_classes"] = c.classification_classes;
  j["offline"] = c.offline;
  if (!c.offline) {
    j["chat"] = {{"endpoint", c.chat.http.endpoint},
                 {"model", c.chat.http.model},
                 {"temperature", c.chat.http.temperature}};
  }
  return j;
}

std::string config_hash(const ForgeConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_json(config).dump())));
  return buf;
}

GeneratedData generate_records(const ForgeConfig& config, ChatClient* client) {
  GeneratedData out;
  PipelineReport& report = out.report;
  report.config_hash = config_hash(config);

  LoadOptions opts;
  if (config.class_registry) opts.registry = load_class_registry(*config.class_registry);
  out.corpus = load_corpora(config.manifests, opts);
  if (!config.pseudo_manifests.empty()) {
    LoadOptions pseudo_opts = opts;
    pseudo_opts.provenance = Provenance::PseudoLabel;
    pseudo_opts.registry.reset();
    const Corpus pseudo = load_corpora(config.pseudo_manifests, pseudo_opts);
    out.corpus = merge_pseudo_labels(out.corpus, pseudo, config.pseudo_iou);
  }
  const Corpus& corpus = out.corpus;
  spdlog::info("loaded {} images, {} instances", corpus.images.size(), corpus.instance_count());

  const Palette palette = config.palette ? Palette::load(*config.palette) : Palette::defaults();
  const RelationTable relations =
      config.relations ? RelationTable::load(*config.relations) : RelationTable::defaults();
  std::optional<FileRasterSource> rasters;
  if (config.raster_root) rasters.emplace(*config.raster_root);
  AttributeConfig acfg;
  acfg.color = config.kmeans;
  acfg.seed = config.seed;
  acfg.relation_distance = config.relation_distance;
  acfg.jobs = config.jobs;
  out.attributes = extract_attributes(corpus, rasters ? &*rasters : nullptr, palette, relations, acfg);
  for (std::size_t i = 0; i < out.attributes.failed_images.size(); ++i) {
    report.warnings.push_back("colour unavailable for " + out.attributes.failed_images[i] + ": " +
                              out.attributes.failures[i]);
  }

  auto annotated = [&](std::size_t idx) {
    return AnnotatedImage{&corpus.images[idx], out.attributes.per_image[idx]};
  };

  // Template tasks, assembled per image.
  const std::size_t n = corpus.images.size();
  std::vector<std::vector<InstructionRecord>> grounded(n), region(n), refer(n);
  parallel_for(n, config.jobs, [&](std::size_t idx) {
    const AnnotatedImage img = annotated(idx);
    const std::string& id = img.entry->meta.id;
    if (config.enabled(InstructionTask::GroundedDescription)) {
      Rng rng = record_rng(config, "describe", id);
      if (auto r = make_grounded_description(img, rng)) grounded[idx].push_back(std::move(*r));
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < img.entry->instances.size(); ++i) {
      const std::string key = id + "/" + img.entry->instances[i].instance_id;
      if (config.enabled(InstructionTask::RegionCaption)) {
        Rng rng = record_rng(config, "region", key);
        region[idx].push_back(make_region_caption(img, i, rng));
      }
      if (config.enabled(InstructionTask::ReferringExpression)) {
        Rng rng = record_rng(config, "refer", key);
        auto r = make_referring_expression(img, i, rng);
        if (r && seen.insert(r->prompt()).second) refer[idx].push_back(std::move(*r));
      }
    }
  });

  std::map<InstructionTask, std::vector<InstructionRecord>> by_task;
  auto flatten = [](std::vector<std::vector<InstructionRecord>>& parts) {
    std::vector<InstructionRecord> v;
    for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(v));
    return v;
  };
  by_task[InstructionTask::GroundedDescription] = flatten(grounded);
  by_task[InstructionTask::RegionCaption] = flatten(region);
  by_task[InstructionTask::ReferringExpression] = flatten(refer);

  if (config.enabled(InstructionTask::Vqa) || config.enabled(InstructionTask::Classification)) {
    auto closed = make_vqa_and_classification(corpus, config.classification_classes);
    for (auto& w : closed.warnings) report.warnings.push_back(std::move(w));
    for (auto& r : closed.records) by_task[r.task].push_back(std::move(r));
  }

  for (InstructionTask t : kAllTasks) {
    if (!config.enabled(t) || conversation_kind(t)) continue;
    auto& v = by_task[t];
    TaskCounts& counts = report.tasks[t];
    counts.requested = budget_of(config, t);
    counts.available = v.size();
    v = sample(std::move(v), counts.requested, config.seed, t);
    counts.emitted = v.size();
  }

  // Conversation tasks: sample images first, then ask the chat service.
  std::unique_ptr<ChatClient> owned;
  bool any_chat = false;
  for (InstructionTask t : kAllTasks) any_chat |= config.enabled(t) && conversation_kind(t).has_value();
  if (any_chat && !client) {
    if (config.offline) {
      owned = std::make_unique<OfflineChatClient>();
    } else {
      HttpChatSettings http = config.chat.http;
      if (const char* env = std::getenv("GEOFORGE_CHAT_ENDPOINT"); env && *env) http.endpoint = env;
      if (const char* key = std::getenv(config.chat.api_key_env.c_str()); key) http.api_key = key;
      owned = std::make_unique<HttpChatClient>(std::move(http));
    }
    client = owned.get();
  }
  std::vector<std::size_t> described;
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (!corpus.images[idx].instances.empty()) described.push_back(idx);
  }
  for (InstructionTask t : kAllTasks) {
    const auto kind = conversation_kind(t);
    if (!kind || !config.enabled(t)) continue;
    TaskCounts& counts = report.tasks[t];
    counts.requested = budget_of(config, t);
    counts.available = described.size();
    const auto chosen = sample(described, counts.requested, config.seed, t);
    std::vector<SynthesisJob> jobs;
    for (std::size_t idx : chosen) {
      Rng rng = record_rng(config, "describe", corpus.images[idx].meta.id);
      jobs.push_back({corpus.images[idx].meta, make_short_description(annotated(idx), rng)});
    }
    const auto it = config.prompts.find(*kind);
    const PromptTemplate prompt =
        it != config.prompts.end() ? PromptTemplate::load(it->second) : PromptTemplate::shipped(*kind);
    SynthesisOptions sopts;
    sopts.attempts = config.chat.attempts;
    sopts.backoff = std::chrono::milliseconds(config.chat.backoff_ms);
    sopts.max_in_flight = config.chat.max_in_flight;
    auto result = synthesize_conversations(jobs, *kind, *client, prompt, sopts);
    for (auto& f : result.failures) {
      spdlog::warn("{}: {}", to_string(t), f);
      report.chat_failures.push_back(std::string(to_string(t)) + ": " + f);
    }
    auto& v = by_task[t];
    for (auto& r : result.records) {
      if (auto problem = check_record(r)) {
        report.chat_failures.push_back(std::string(to_string(t)) + ": " + r.image_id + ": " + *problem);
        continue;
      }
      v.push_back(std::move(r));
    }
    counts.emitted = v.size();
  }

  for (InstructionTask t : kAllTasks) {
    for (auto& r : by_task[t]) {
      if (auto problem = check_record(r)) throw Error("generated record " + r.id + " is invalid: " + *problem);
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

PipelineReport run_pipeline(const ForgeConfig& config, ChatClient* client) {
  GeneratedData data = generate_records(config, client);
  PipelineReport& report = data.report;

  nlohmann::ordered_json extra;
  auto& tasks = extra["budget"] = nlohmann::ordered_json::object();
  for (const auto& [t, c] : report.tasks) {
    tasks[std::string(to_string(t))] = {
        {"requested", c.requested ? nlohmann::ordered_json(*c.requested) : nlohmann::ordered_json(nullptr)},
        {"available", c.available},
        {"emitted", c.emitted}};
  }
  extra["chat_failures"] = report.chat_failures.size();
  extra["warnings"] = report.warnings;

  ShardOptions sopts;
  sopts.output_dir = config.output_dir;
  sopts.seed = config.seed;
  sopts.split = config.split;
  sopts.config_hash = report.config_hash;
  report.shards = emit_shards(data.records, sopts, extra);

  std::vector<InstructionRecord> test;
  for (const auto& r : data.records) {
    if (std::binary_search(report.shards.test_images.begin(), report.shards.test_images.end(), r.image_id)) {
      test.push_back(r);
    }
  }
  const auto benchmark = make_benchmark(test, data.corpus);
  write_benchmark(config.output_dir / "benchmark.jsonl", benchmark);
  report.benchmark_items = benchmark.size();
  spdlog::info("wrote {} train and {} test records, {} benchmark questions to {}",
               report.shards.train_records, report.shards.test_records, benchmark.size(),
               config.output_dir.string());
  return report;
}

}  // namespace geoforge
