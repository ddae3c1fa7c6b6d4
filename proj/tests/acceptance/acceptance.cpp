// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fixture.hpp"
#include "geoforge/attributes.hpp"
#include "geoforge/codec.hpp"
#include "geoforge/eval.hpp"
#include "geoforge/expression.hpp"
#include "geoforge/geometry.hpp"
#include "geoforge/pipeline.hpp"
#include "geoforge/shards.hpp"
#include "geoforge/text_metrics.hpp"
#include "oracles.hpp"

using namespace geoforge;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string str(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

std::string rotated_iou_vs_monte_carlo() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pos(0, 30), size(2, 40), angle(0, 90);
  std::mt19937_64 mc(17);
  double worst = 0;
  double iou_seconds = 0;
  for (int i = 0; i < 200; ++i) {
    const Box a{pos(rng), pos(rng), size(rng), size(rng), angle(rng)};
    const Box b{pos(rng), pos(rng), size(rng), size(rng), angle(rng)};
    const auto s = std::chrono::steady_clock::now();
    const double exact = rotated_iou(a, b);
    iou_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count();
    const double approx = oracle::monte_carlo_iou(a, b, 1'000'000, mc);
    worst = std::max(worst, std::abs(exact - approx));
    require(std::abs(exact - approx) <= 1e-2, "pair " + std::to_string(i) + ": " + str(exact) + " vs " + str(approx));
    require(rotated_iou(a, a) == 1.0, "identical boxes must give exactly 1");
    const Box far{a.cx + 200, a.cy, a.w, a.h, a.theta};
    require(rotated_iou(a, far) == 0.0, "disjoint boxes must give 0");
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(total < 30, "runtime " + str(total) + " s");
  return "max |err| " + str(worst) + ", iou " + str(iou_seconds * 1e3) + " ms, total " + str(total) + " s";
}

std::string codec_sweep_and_fuzz() {
  std::size_t tokens = 0;
  std::vector<int> thetas;
  for (int t = 0; t < 90; t += 3) thetas.push_back(t);
  thetas.push_back(89);
  for (int x0 = 0; x0 <= 100; x0 += 10) {
    for (int x1 = x0; x1 <= 100; x1 += 10) {
      for (int y0 = 0; y0 <= 100; y0 += 10) {
        for (int y1 = y0; y1 <= 100; y1 += 10) {
          for (int th : thetas) {
            const SpatialToken t{x0, y0, x1, y1, th};
            const auto back = decode_token(encode_token(t));
            require(back && *back == t, "round trip failed for " + encode_token(t));
            ++tokens;
          }
        }
      }
    }
  }
  require(tokens >= 100000, "lattice too small");

  static const std::vector<std::string> pieces{"<p>", "</p>", "{", "}", "<", ">", "|", " ", "a", "9",
                                               "100", "{<1><2><3><4>|<5>}", "{<1><2><3>", "<7>", "\n"};
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), len(0, 40);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    if (i % 4 == 0) {
      s.resize(len(rng));
      for (auto& c : s) c = static_cast<char>(byte(rng));
    } else {
      for (std::size_t k = len(rng); k > 0; --k) s += pieces[pick(rng)];
    }
    GroundedResponse r;
    try {
      r = decode_response(s);
    } catch (const std::exception& e) {
      throw Failure("decode_response threw on fuzz input " + std::to_string(i) + ": " + e.what());
    }
    require(reinsert_spans(r) == s, "reinsertion differs on fuzz input " + std::to_string(i));
  }
  return std::to_string(tokens) + " lattice tokens, 10000 fuzz strings";
}

// Relation rules read straight from the shipped file.
struct OracleRule {
  std::set<std::string> subjects, objects;
  std::vector<std::pair<std::string, std::string>> phrases;  // text, containment
};

std::vector<OracleRule> shipped_rules() {
  std::ifstream in(fs::path(GEOFORGE_ASSET_DIR) / "relations.json");
  const auto j = nlohmann::json::parse(in);
  std::vector<OracleRule> rules;
  for (const auto& r : j.at("rules")) {
    OracleRule o;
    for (const auto& s : r.at("subjects")) o.subjects.insert(s.get<std::string>());
    for (const auto& s : r.at("objects")) o.objects.insert(s.get<std::string>());
    for (const auto& p : r.at("phrases")) o.phrases.emplace_back(p.at("text"), p.value("containment", "none"));
    rules.push_back(o);
  }
  return rules;
}

bool inside_all_corners(const Box& inner, const Box& outer) {
  const double c = std::cos(inner.theta * M_PI / 180), s = std::sin(inner.theta * M_PI / 180);
  for (double sx : {-0.5, 0.5}) {
    for (double sy : {-0.5, 0.5}) {
      const double x = inner.cx + sx * inner.w * c - sy * inner.h * s;
      const double y = inner.cy + sx * inner.w * s + sy * inner.h * c;
      // tolerance for corners lying on a shared edge
      bool any = false;
      for (double dx : {-1e-6, 0.0, 1e-6}) {
        for (double dy : {-1e-6, 0.0, 1e-6}) any = any || oracle::inside(outer, x + dx, y + dy);
      }
      if (!any) return false;
    }
  }
  return true;
}

std::optional<std::tuple<std::string, std::string, std::string>> oracle_relation(
    const std::vector<OracleRule>& rules, const ObbInstance& a, const ObbInstance& b) {
  for (const auto& r : rules) {
    for (int dir = 0; dir < 2; ++dir) {
      const ObbInstance& s = dir ? b : a;
      const ObbInstance& o = dir ? a : b;
      if (!r.subjects.count(s.class_name) || !r.objects.count(o.class_name)) continue;
      for (const auto& [text, cont] : r.phrases) {
        const bool ok = cont == "none" || (cont == "subject_in_object" && inside_all_corners(s.box, o.box)) ||
                        (cont == "object_in_subject" && inside_all_corners(o.box, s.box));
        if (ok) return std::make_tuple(s.instance_id, text, o.instance_id);
      }
    }
  }
  return std::nullopt;
}

std::string attribute_extraction() {
  const auto scenes = fixture::make_scenes(20, 2024);
  const Corpus corpus = fixture::to_corpus(scenes);
  MemoryRasterSource rasters;
  for (const auto& s : scenes) rasters.add(s.id, fixture::render(s));
  AttributeConfig cfg;
  cfg.seed = 7;
  const AttributeReport rep = extract_attributes(corpus, &rasters, Palette::defaults(),
                                                 RelationTable::load(fs::path(GEOFORGE_ASSET_DIR) / "relations.json"), cfg);
  require(rep.failed_images.empty(), "raster failures");

  std::map<std::string, std::vector<double>> areas;
  for (const auto& img : corpus.images) {
    for (const auto& inst : img.instances) areas[inst.class_name].push_back(inst.box.area());
  }
  const auto rules = shipped_rules();
  std::size_t objects = 0, triples = 0;
  for (const auto& s : scenes) {
    const ImageEntry* img = corpus.find(s.id);
    const auto& attrs = rep.per_image[static_cast<std::size_t>(img - corpus.images.data())];
    const std::size_t n = s.objects.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = s.objects[i];
      const auto& a = attrs[i];
      require(a.color && *a.color == o.color, o.id + ": colour " + a.color.value_or("none") + " != " + o.color);
      require(a.relative_location == o.cell, o.id + ": grid cell");
      const auto& v = areas[o.cls];
      const double x = img->instances[i].box.area();
      const SizeLabel want = x < oracle::percentile(v, 20)   ? SizeLabel::Small
                             : x > oracle::percentile(v, 80) ? SizeLabel::Large
                                                             : SizeLabel::Normal;
      require(a.relative_size == want, o.id + ": size label");
      ++objects;
    }

    // Union-find components, then every pair in a component filtered by the rules.
    const double limit = 0.1 * std::hypot(double(fixture::kWidth), double(fixture::kHeight));
    oracle::UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if ((img->instances[i].box.center() - img->instances[j].box.center()).norm() < limit) uf.unite(i, j);
      }
    }
    std::set<std::tuple<std::string, std::string, std::string>> want, got;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (uf.find(i) != uf.find(j)) continue;
        if (auto t = oracle_relation(rules, img->instances[i], img->instances[j])) want.insert(*t);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& r : attrs[i].relations) got.insert({img->instances[i].instance_id, r.phrase, r.target_id});
    }
    require(got == want, s.id + ": relation triples differ");
    triples += got.size();
  }
  require(triples > 0, "fixture produced no relations");
  return std::to_string(objects) + " objects, " + std::to_string(triples) + " relation triples";
}

std::string expression_grammar() {
  const Palette palette = Palette::defaults();
  const std::regex grammar(phrase_grammar(palette));
  const std::vector<std::string> classes{"plane", "ship", "small-vehicle", "ground-track-field",
                                         "storage_tank", "basketball-court", "harbor"};
  std::mt19937_64 rng(4242);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::bernoulli_distribution coin(0.5);
  const std::regex dangling(R"( (?:in|on|at|the|of)\.$)");
  for (int i = 0; i < 10000; ++i) {
    AttributeSet a;
    a.category = classes[pick(classes.size())];
    if (coin(rng)) a.color = palette.colors()[pick(palette.colors().size())].name;
    a.relative_size = static_cast<SizeLabel>(pick(3));
    if (coin(rng)) a.relative_location = static_cast<GridPosition>(pick(9));
    Rng r(static_cast<std::uint64_t>(i));
    const std::string text = phrase(a, coin(rng), r).text;
    require(std::regex_match(text, grammar), "grammar mismatch: " + text);
    require(text.find("  ") == std::string::npos, "double space: " + text);
    require(!std::regex_search(text, dangling), "dangling word: " + text);
  }
  return "10000 phrases";
}

int run_forge(const std::string& args) {
  const std::string cmd = std::string(FORGE_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::map<std::string, std::size_t> kBudgets{{"region_caption", 30},      {"referring_expression", 20},
                                                  {"grounded_description", 12}, {"vqa", 40},
                                                  {"multi_round", 6},           {"complex_qa", 6},
                                                  {"detailed_description", 6}};

std::string pipeline_determinism(const fs::path& dir) {
  fixture::write_corpus(dir, fixture::make_scenes(20, 77), kBudgets, 1);
  const std::string cfg = (dir / "config.json").string();
  require(run_forge("generate --config " + cfg + " --offline --seed 7 --output " + (dir / "run1").string()) == 0,
          "first run failed");
  require(run_forge("generate --config " + cfg + " --offline --seed 7 --output " + (dir / "run2").string()) == 0,
          "second run failed");
  for (const char* f : {"train.jsonl", "test.jsonl", "stats.json", "benchmark.jsonl"}) {
    require(fs::exists(dir / "run1" / f), std::string(f) + " missing");
    require(fixture::slurp(dir / "run1" / f) == fixture::slurp(dir / "run2" / f), std::string(f) + " differs");
  }
  std::map<std::string, std::size_t> counts;
  for (const char* f : {"train.jsonl", "test.jsonl"}) {
    std::ifstream in(dir / "run1" / f);
    for (std::string line; std::getline(in, line);) ++counts[nlohmann::json::parse(line)["task"]];
  }
  for (const auto& [task, budget] : kBudgets) {
    require(counts[task] == budget, task + ": " + std::to_string(counts[task]) + " != " + std::to_string(budget));
  }
  return "byte-identical shards, " + std::to_string(kBudgets.size()) + " budgets met exactly";
}

std::vector<BenchmarkItem> fixture_benchmark(const fs::path& dir) {
  ForgeConfig cfg = load_forge_config(dir / "config.json");
  cfg.offline = true;
  const GeneratedData d = generate_records(cfg);
  return make_benchmark(d.records, d.corpus);
}

Predictions echo(const std::vector<BenchmarkItem>& items, BenchmarkKind kind) {
  Predictions p;
  for (const auto& it : items) {
    if (it.kind == kind) p[it.id] = it.answer;
  }
  return p;
}

std::string self_consistency(const fs::path& dir) {
  const auto items = fixture_benchmark(dir);
  const auto card = score_grounding(echo(items, BenchmarkKind::Ground), items, 0.5);
  require(card.overall.total > 0, "no ground questions");
  require(card.overall.percent() == 100.0, "overall " + str(card.overall.percent()));
  std::size_t buckets = 0;
  for (const auto* group : {&card.by_size, &card.by_arity, &card.by_task}) {
    for (const auto& [name, b] : *group) {
      require(b.total > 0, "bucket " + name + " is empty");
      require(b.percent() == 100.0, "bucket " + name + " " + str(b.percent()));
      ++buckets;
    }
  }
  const auto desc = score_grounded_description(echo(items, BenchmarkKind::Description), items);
  require(desc.acc50.percent() == 100.0 && desc.acc25.percent() == 100.0, "description accuracy");

  const auto empty = score_grounding({}, items, 0.5);
  require(empty.overall.percent() == 0.0, "empty predictions score " + str(empty.overall.percent()));

  std::vector<BenchmarkItem> known;
  Predictions p;
  for (int i = 0; i < 100; ++i) {
    const SpatialToken gt{20, 20, 40, 40, 0};
    known.push_back({"k" + std::to_string(i), BenchmarkKind::Ground, "k.png", 1000, 1000, "[refer] <p>x</p>",
                     encode_token(gt), ""});
    // i < 53: IoU 1; otherwise shifted by 15 of 20 units, IoU 5/35
    p[known.back().id] = encode_token(i < 53 ? gt : SpatialToken{35, 20, 55, 40, 0});
  }
  const double known_acc = score_grounding(p, known, 0.5).overall.percent();
  require(known_acc == 53.0, "constructed fixture " + str(known_acc));
  return std::to_string(card.overall.total) + " boxes at 100.0 in " + std::to_string(buckets) +
         " buckets, empty 0.0, constructed 53.0";
}

std::string text_metric_oracles() {
  static const std::vector<std::string> vocab{"the", "a", "white", "ship", "harbor", "at", "left", "plane"};
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> len(1, 8), w(0, vocab.size() - 1);
  auto sentence = [&] {
    std::string s;
    for (std::size_t k = len(rng); k > 0; --k) s += vocab[w(rng)] + " ";
    return s;
  };
  for (int i = 0; i < 50; ++i) {
    const std::string c = sentence(), r = sentence();
    require(std::abs(rouge1(c, r) - oracle::rouge1(c, r)) <= 1e-9, "rouge1 on pair " + std::to_string(i));
    require(std::abs(rougeL(c, r) - oracle::rougeL(c, r)) <= 1e-9, "rougeL on pair " + std::to_string(i));
    require(std::abs(meteor(c, r) - oracle::meteor(c, r)) <= 1e-9, "meteor on pair " + std::to_string(i));
  }
  for (int n = 1; n <= 8; ++n) {
    std::string s;
    for (int k = 0; k < n; ++k) s += "t" + std::to_string(k) + " ";
    require(rouge1(s, s) == 1.0 && rougeL(s, s) == 1.0, "identity rouge");
    require(std::abs(meteor(s, s) - (1 - 0.5 * std::pow(1.0 / n, 3))) <= 1e-12, "identity meteor n=" + std::to_string(n));
  }
  return "50 pairs within 1e-9, identities exact";
}

std::string threshold_monotonicity(const fs::path& dir) {
  const auto items = fixture_benchmark(dir);
  std::mt19937_64 rng(5);
  std::size_t fixtures = 0;
  for (int shift = 0; shift <= 10; ++shift) {
    for (int variant = 0; variant < 3; ++variant) {
      Predictions p;
      std::uniform_int_distribution<int> jitter(-shift, shift);
      for (const auto& it : items) {
        if (it.kind != BenchmarkKind::Ground && it.kind != BenchmarkKind::Description) continue;
        auto boxes = decode_response(it.answer).boxes();
        for (auto& t : boxes) {
          const int dx = variant == 0 ? shift : jitter(rng), dy = variant == 2 ? jitter(rng) : 0;
          t.x_left = std::clamp(t.x_left + dx, 0, 100);
          t.x_right = std::clamp(t.x_right + dx, t.x_left, 100);
          t.y_top = std::clamp(t.y_top + dy, 0, 100);
          t.y_bottom = std::clamp(t.y_bottom + dy, t.y_top, 100);
        }
        if (variant == 1 && shift % 3 == 1 && !boxes.empty()) boxes.pop_back();
        p[it.id] = encode_tokens(boxes);
      }
      const double a25 = score_grounding(p, items, 0.25).overall.percent();
      const double a50 = score_grounding(p, items, 0.5).overall.percent();
      require(a25 >= a50, "ground fixture shift " + std::to_string(shift) + ": " + str(a25) + " < " + str(a50));
      const auto d = score_grounded_description(p, items);
      require(d.acc25.percent() >= d.acc50.percent(), "description fixture shift " + std::to_string(shift));
      ++fixtures;
    }
  }
  return std::to_string(fixtures) + " prediction fixtures";
}

std::string split_hygiene(const fs::path& dir) {
  ForgeConfig cfg = load_forge_config(dir / "config.json");
  cfg.offline = true;
  const GeneratedData d = generate_records(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const fs::path out = dir / ("split_" + std::to_string(seed));
    emit_shards(d.records, {out, seed * 7919 + 3, 0.8, "x"});
    std::set<std::string> train, test;
    for (const auto& r : read_shard(out / "train.jsonl")) train.insert(r.image);
    for (const auto& r : read_shard(out / "test.jsonl")) test.insert(r.image);
    require(!train.empty() && !test.empty(), "empty shard for seed " + std::to_string(seed));
    for (const auto& img : test) require(!train.count(img), "image " + img + " in both shards");
    fs::remove_all(out);
  }
  return "20 seeds disjoint";
}

// Brute-force statement of the closed-answer rules.
std::string norm(const std::string& s) {
  std::string t;
  for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::istringstream in(t);
  std::string out, w;
  while (in >> w) out += (out.empty() ? "" : " ") + w;
  while (!out.empty() && std::string(".,;:!?").find(out.back()) != std::string::npos) {
    out.pop_back();
    while (!out.empty() && out.back() == ' ') out.pop_back();
  }
  return out;
}

bool word_contains(const std::string& hay, const std::string& needle) {
  const auto h = oracle::words(hay), n = oracle::words(needle);
  if (n.empty() || n.size() > h.size()) return false;
  for (std::size_t i = 0; i + n.size() <= h.size(); ++i) {
    if (std::equal(n.begin(), n.end(), h.begin() + static_cast<long>(i))) return true;
  }
  return false;
}

bool brute_classification(const std::string& pred, const std::string& truth, const std::vector<std::string>& classes) {
  auto key = [](std::string s) {
    std::replace(s.begin(), s.end(), '_', ' ');
    return norm(s);
  };
  if (key(pred) == key(truth)) return true;
  if (!word_contains(key(pred), key(truth))) return false;
  for (const auto& c : classes) {
    if (key(c) == key(truth) || word_contains(key(truth), key(c))) continue;
    if (word_contains(key(pred), key(c))) return false;
  }
  return true;
}

std::string closed_answers() {
  std::mt19937_64 rng(10);
  std::bernoulli_distribution coin(0.5);
  auto pick = [&](const std::vector<std::string>& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
  const std::vector<std::string> decorations{"", " ", ".", "!", "  ", " ."};
  auto decorate = [&](std::string s) {
    if (coin(rng)) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return pick(decorations) + s + pick(decorations);
  };

  // yes/no and rural/urban
  std::vector<BenchmarkItem> vqa;
  Predictions p;
  const std::vector<std::string> cats{"presence", "comparison", "rural_urban", "count", "area"};
  for (int i = 0; i < 400; ++i) {
    BenchmarkItem it{"v" + std::to_string(i), BenchmarkKind::Vqa, "x", 100, 100, "Q?", "", pick(cats)};
    it.answer = it.category == "rural_urban" ? pick({"rural", "urban"})
                : it.category == "count"     ? "4"
                : it.category == "area"      ? "m2"
                                             : pick({"yes", "no"});
    vqa.push_back(it);
    if (i % 9) p[it.id] = decorate(pick({"yes", "no", "rural", "urban", "4", "yes no"}));
  }
  for (ClosedKind kind : {ClosedKind::VqaYesNo, ClosedKind::RuralUrban}) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> want;
    for (const auto& it : vqa) {
      if (it.category == "count" || it.category == "area") continue;
      if (kind == ClosedKind::RuralUrban && it.category != "rural_urban") continue;
      auto& b = want[it.category];
      ++b.second;
      if (p.count(it.id) && norm(p.at(it.id)) == norm(it.answer)) ++b.first;
    }
    const auto card = score_closed_answers(p, vqa, kind);
    require(card.per_category.size() == want.size(), "category count");
    for (const auto& [c, b] : want) {
      require(card.per_category.at(c).matched == b.first && card.per_category.at(c).total == b.second,
              "category " + c);
    }
  }

  // classification containment
  const std::vector<std::string> classes{"harbor", "beach", "residential", "dense_residential", "river",
                                         "bridge", "railway_station", "railway"};
  const std::vector<std::string> fillers{"it is a", "this looks like", "", "maybe", "a view of"};
  std::vector<BenchmarkItem> cls;
  Predictions cp;
  for (int i = 0; i < 600; ++i) {
    const std::string truth = pick(classes);
    cls.push_back({"c" + std::to_string(i), BenchmarkKind::Classification, "x", 100, 100, "?", truth, truth});
    std::string pred = pick(fillers) + " " + pick(classes);
    if (coin(rng)) pred += " or " + pick(classes);
    std::replace(pred.begin(), pred.end(), '_', coin(rng) ? ' ' : '_');
    cp[cls.back().id] = decorate(pred);
  }
  const auto card = score_closed_answers(cp, cls, ClosedKind::Classification, classes);
  std::size_t right = 0;
  for (const auto& it : cls) {
    const bool want = brute_classification(cp.at(it.id), it.answer, classes);
    require(classification_correct(cp.at(it.id), it.answer, classes) == want, "classification of '" + cp.at(it.id) + "'");
    right += want;
  }
  require(card.overall.matched == right && card.overall.total == cls.size(), "classification totals");
  return "400 VQA answers, 600 classification answers";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const fs::path dir = fixture::temp_dir("acceptance");
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
      {"rotated IoU vs Monte-Carlo", rotated_iou_vs_monte_carlo},
      {"spatial codec sweep and fuzz", codec_sweep_and_fuzz},
      {"attribute extraction on fixture", attribute_extraction},
      {"expression grammar", expression_grammar},
      {"pipeline determinism and budgets", [&] { return pipeline_determinism(dir); }},
      {"benchmark self-consistency", [&] { return self_consistency(dir); }},
      {"text metric oracles", text_metric_oracles},
      {"acc@0.25 >= acc@0.5", [&] { return threshold_monotonicity(dir); }},
      {"split hygiene", [&] { return split_hygiene(dir); }},
      {"closed-answer protocol", closed_answers},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, fn] = criteria[i];
    std::string detail;
    bool ok = true;
    try {
      detail = fn();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    std::printf("%s %2zu %-34s %s\n", ok ? "PASS" : "FAIL", i + 1, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failed += !ok;
  }
  fs::remove_all(dir);
  return failed ? 1 : 0;
}
