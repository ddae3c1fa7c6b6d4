#include "geoforge/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace geoforge {

using nlohmann::json;

std::string_view to_string(SourceDataset s) {
  switch (s) {
    case SourceDataset::DOTA: return "DOTA";
    case SourceDataset::DIOR: return "DIOR";
    case SourceDataset::FAIR1M: return "FAIR1M";
    case SourceDataset::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::GroundTruth ? "gt" : "pseudo";
}

const ImageEntry* Corpus::find(std::string_view image_id) const {
  auto it = std::lower_bound(images.begin(), images.end(), image_id,
                             [](const ImageEntry& e, std::string_view id) { return e.meta.id < id; });
  if (it == images.end() || it->meta.id != image_id) return nullptr;
  return &*it;
}

std::size_t Corpus::instance_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.instances.size();
  return n;
}

namespace {

SourceDataset parse_source(const std::string& s) {
  std::string up = s;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "DOTA") return SourceDataset::DOTA;
  if (up == "DIOR") return SourceDataset::DIOR;
  if (up == "FAIR1M") return SourceDataset::FAIR1M;
  return SourceDataset::OTHER;
}

double number_at(const json& arr, std::size_t i, std::size_t line, const std::string& field) {
  if (!arr[i].is_number()) throw ValidationError("expected a number", line, field);
  const double v = arr[i].get<double>();
  if (!std::isfinite(v)) throw ValidationError("non-finite number", line, field);
  return v;
}

Box parse_box(const json& inst, std::size_t line, const std::string& prefix) {
  if (inst.contains("box")) {
    const json& b = inst["box"];
    const std::string field = prefix + ".box";
    if (!b.is_array() || b.size() != 5) {
      throw ValidationError("expected [cx, cy, w, h, theta_degrees]", line, field);
    }
    Box box{number_at(b, 0, line, field), number_at(b, 1, line, field),
            number_at(b, 2, line, field), number_at(b, 3, line, field),
            number_at(b, 4, line, field)};
    if (!(box.w > 0) || !(box.h > 0)) {
      throw ValidationError("box width and height must be positive", line, field);
    }
    return canonicalize(box);
  }
  if (inst.contains("polygon")) {
    const json& p = inst["polygon"];
    const std::string field = prefix + ".polygon";
    std::vector<Point> pts;
    if (p.is_array() && p.size() == 8) {
      for (std::size_t i = 0; i < 8; i += 2) {
        pts.emplace_back(number_at(p, i, line, field), number_at(p, i + 1, line, field));
      }
    } else if (p.is_array() && p.size() == 4) {
      for (const auto& q : p) {
        if (!q.is_array() || q.size() != 2) {
          throw ValidationError("expected four [x, y] corners", line, field);
        }
        pts.emplace_back(number_at(q, 0, line, field), number_at(q, 1, line, field));
      }
    } else {
      throw ValidationError("expected 8 numbers or four [x, y] corners", line, field);
    }
    const Box box = min_area_rect<double>(pts);
    if (!box.valid()) throw ValidationError("degenerate polygon", line, field);
    return box;
  }
  throw ValidationError("instance needs either 'box' or 'polygon'", line, prefix);
}

}  // namespace

ImageEntry parse_image_record(const json& record, std::size_t line, const LoadOptions& options) {
  if (!record.is_object()) throw ValidationError("record must be an object", line);
  auto require_string = [&](const char* key) -> std::string {
    if (!record.contains(key) || !record[key].is_string()) {
      throw ValidationError("missing string", line, key);
    }
    return record[key].get<std::string>();
  };
  auto require_dim = [&](const char* key) -> int {
    if (!record.contains(key) || !record[key].is_number_integer()) {
      throw ValidationError("missing integer", line, key);
    }
    const auto v = record[key].get<long long>();
    if (v <= 0 || v > 1'000'000) throw ValidationError("dimension must be positive", line, key);
    return static_cast<int>(v);
  };

  ImageEntry entry;
  entry.meta.id = require_string("id");
  if (entry.meta.id.empty()) throw ValidationError("empty image id", line, "id");
  entry.meta.path = record.contains("path") ? std::filesystem::path(require_string("path"))
                                            : std::filesystem::path(entry.meta.id);
  entry.meta.width = require_dim("width");
  entry.meta.height = require_dim("height");
  if (record.contains("source")) entry.meta.source_dataset = parse_source(require_string("source"));

  if (record.contains("instances")) {
    const json& arr = record["instances"];
    if (!arr.is_array()) throw ValidationError("expected an array", line, "instances");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& inst = arr[i];
      const std::string prefix = "instances[" + std::to_string(i) + "]";
      if (!inst.is_object()) throw ValidationError("expected an object", line, prefix);
      ObbInstance obj;
      if (!inst.contains("class") || !inst["class"].is_string() ||
          inst["class"].get<std::string>().empty()) {
        throw ValidationError("missing class", line, prefix + ".class");
      }
      obj.class_name = inst["class"].get<std::string>();
      if (options.registry && std::find(options.registry->begin(), options.registry->end(),
                                        obj.class_name) == options.registry->end()) {
        throw ValidationError("unknown class '" + obj.class_name + "'", line, prefix + ".class");
      }
      obj.instance_id = inst.contains("id") && inst["id"].is_string()
                            ? inst["id"].get<std::string>()
                            : entry.meta.id + "#" + std::to_string(i);
      if (!seen.insert(obj.instance_id).second) {
        throw ValidationError("duplicate instance id '" + obj.instance_id + "'", line,
                              prefix + ".id");
      }
      obj.box = parse_box(inst, line, prefix);
      if (!(obj.box.cx >= 0 && obj.box.cx < entry.meta.width && obj.box.cy >= 0 &&
            obj.box.cy < entry.meta.height)) {
        throw ValidationError("box center outside the image", line, prefix);
      }
      obj.provenance = options.provenance;
      if (inst.contains("provenance")) {
        const auto p = inst["provenance"].get<std::string>();
        if (p == "pseudo") obj.provenance = Provenance::PseudoLabel;
        else if (p == "gt") obj.provenance = Provenance::GroundTruth;
        else throw ValidationError("expected 'gt' or 'pseudo'", line, prefix + ".provenance");
      }
      entry.instances.push_back(std::move(obj));
    }
  }

  if (record.contains("qa")) {
    const json& arr = record["qa"];
    if (!arr.is_array()) throw ValidationError("expected an array", line, "qa");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& q = arr[i];
      const std::string prefix = "qa[" + std::to_string(i) + "]";
      if (!q.is_object() || !q.contains("question") || !q["question"].is_string()) {
        throw ValidationError("missing question", line, prefix);
      }
      QaPair pair;
      pair.question = q["question"].get<std::string>();
      if (q.contains("answer") && q["answer"].is_string()) pair.answer = q["answer"].get<std::string>();
      if (q.contains("category") && q["category"].is_string()) {
        pair.category = q["category"].get<std::string>();
      }
      entry.qa.push_back(std::move(pair));
    }
  }
  if (record.contains("label")) {
    if (!record["label"].is_string()) throw ValidationError("expected a string", line, "label");
    entry.scene_label = record["label"].get<std::string>();
  }
  return entry;
}

namespace {

void finalize(Corpus& corpus, const LoadOptions& options) {
  std::stable_sort(corpus.images.begin(), corpus.images.end(),
                   [](const ImageEntry& a, const ImageEntry& b) { return a.meta.id < b.meta.id; });
  for (std::size_t i = 1; i < corpus.images.size(); ++i) {
    if (corpus.images[i].meta.id == corpus.images[i - 1].meta.id) {
      throw ValidationError("duplicate image id '" + corpus.images[i].meta.id + "'");
    }
  }
  if (options.registry) {
    corpus.class_registry = *options.registry;
  } else {
    std::set<std::string> classes;
    for (const auto& img : corpus.images) {
      for (const auto& inst : img.instances) classes.insert(inst.class_name);
    }
    corpus.class_registry.assign(classes.begin(), classes.end());
  }
}

void read_stream(std::istream& in, Corpus& corpus, const LoadOptions& options) {
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    corpus.images.push_back(parse_image_record(record, line_no, options));
  }
}

}  // namespace

Corpus load_corpus(std::istream& manifest, const LoadOptions& options) {
  Corpus corpus;
  read_stream(manifest, corpus, options);
  finalize(corpus, options);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& manifest, const LoadOptions& options) {
  return load_corpora({manifest}, options);
}

Corpus load_corpora(const std::vector<std::filesystem::path>& manifests,
                    const LoadOptions& options) {
  Corpus corpus;
  for (const auto& path : manifests) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest " + path.string());
    try {
      read_stream(in, corpus, options);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  finalize(corpus, options);
  return corpus;
}

std::vector<std::string> load_class_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open class registry " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const json& arr = j.is_object() ? j.at("classes") : j;
  std::vector<std::string> out;
  for (const auto& c : arr) out.push_back(c.get<std::string>());
  return out;
}

Corpus merge_pseudo_labels(const Corpus& corpus, const Corpus& pseudo, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold <= 1)) {
    throw Error("merge_pseudo_labels: threshold must lie in (0, 1]");
  }
  std::vector<std::string> orphans;
  for (const auto& img : pseudo.images) {
    if (!corpus.find(img.meta.id)) orphans.push_back(img.meta.id);
  }
  if (!orphans.empty()) {
    std::string msg = "pseudo labels reference unknown images:";
    for (const auto& id : orphans) msg += " " + id;
    throw ValidationError(msg);
  }

  Corpus out = corpus;
  std::set<std::string> registry(out.class_registry.begin(), out.class_registry.end());
  for (const auto& pimg : pseudo.images) {
    auto it = std::lower_bound(
        out.images.begin(), out.images.end(), pimg.meta.id,
        [](const ImageEntry& e, const std::string& id) { return e.meta.id < id; });
    ImageEntry& target = *it;
    std::vector<Box> truth;
    for (const auto& inst : target.instances) {
      if (inst.provenance == Provenance::GroundTruth) truth.push_back(inst.box);
    }
    std::set<std::string> ids;
    for (const auto& inst : target.instances) ids.insert(inst.instance_id);
    for (const auto& cand : pimg.instances) {
      const bool overlaps = std::any_of(truth.begin(), truth.end(), [&](const Box& gt) {
        return rotated_iou(gt, cand.box) > iou_threshold;
      });
      if (overlaps) continue;
      ObbInstance kept = cand;
      kept.provenance = Provenance::PseudoLabel;
      while (!ids.insert(kept.instance_id).second) kept.instance_id += "~p";
      if (registry.insert(kept.class_name).second) out.class_registry.push_back(kept.class_name);
      target.instances.push_back(std::move(kept));
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const ImageEntry& entry) {
  nlohmann::ordered_json j;
  j["id"] = entry.meta.id;
  j["path"] = entry.meta.path.generic_string();
  j["width"] = entry.meta.width;
  j["height"] = entry.meta.height;
  j["source"] = std::string(to_string(entry.meta.source_dataset));
  auto& arr = j["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : entry.instances) {
    nlohmann::ordered_json o;
    o["id"] = inst.instance_id;
    o["class"] = inst.class_name;
    o["box"] = {inst.box.cx, inst.box.cy, inst.box.w, inst.box.h, inst.box.theta};
    o["provenance"] = std::string(to_string(inst.provenance));
    arr.push_back(std::move(o));
  }
  if (!entry.qa.empty()) {
    auto& qa = j["qa"] = nlohmann::ordered_json::array();
    for (const auto& q : entry.qa) {
      qa.push_back({{"question", q.question}, {"answer", q.answer}, {"category", q.category}});
    }
  }
  if (entry.scene_label) j["label"] = *entry.scene_label;
  return j;
}

}  // namespace geoforge
