#include "geoforge/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include <nlohmann/json.hpp>

#include "geoforge/kmeans.hpp"
#include "geoforge/util.hpp"

namespace geoforge {

using nlohmann::json;

std::string_view to_string(SizeLabel s) {
  switch (s) {
    case SizeLabel::Small: return "small";
    case SizeLabel::Normal: return "normal";
    case SizeLabel::Large: return "large";
  }
  return "normal";
}

double nearest_rank(std::span<const double> sorted, int percent) {
  if (sorted.empty()) throw Error("nearest_rank: empty sample");
  const std::size_t n = sorted.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

SizeThresholds compute_size_thresholds(const Corpus& corpus) {
  if (corpus.images.empty()) throw Error("compute_size_thresholds: empty corpus");
  std::map<std::string, std::vector<double>> areas;
  for (const auto& img : corpus.images) {
    for (const auto& inst : img.instances) areas[inst.class_name].push_back(inst.box.area());
  }
  SizeThresholds out;
  for (auto& [cls, values] : areas) {
    std::sort(values.begin(), values.end());
    out.per_class[cls] = ClassThresholds{nearest_rank(values, 20), nearest_rank(values, 80)};
  }
  return out;
}

SizeLabel size_label(double area, const ClassThresholds& t) {
  if (area < t.p20) return SizeLabel::Small;
  if (area > t.p80) return SizeLabel::Large;
  return SizeLabel::Normal;
}

SizeLabel size_label(const ObbInstance& instance, const SizeThresholds& thresholds) {
  auto it = thresholds.per_class.find(instance.class_name);
  if (it == thresholds.per_class.end()) {
    throw Error("no size thresholds for class '" + instance.class_name + "'");
  }
  return size_label(instance.box.area(), it->second);
}

// ---------------------------------------------------------------------------
// Colour naming

Palette::Palette(std::vector<NamedColor> colors) : colors_(std::move(colors)) {
  if (colors_.empty()) throw Error("palette must not be empty");
}

Palette Palette::defaults() {
  return Palette({
      {"white", {255, 255, 255}},
      {"gray", {128, 128, 128}},
      {"black", {0, 0, 0}},
      {"red", {255, 0, 0}},
      {"green", {0, 128, 0}},
      {"blue", {0, 0, 255}},
      {"yellow", {255, 255, 0}},
      {"brown", {139, 69, 19}},
      {"orange", {255, 165, 0}},
      {"purple", {128, 0, 128}},
      {"cyan", {0, 255, 255}},
      {"tan", {210, 180, 140}},
  });
}

Palette Palette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open palette " + path.string());
  const json j = json::parse(in);
  std::vector<NamedColor> colors;
  auto rgb_of = [&](const json& v) {
    if (!v.is_array() || v.size() != 3) throw ValidationError("palette colour must be [r, g, b]");
    return Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  };
  if (j.is_array()) {
    for (const auto& e : j) colors.push_back({e.at("name").get<std::string>(), rgb_of(e.at("rgb"))});
  } else {
    for (const auto& [name, v] : j.items()) colors.push_back({name, rgb_of(v)});
  }
  return Palette(std::move(colors));
}

const std::string& Palette::nearest(const Eigen::Vector3d& rgb) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < colors_.size(); ++i) {
    const double d = (colors_[i].rgb - rgb).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return colors_[best].name;
}

Eigen::MatrixXd gather_pixels(const RgbImage& image, const Box& box) {
  const auto poly = corners(box);
  double xmin = poly[0].x(), xmax = xmin, ymin = poly[0].y(), ymax = ymin;
  for (const auto& p : poly) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(xmin)));
  const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(xmax)));
  const int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
  const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(ymax)));

  std::vector<std::array<double, 3>> rows;
  const std::span<const Point> span(poly);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!point_in_convex<double>(span, Point{x + 0.5, y + 0.5}, 1e-9)) continue;
      const auto* p = image.at(x, y);
      rows.push_back({double(p[0]), double(p[1]), double(p[2])});
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1], rows[i][2];
  }
  return out;
}

std::string dominant_color(const RgbImage& image, const Box& box, const Palette& palette,
                           std::uint64_t seed, const ColorOptions& options) {
  const Eigen::MatrixXd pixels = gather_pixels(image, box);
  if (pixels.rows() == 0) throw Error("dominant_color: no pixels inside the box");
  const KMeansResult km = kmeans(pixels, options.k, seed, options.max_iterations);
  const Eigen::Vector3d centre = km.centroids.row(static_cast<Eigen::Index>(km.largest())).transpose();
  return palette.nearest(centre);
}

// ---------------------------------------------------------------------------
// Relations

RelationTable::RelationTable(std::vector<RelationRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    for (const auto& p : r.phrases) {
      if (p.text.empty()) throw ValidationError("relation phrases must be nonempty");
    }
  }
}

RelationTable RelationTable::defaults() {
  const std::vector<std::string> vehicles{"vehicle", "small-vehicle", "large-vehicle", "car",
                                          "truck", "van", "bus"};
  return RelationTable({
      {{"ship"}, {"harbor"}, {{"anchored at", "", Containment::None}, {"parked at", "", Containment::None}}},
      {{"soccer-ball-field", "soccer field"},
       {"ground-track-field", "groundtrackfield", "track field"},
       {{"surrounded by", "", Containment::SubjectInObject},
        {"inside", "", Containment::SubjectInObject}}},
      {vehicles, {"bridge", "road", "roundabout"}, {{"passing through", "", Containment::None}}},
      {vehicles, {"building"}, {{"parked", "at", Containment::None}}},
      {{"plane", "airplane"}, {"airport"}, {{"parked", "at", Containment::None}}},
      {{"helipad"}, {"ship"}, {{"on", "", Containment::SubjectInObject}}},
      {{"ship"}, {"helipad"}, {{"contains", "", Containment::ObjectInSubject}}},
  });
}

RelationTable RelationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open relation table " + path.string());
  const json j = json::parse(in);
  std::vector<RelationRule> rules;
  for (const auto& r : j.at("rules")) {
    RelationRule rule;
    rule.subjects = r.at("subjects").get<std::vector<std::string>>();
    rule.objects = r.at("objects").get<std::vector<std::string>>();
    for (const auto& p : r.at("phrases")) {
      RelationPhrase phrase;
      phrase.text = p.at("text").get<std::string>();
      phrase.link = p.value("link", "");
      const std::string c = p.value("containment", "none");
      if (c == "subject_in_object") phrase.containment = Containment::SubjectInObject;
      else if (c == "object_in_subject") phrase.containment = Containment::ObjectInSubject;
      else if (c == "none") phrase.containment = Containment::None;
      else throw ValidationError("unknown containment rule '" + c + "'");
      rule.phrases.push_back(std::move(phrase));
    }
    rules.push_back(std::move(rule));
  }
  return RelationTable(std::move(rules));
}

namespace {

bool member(const std::vector<std::string>& set, const std::string& v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

std::optional<RelationTriple> apply_rule(const RelationRule& rule, const ObbInstance& subject,
                                         const ObbInstance& object) {
  if (!member(rule.subjects, subject.class_name) || !member(rule.objects, object.class_name)) {
    return std::nullopt;
  }
  for (const auto& p : rule.phrases) {
    const bool ok = p.containment == Containment::None ||
                    (p.containment == Containment::SubjectInObject && contains(object.box, subject.box)) ||
                    (p.containment == Containment::ObjectInSubject && contains(subject.box, object.box));
    if (ok) return RelationTriple{subject.instance_id, p.text, p.link, object.instance_id};
  }
  return std::nullopt;
}

}  // namespace

std::optional<RelationTriple> RelationTable::resolve(const ObbInstance& a, const ObbInstance& b) const {
  for (const auto& rule : rules_) {
    if (auto t = apply_rule(rule, a, b)) return t;
    if (auto t = apply_rule(rule, b, a)) return t;
  }
  return std::nullopt;
}

RelationGraph build_relations(std::span<const ObbInstance> instances, const ImageMeta& image,
                              const RelationTable& table, double distance_fraction) {
  if (!(distance_fraction > 0 && distance_fraction <= 1)) {
    throw Error("build_relations: distance fraction must lie in (0, 1]");
  }
  const double limit = distance_fraction * std::hypot(double(image.width), double(image.height));
  const std::size_t n = instances.size();
  RelationGraph g;
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (center_distance(instances[i].box, instances[j].box) < limit) {
        g.edges.emplace_back(i, j);
        adjacency[i].push_back(j);
        adjacency[j].push_back(i);
      }
    }
  }

  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  g.component.assign(n, unset);
  std::size_t next_id = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (g.component[s] != unset) continue;
    std::queue<std::size_t> q;
    q.push(s);
    g.component[s] = next_id;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : adjacency[u]) {
        if (g.component[v] == unset) {
          g.component[v] = next_id;
          q.push(v);
        }
      }
    }
    ++next_id;
  }

  for (const auto& [i, j] : g.edges) {
    if (auto t = table.resolve(instances[i], instances[j])) g.triples.push_back(std::move(*t));
  }
  return g;
}

// ---------------------------------------------------------------------------

AttributeReport extract_attributes(const Corpus& corpus, const RasterSource* rasters,
                                   const Palette& palette, const RelationTable& relations,
                                   const AttributeConfig& config) {
  AttributeReport report;
  report.thresholds = compute_size_thresholds(corpus);
  report.per_image.resize(corpus.images.size());
  std::vector<std::string> failure(corpus.images.size());

  parallel_for(corpus.images.size(), config.jobs, [&](std::size_t idx) {
    const ImageEntry& img = corpus.images[idx];
    std::optional<RgbImage> raster;
    if (rasters) {
      try {
        raster = rasters->load(img.meta);
      } catch (const std::exception& e) {
        failure[idx] = e.what();
      }
    }

    auto& out = report.per_image[idx];
    out.resize(img.instances.size());
    for (std::size_t i = 0; i < img.instances.size(); ++i) {
      const ObbInstance& inst = img.instances[i];
      AttributeSet& a = out[i];
      a.category = inst.class_name;
      a.relative_size = size_label(inst, report.thresholds);
      a.relative_location = grid_position(inst.box.center(), img.meta);
      if (raster) {
        try {
          a.color = dominant_color(*raster, inst.box, palette,
                                   derive_seed(config.seed, img.meta.id + "/" + inst.instance_id),
                                   config.color);
        } catch (const Error&) {
          // Box does not cover any pixel centre: colour stays unknown.
        }
      }
    }

    const RelationGraph graph =
        build_relations(img.instances, img.meta, relations, config.relation_distance);
    for (const auto& t : graph.triples) {
      for (std::size_t i = 0; i < img.instances.size(); ++i) {
        if (img.instances[i].instance_id == t.subject_id) {
          out[i].relations.push_back(Relation{t.phrase, t.link, t.object_id});
          break;
        }
      }
    }
  });

  for (std::size_t i = 0; i < failure.size(); ++i) {
    if (!failure[i].empty()) {
      report.failed_images.push_back(corpus.images[i].meta.id);
      report.failures.push_back(failure[i]);
    }
  }
  return report;
}

}  // namespace geoforge
