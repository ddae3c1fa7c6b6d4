#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geoforge/annotation.hpp"
#include "geoforge/raster.hpp"

namespace geoforge {

enum class SizeLabel : std::uint8_t { Small, Normal, Large };

std::string_view to_string(SizeLabel s);

// One outgoing relation of a subject instance: "<phrase> [link] the <target>".
struct Relation {
  std::string phrase;
  std::string link;  // connective rendered between phrase and target, may be empty
  std::string target_id;

  friend bool operator==(const Relation&, const Relation&) = default;
};

struct AttributeSet {
  std::string category;               // a1
  std::optional<std::string> color;   // a2
  SizeLabel relative_size = SizeLabel::Normal;  // a3
  std::optional<GridPosition> relative_location;  // a4
  std::vector<Relation> relations;    // a5
};

// Nearest-rank percentile of an ascending sample: element ceil(p*n/100), 1-based.
double nearest_rank(std::span<const double> sorted, int percent);

struct ClassThresholds {
  double p20 = 0;
  double p80 = 0;
};

struct SizeThresholds {
  std::map<std::string, ClassThresholds> per_class;
};

SizeThresholds compute_size_thresholds(const Corpus& corpus);

// area < p20 -> Small, area > p80 -> Large, otherwise Normal.
SizeLabel size_label(const ObbInstance& instance, const SizeThresholds& thresholds);
SizeLabel size_label(double area, const ClassThresholds& t);

struct NamedColor {
  std::string name;
  Eigen::Vector3d rgb;
};

class Palette {
 public:
  explicit Palette(std::vector<NamedColor> colors);

  // white, gray, black, red, green, blue, yellow, brown, orange, purple, cyan, tan
  static Palette defaults();
  // JSON object {"name": [r, g, b], ...} or array of {"name", "rgb"}.
  static Palette load(const std::filesystem::path& path);

  // Nearest entry by squared RGB distance; ties go to the earlier entry.
  const std::string& nearest(const Eigen::Vector3d& rgb) const;
  const std::vector<NamedColor>& colors() const { return colors_; }

 private:
  std::vector<NamedColor> colors_;
};

// RGB samples (one row per pixel) whose pixel centres fall inside the box.
Eigen::MatrixXd gather_pixels(const RgbImage& image, const Box& box);

struct ColorOptions {
  int k = 3;
  int max_iterations = 50;
};

// Names the centroid of the most populous k-means cluster of the box pixels.
// Throws when no pixel centre lies inside the box.
std::string dominant_color(const RgbImage& image, const Box& box, const Palette& palette,
                           std::uint64_t seed, const ColorOptions& options = {});

enum class Containment : std::uint8_t { None, SubjectInObject, ObjectInSubject };

struct RelationPhrase {
  std::string text;
  std::string link;
  Containment containment = Containment::None;
};

// Directional rule: instances of `subjects` relate to instances of `objects`.
struct RelationRule {
  std::vector<std::string> subjects;
  std::vector<std::string> objects;
  std::vector<RelationPhrase> phrases;
};

struct RelationTriple {
  std::string subject_id;
  std::string phrase;
  std::string link;
  std::string object_id;

  friend bool operator==(const RelationTriple&, const RelationTriple&) = default;
};

class RelationTable {
 public:
  explicit RelationTable(std::vector<RelationRule> rules);
  static RelationTable defaults();
  static RelationTable load(const std::filesystem::path& path);

  // Resolves a phrase for two instances in either order, honouring the
  // direction of each rule and its containment requirement. The first rule and
  // phrase that apply win.
  std::optional<RelationTriple> resolve(const ObbInstance& a, const ObbInstance& b) const;
  const std::vector<RelationRule>& rules() const { return rules_; }

 private:
  std::vector<RelationRule> rules_;
};

struct RelationGraph {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j
  std::vector<std::size_t> component;                       // component id per instance
  std::vector<RelationTriple> triples;
};

// Links instances whose centres are closer than distance_fraction times the
// image diagonal and emits one triple for every link whose class pair has an
// applicable rule.
RelationGraph build_relations(std::span<const ObbInstance> instances, const ImageMeta& image,
                              const RelationTable& table, double distance_fraction);

struct AttributeConfig {
  ColorOptions color;
  std::uint64_t seed = 0;
  double relation_distance = 0.1;
  int jobs = 1;
};

struct AttributeReport {
  SizeThresholds thresholds;
  std::vector<std::vector<AttributeSet>> per_image;  // parallel to corpus.images
  std::vector<std::string> failed_images;
  std::vector<std::string> failures;  // messages, parallel to failed_images
};

// Colours are left empty when `rasters` is null or an image fails to decode.
AttributeReport extract_attributes(const Corpus& corpus, const RasterSource* rasters,
                                   const Palette& palette, const RelationTable& relations,
                                   const AttributeConfig& config);

}  // namespace geoforge
