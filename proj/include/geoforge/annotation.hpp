#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoforge/geometry.hpp"

namespace geoforge {

enum class SourceDataset : std::uint8_t { DOTA, DIOR, FAIR1M, OTHER };
enum class Provenance : std::uint8_t { GroundTruth, PseudoLabel };

std::string_view to_string(SourceDataset s);
std::string_view to_string(Provenance p);

struct ImageMeta {
  std::string id;
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  SourceDataset source_dataset = SourceDataset::OTHER;
};

struct ObbInstance {
  std::string instance_id;
  std::string class_name;
  Box box;  // pixels, canonical angle
  Provenance provenance = Provenance::GroundTruth;
};

// Question/answer pair attached to an image (VQA-style corpora). `category`
// is the question type, e.g. "presence", "comparison", "rural_urban".
struct QaPair {
  std::string question;
  std::string answer;
  std::string category;
};

struct ImageEntry {
  ImageMeta meta;
  std::vector<ObbInstance> instances;
  std::vector<QaPair> qa;
  std::optional<std::string> scene_label;
};

// Images sorted by id; class_registry is an ordered set of class names.
struct Corpus {
  std::vector<ImageEntry> images;
  std::vector<std::string> class_registry;

  const ImageEntry* find(std::string_view image_id) const;
  std::size_t instance_count() const;
};

struct LoadOptions {
  // Closed class registry; when set, unknown classes are validation errors
  // and the corpus registry is exactly this list.
  std::optional<std::vector<std::string>> registry;
  Provenance provenance = Provenance::GroundTruth;
};

// Parses one manifest record (one image). `line` is only used for messages.
ImageEntry parse_image_record(const nlohmann::json& record, std::size_t line,
                              const LoadOptions& options = {});

Corpus load_corpus(std::istream& manifest, const LoadOptions& options = {});
Corpus load_corpus(const std::filesystem::path& manifest, const LoadOptions& options = {});

// Concatenates several manifests into one corpus (image ids must stay unique).
Corpus load_corpora(const std::vector<std::filesystem::path>& manifests,
                    const LoadOptions& options = {});

// Registry file: JSON array of class names, or an object with a "classes" array.
std::vector<std::string> load_class_registry(const std::filesystem::path& path);

// Appends pseudo-label instances that do not overlap any ground-truth instance
// of the same image by more than `iou_threshold` (class-agnostic).
Corpus merge_pseudo_labels(const Corpus& corpus, const Corpus& pseudo, double iou_threshold);

nlohmann::ordered_json to_json(const ImageEntry& entry);

inline GridPosition grid_position(const Point& p, const ImageMeta& image) {
  return grid_position(p, image.width, image.height);
}

inline SpatialToken normalize(const Box& box, const ImageMeta& image) {
  return normalize(box, image.width, image.height);
}

}  // namespace geoforge
