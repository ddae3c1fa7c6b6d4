#pragma once

// Synthetic aerial scenes with analytically known attributes.
//
// Images are 480x360. Objects are painted as solid palette colours over an
// off-palette background. Isolated objects sit at the centres of the four
// edge cells of the 3x3 grid; multi-object clusters sit in the corner and
// centre cells. Cluster members are closer than the relation distance
// (0.1 * diagonal = 60 px) to each other and at least 75 px from anything
// else, so proximity components are exactly the clusters.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geoforge/annotation.hpp"
#include "geoforge/raster.hpp"

namespace fixture {

inline constexpr int kWidth = 480;
inline constexpr int kHeight = 360;

struct Object {
  std::string id;
  std::string cls;
  geoforge::Box box;
  std::string color;
  geoforge::GridPosition cell;
  int cluster = -1;            // -1 for isolated objects
  std::string contained_in;    // id of the object fully enclosing this one
};

struct Scene {
  std::string id;
  std::vector<Object> objects;
  std::vector<geoforge::QaPair> qa;
  std::string scene_label;
};

// Deterministic for a given (count, seed).
std::vector<Scene> make_scenes(int count, std::uint64_t seed);

geoforge::ImageEntry to_entry(const Scene& scene);
geoforge::Corpus to_corpus(const std::vector<Scene>& scenes);
geoforge::RgbImage render(const Scene& scene);

// manifest.jsonl, images/<id>.png and config.json (with the given budgets)
// under `dir`.
void write_corpus(const std::filesystem::path& dir, const std::vector<Scene>& scenes,
                  const std::map<std::string, std::size_t>& budgets, std::uint64_t seed);

std::string slurp(const std::filesystem::path& path);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace fixture
