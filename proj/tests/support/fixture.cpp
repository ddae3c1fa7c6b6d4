#include "fixture.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unistd.h>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"

namespace fixture {

namespace {

using geoforge::Box;
using geoforge::GridPosition;

struct Rgb {
  std::uint8_t r, g, b;
};

const std::vector<std::pair<std::string, Rgb>>& palette() {
  static const std::vector<std::pair<std::string, Rgb>> p{
      {"white", {255, 255, 255}}, {"gray", {128, 128, 128}},   {"black", {0, 0, 0}},
      {"red", {255, 0, 0}},       {"green", {0, 128, 0}},      {"blue", {0, 0, 255}},
      {"yellow", {255, 255, 0}},  {"brown", {139, 69, 19}},    {"orange", {255, 165, 0}},
      {"purple", {128, 0, 128}},  {"cyan", {0, 255, 255}},     {"tan", {210, 180, 140}},
  };
  return p;
}

Rgb rgb_of(const std::string& name) {
  for (const auto& [n, c] : palette()) {
    if (n == name) return c;
  }
  return {0, 0, 0};
}

geoforge::Point cell_center(GridPosition g) {
  const int idx = static_cast<int>(g);
  return {(idx % 3 + 0.5) * kWidth / 3.0, (idx / 3 + 0.5) * kHeight / 3.0};
}

struct Shape {
  const char* cls;
  double w, h;
};

}  // namespace

std::vector<Scene> make_scenes(int count, std::uint64_t seed) {
  const std::vector<Shape> singles{
      {"plane", 40, 30}, {"storage-tank", 24, 24}, {"tennis-court", 30, 16},
      {"swimming-pool", 26, 14}, {"helicopter", 28, 20}};
  const std::vector<GridPosition> edge_cells{GridPosition::Top, GridPosition::Left,
                                             GridPosition::Right, GridPosition::Bottom};
  const std::vector<GridPosition> cluster_cells{GridPosition::TopLeft, GridPosition::TopRight,
                                                GridPosition::Center, GridPosition::BottomLeft,
                                                GridPosition::BottomRight};
  std::vector<Scene> scenes;
  for (int s = 0; s < count; ++s) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    auto color = [&] { return palette()[pick(palette().size())].first; };
    auto angle = [&] { return std::floor(unit(rng) * 90.0 * 8) / 8; };

    Scene scene;
    char buf[16];
    std::snprintf(buf, sizeof buf, "img%03d", s);
    scene.id = buf;
    int next = 0;
    auto add = [&](const std::string& cls, geoforge::Point c, double w, double h, double theta,
                   GridPosition cell, int cluster) -> Object& {
      Object o;
      o.id = scene.id + "_" + std::to_string(next++);
      o.cls = cls;
      o.box = Box{c.x(), c.y(), w, h, theta};
      o.color = color();
      o.cell = cell;
      o.cluster = cluster;
      scene.objects.push_back(o);
      return scene.objects.back();
    };

    const bool empty = s == count - 1 && count > 1;
    if (!empty) {
      std::vector<GridPosition> cells = edge_cells;
      std::shuffle(cells.begin(), cells.end(), rng);
      const std::size_t n_single = 1 + pick(4);
      for (std::size_t i = 0; i < n_single; ++i) {
        const Shape& sh = singles[pick(singles.size())];
        const double scale = 0.6 + unit(rng);
        geoforge::Point c = cell_center(cells[i]);
        c += geoforge::Point{unit(rng) * 12 - 6, unit(rng) * 12 - 6};
        add(sh.cls, c, sh.w * scale, sh.h * scale, angle(), cells[i], -1);
      }
      std::vector<GridPosition> ccells = cluster_cells;
      std::shuffle(ccells.begin(), ccells.end(), rng);
      const std::size_t n_cluster = pick(3);
      for (std::size_t k = 0; k < n_cluster; ++k) {
        const GridPosition cell = ccells[k];
        const geoforge::Point c = cell_center(cell);
        const double phi = unit(rng) * 2 * M_PI;
        auto offset = [&](double dx, double dy) -> geoforge::Point {
          return c + geoforge::Point{dx * std::cos(phi) - dy * std::sin(phi),
                                     dx * std::sin(phi) + dy * std::cos(phi)};
        };
        auto scale = [&] { return 0.85 + 0.15 * unit(rng); };
        const int cl = static_cast<int>(k);
        switch (pick(3)) {
          case 0: {
            const double sh = scale(), ss = scale();
            add("harbor", c, 40 * sh, 24 * sh, angle(), cell, cl);
            add("ship", offset(40, 0), 24 * ss, 10 * ss, angle(), cell, cl);
            break;
          }
          case 1: {
            const double sb = scale();
            add("bridge", c, 50 * sb, 12 * sb, angle(), cell, cl);
            for (double dx : {-18.0, 18.0}) {
              const double sv = scale();
              add("small-vehicle", offset(dx, 34), 12 * sv, 6 * sv, angle(), cell, cl);
            }
            break;
          }
          default: {
            const double theta = angle();
            const std::string track_id = add("ground-track-field", c, 80, 50, theta, cell, cl).id;
            const double sf = scale();
            add("soccer-ball-field", c, 30 * sf, 20 * sf, theta, cell, cl).contained_in = track_id;
            break;
          }
        }
      }
    }

    auto has = [&](const std::string& cls) {
      return std::any_of(scene.objects.begin(), scene.objects.end(),
                         [&](const Object& o) { return o.cls == cls; });
    };
    auto count_of = [&](const std::string& cls) {
      return std::count_if(scene.objects.begin(), scene.objects.end(),
                           [&](const Object& o) { return o.cls == cls; });
    };
    scene.qa.push_back({"Is there a plane in the image?", has("plane") ? "yes" : "no", "presence"});
    scene.qa.push_back({"Are there more small vehicles than ships?",
                        count_of("small-vehicle") > count_of("ship") ? "yes" : "no", "comparison"});
    scene.qa.push_back({"Is it a rural or an urban area?", unit(rng) < 0.5 ? "rural" : "urban", "rural_urban"});
    scene.qa.push_back({"How many planes are there?", std::to_string(count_of("plane")), "count"});
    scene.scene_label = has("harbor")               ? "harbor"
                        : has("ground-track-field") ? "playground"
                        : has("bridge")             ? "bridge"
                        : has("plane")              ? "airport"
                                                    : "meadow";
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

geoforge::ImageEntry to_entry(const Scene& scene) {
  geoforge::ImageEntry e;
  e.meta.id = scene.id;
  e.meta.path = "images/" + scene.id + ".png";
  e.meta.width = kWidth;
  e.meta.height = kHeight;
  e.meta.source_dataset = geoforge::SourceDataset::DOTA;
  for (const auto& o : scene.objects) {
    e.instances.push_back({o.id, o.cls, geoforge::canonicalize(o.box), geoforge::Provenance::GroundTruth});
  }
  e.qa = scene.qa;
  e.scene_label = scene.scene_label;
  return e;
}

geoforge::Corpus to_corpus(const std::vector<Scene>& scenes) {
  geoforge::Corpus c;
  std::set<std::string> classes;
  for (const auto& s : scenes) {
    c.images.push_back(to_entry(s));
    for (const auto& o : s.objects) classes.insert(o.cls);
  }
  std::sort(c.images.begin(), c.images.end(),
            [](const auto& a, const auto& b) { return a.meta.id < b.meta.id; });
  c.class_registry.assign(classes.begin(), classes.end());
  return c;
}

geoforge::RgbImage render(const Scene& scene) {
  geoforge::RgbImage img(kWidth, kHeight, 60, 90, 75);
  auto paint = [&](const Object& o, double grow) {
    Box b = o.box;
    b.w += grow;
    b.h += grow;
    const Rgb c = rgb_of(o.color);
    const double r = std::hypot(b.w, b.h) / 2 + 1;
    for (int y = std::max(0, int(b.cy - r)); y <= std::min(kHeight - 1, int(b.cy + r)); ++y) {
      for (int x = std::max(0, int(b.cx - r)); x <= std::min(kWidth - 1, int(b.cx + r)); ++x) {
        if (oracle::inside(b, x + 0.5, y + 0.5)) img.set(x, y, c.r, c.g, c.b);
      }
    }
  };
  // A grown pass hides anti-aliasing questions at the borders; the exact pass
  // guarantees every pixel centre inside a box carries that box's colour.
  for (const auto& o : scene.objects) paint(o, 3.0);
  for (const auto& o : scene.objects) paint(o, 0.0);
  return img;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<Scene>& scenes,
                  const std::map<std::string, std::size_t>& budgets, std::uint64_t seed) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.jsonl");
  for (const auto& s : scenes) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["path"] = "images/" + s.id + ".png";
    j["width"] = kWidth;
    j["height"] = kHeight;
    j["source"] = "DOTA";
    auto& inst = j["instances"] = nlohmann::ordered_json::array();
    for (const auto& o : s.objects) {
      inst.push_back({{"id", o.id}, {"class", o.cls}, {"box", {o.box.cx, o.box.cy, o.box.w, o.box.h, o.box.theta}}});
    }
    auto& qa = j["qa"] = nlohmann::ordered_json::array();
    for (const auto& q : s.qa) qa.push_back({{"question", q.question}, {"answer", q.answer}, {"category", q.category}});
    j["label"] = s.scene_label;
    manifest << j.dump() << '\n';
    geoforge::write_png(dir / "images" / (s.id + ".png"), render(s));
  }
  nlohmann::ordered_json config;
  config["manifests"] = {"manifest.jsonl"};
  config["raster_root"] = ".";
  config["output_dir"] = "out";
  config["seed"] = seed;
  config["split"] = 0.8;
  config["budgets"] = budgets;
  config["offline"] = true;
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("geoforge_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
