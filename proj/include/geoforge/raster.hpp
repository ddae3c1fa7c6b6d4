#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geoforge/annotation.hpp"

namespace geoforge {

// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0);

  std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = at(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

// Resolves the raster for an image; throws geoforge::Error when it cannot.
class RasterSource {
 public:
  virtual ~RasterSource() = default;
  virtual RgbImage load(const ImageMeta& image) const = 0;
};

// PNG/JPEG files; relative ImageMeta paths resolve against `root`.
class FileRasterSource : public RasterSource {
 public:
  explicit FileRasterSource(std::filesystem::path root) : root_(std::move(root)) {}
  RgbImage load(const ImageMeta& image) const override;

 private:
  std::filesystem::path root_;
};

class MemoryRasterSource : public RasterSource {
 public:
  void add(const std::string& image_id, RgbImage image) { images_[image_id] = std::move(image); }
  RgbImage load(const ImageMeta& image) const override;

 private:
  std::map<std::string, RgbImage> images_;
};

void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace geoforge
