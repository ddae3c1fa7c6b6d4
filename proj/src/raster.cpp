#include "geoforge/raster.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace geoforge {

RgbImage::RgbImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
}

RgbImage FileRasterSource::load(const ImageMeta& image) const {
  const std::filesystem::path path = image.path.is_absolute() ? image.path : root_ / image.path;
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error("cannot decode " + path.string() + ": " + e.what());
  }
  if (bgr.empty()) throw Error("cannot read raster " + path.string());
  if (bgr.cols != image.width || bgr.rows != image.height) {
    throw Error("raster " + path.string() + " is " + std::to_string(bgr.cols) + "x" +
                std::to_string(bgr.rows) + ", manifest says " + std::to_string(image.width) +
                "x" + std::to_string(image.height));
  }
  RgbImage out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) out.set(x, y, row[x][2], row[x][1], row[x][0]);
  }
  return out;
}

RgbImage MemoryRasterSource::load(const ImageMeta& image) const {
  auto it = images_.find(image.id);
  if (it == images_.end()) throw Error("no raster for image " + image.id);
  return it->second;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width; ++x) {
      const auto* p = image.at(x, y);
      row[x] = cv::Vec3b(p[2], p[1], p[0]);
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write " + path.string());
}

}  // namespace geoforge
