#pragma once

namespace geoforge {

// Normalized box in the textual grounding format. Coordinates are integers in
// [0, 100] relative to the image extent; theta is whole degrees in [0, 90).
// The corner pair describes the axis-aligned rectangle before it is rotated by
// theta about its own center.
struct SpatialToken {
  int x_left = 0;
  int y_top = 0;
  int x_right = 0;
  int y_bottom = 0;
  int theta = 0;

  bool valid() const {
    auto in_range = [](int v) { return v >= 0 && v <= 100; };
    return in_range(x_left) && in_range(y_top) && in_range(x_right) && in_range(y_bottom) &&
           x_left <= x_right && y_top <= y_bottom && theta >= 0 && theta < 90;
  }

  friend bool operator==(const SpatialToken&, const SpatialToken&) = default;
};

}  // namespace geoforge
