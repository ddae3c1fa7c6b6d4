#pragma once

// Oriented-box geometry over Eigen 2-vectors.
//
// Boxes are stored as center, size and rotation (degrees). Corners are
// produced by rotating the axis-aligned rectangle (cx +- w/2, cy +- h/2) by
// theta about the center with the standard rotation matrix, so the returned
// polygon always has positive signed area (counterclockwise in a y-up frame).
//
// Tolerances: containment accepts points up to 1e-9 (relative to the box
// extent) outside an edge; intersections smaller than 1e-12 of the smaller
// box area are reported as empty.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "geoforge/error.hpp"
#include "geoforge/spatial_token.hpp"

namespace geoforge {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Polygon = std::vector<Point2<Scalar>>;

template <typename Scalar>
struct OrientedBox {
  Scalar cx{};
  Scalar cy{};
  Scalar w{};
  Scalar h{};
  Scalar theta{};  // degrees

  bool valid() const {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(theta) && std::isfinite(w) &&
           std::isfinite(h) && w > 0 && h > 0;
  }
  Scalar area() const { return w * h; }
  Point2<Scalar> center() const { return {cx, cy}; }

  friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

using Box = OrientedBox<double>;
using Point = Point2<double>;

template <typename Scalar>
Scalar cross(const Point2<Scalar>& a, const Point2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Folds theta into [0, 90), swapping width and height for every quarter turn.
template <typename Scalar>
OrientedBox<Scalar> canonicalize(OrientedBox<Scalar> box) {
  Scalar t = std::fmod(box.theta, Scalar(180));
  if (t < 0) t += Scalar(180);
  if (t >= Scalar(90)) {
    t -= Scalar(90);
    std::swap(box.w, box.h);
  }
  // fmod can leave t == 90 - ulp rounding up to 90 after the subtraction above.
  if (t >= Scalar(90)) t = Scalar(0);
  box.theta = t;
  return box;
}

template <typename Scalar>
std::array<Point2<Scalar>, 4> corners(const OrientedBox<Scalar>& box) {
  const Scalar rad = box.theta * std::numbers::pi_v<Scalar> / Scalar(180);
  const Scalar c = std::cos(rad);
  const Scalar s = std::sin(rad);
  const Scalar hw = box.w / 2;
  const Scalar hh = box.h / 2;
  const std::array<Point2<Scalar>, 4> local{
      Point2<Scalar>{-hw, -hh}, Point2<Scalar>{hw, -hh}, Point2<Scalar>{hw, hh},
      Point2<Scalar>{-hw, hh}};
  std::array<Point2<Scalar>, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = Point2<Scalar>{box.cx + c * local[i].x() - s * local[i].y(),
                            box.cy + s * local[i].x() + c * local[i].y()};
  }
  return out;
}

// Shoelace formula.
template <typename Scalar>
Scalar signed_area(std::span<const Point2<Scalar>> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return Scalar(0);
  Scalar acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += cross<Scalar>(poly[i], poly[(i + 1) % n]);
  return acc / 2;
}

template <typename Scalar>
Scalar polygon_area(std::span<const Point2<Scalar>> poly) {
  return std::abs(signed_area(poly));
}

// Sutherland-Hodgman clipping of `subject` by the convex, positively oriented
// polygon `clip`.
template <typename Scalar>
Polygon<Scalar> clip_convex(std::span<const Point2<Scalar>> subject,
                            std::span<const Point2<Scalar>> clip) {
  Polygon<Scalar> output(subject.begin(), subject.end());
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !output.empty(); ++e) {
    const Point2<Scalar> a = clip[e];
    const Point2<Scalar> b = clip[(e + 1) % m];
    const Point2<Scalar> edge = b - a;
    const Polygon<Scalar> input = std::move(output);
    output.clear();
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2<Scalar>& cur = input[i];
      const Point2<Scalar>& prev = input[(i + n - 1) % n];
      const Scalar dc = cross<Scalar>(edge, cur - a);
      const Scalar dp = cross<Scalar>(edge, prev - a);
      const bool cur_in = dc >= 0;
      const bool prev_in = dp >= 0;
      if (cur_in != prev_in) {
        const Scalar t = dp / (dp - dc);
        output.push_back(prev + t * (cur - prev));
      }
      if (cur_in) output.push_back(cur);
    }
  }
  return output;
}

template <typename Scalar>
Scalar intersection_area(const OrientedBox<Scalar>& a, const OrientedBox<Scalar>& b) {
  const auto pa = corners(a);
  const auto pb = corners(b);
  const Polygon<Scalar> inter =
      clip_convex<Scalar>(std::span<const Point2<Scalar>>(pa), std::span<const Point2<Scalar>>(pb));
  return polygon_area<Scalar>(inter);
}

// |A n B| / |A u B| by exact polygon clipping. Identical boxes give exactly 1.
template <typename Scalar>
Scalar rotated_iou(const OrientedBox<Scalar>& a, const OrientedBox<Scalar>& b) {
  const OrientedBox<Scalar> ca = canonicalize(a);
  const OrientedBox<Scalar> cb = canonicalize(b);
  if (ca == cb) return Scalar(1);
  const Scalar area_a = ca.area();
  const Scalar area_b = cb.area();
  if (!(area_a > 0) || !(area_b > 0)) return Scalar(0);
  // Disjoint circumscribed circles.
  const Scalar reach = (std::hypot(ca.w, ca.h) + std::hypot(cb.w, cb.h)) / 2;
  if ((ca.center() - cb.center()).norm() > reach) return Scalar(0);
  Scalar inter = intersection_area(ca, cb);
  if (inter <= Scalar(1e-12) * std::min(area_a, area_b)) return Scalar(0);
  inter = std::min(inter, std::min(area_a, area_b));
  const Scalar iou = inter / (area_a + area_b - inter);
  return std::clamp(iou, Scalar(0), Scalar(1));
}

// Closed point-in-convex-polygon test (boundary counts as inside).
template <typename Scalar>
bool point_in_convex(std::span<const Point2<Scalar>> poly, const Point2<Scalar>& p,
                     Scalar tolerance) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2<Scalar> edge = poly[(i + 1) % n] - poly[i];
    const Scalar len = edge.norm();
    if (len == 0) continue;
    // Signed distance of p from the edge line; negative means outside.
    if (cross<Scalar>(edge, p - poly[i]) / len < -tolerance) return false;
  }
  return true;
}

template <typename Scalar>
bool contains(const OrientedBox<Scalar>& outer, const OrientedBox<Scalar>& inner) {
  const auto po = corners(outer);
  const auto pi = corners(inner);
  const Scalar extent = std::max({Scalar(1), std::abs(outer.cx), std::abs(outer.cy), outer.w,
                                  outer.h});
  const Scalar tol = Scalar(1e-9) * extent;
  for (const auto& p : pi) {
    if (!point_in_convex<Scalar>(std::span<const Point2<Scalar>>(po), p, tol)) return false;
  }
  return true;
}

template <typename Scalar>
Scalar center_distance(const OrientedBox<Scalar>& a, const OrientedBox<Scalar>& b) {
  return (a.center() - b.center()).norm();
}

// Minimum-area enclosing rectangle of a point set (rotating calipers over the
// convex hull). Used to turn 4-corner polygon annotations into boxes.
template <typename Scalar>
OrientedBox<Scalar> min_area_rect(std::span<const Point2<Scalar>> points) {
  Polygon<Scalar> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2<Scalar>& l, const Point2<Scalar>& r) {
    return l.x() < r.x() || (l.x() == r.x() && l.y() < r.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return {};
  // Andrew's monotone chain.
  Polygon<Scalar> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross<Scalar>(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross<Scalar>(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return {};

  OrientedBox<Scalar> best{};
  Scalar best_area = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2<Scalar> edge = hull[(i + 1) % hull.size()] - hull[i];
    const Scalar len = edge.norm();
    if (len == 0) continue;
    const Point2<Scalar> u = edge / len;
    const Point2<Scalar> v{-u.y(), u.x()};
    Scalar umin = std::numeric_limits<Scalar>::infinity(), umax = -umin;
    Scalar vmin = umin, vmax = -umin;
    for (const auto& p : hull) {
      const Scalar pu = p.dot(u);
      const Scalar pv = p.dot(v);
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const Scalar area = (umax - umin) * (vmax - vmin);
    if (area < best_area) {
      best_area = area;
      const Point2<Scalar> c = u * ((umin + umax) / 2) + v * ((vmin + vmax) / 2);
      best = OrientedBox<Scalar>{c.x(), c.y(), umax - umin, vmax - vmin,
                                 std::atan2(u.y(), u.x()) * Scalar(180) /
                                     std::numbers::pi_v<Scalar>};
    }
  }
  return canonicalize(best);
}

enum class GridPosition : std::uint8_t {
  TopLeft,
  Top,
  TopRight,
  Left,
  Center,
  Right,
  BottomLeft,
  Bottom,
  BottomRight,
};

inline constexpr std::array<std::string_view, 9> kGridLabels{
    "top left", "top", "top right", "left", "center", "right", "bottom left", "bottom",
    "bottom right"};

inline std::string_view grid_label(GridPosition g) {
  return kGridLabels[static_cast<std::size_t>(g)];
}

// 3x3 cell of a pixel position: column floor(3x/width), row floor(3y/height),
// both clamped to 2; row 0 is the top of the image.
template <typename Scalar>
GridPosition grid_position(const Point2<Scalar>& p, int width, int height) {
  if (!(p.x() >= 0 && p.y() >= 0 && p.x() < width && p.y() < height)) {
    throw Error("grid_position: point outside the image");
  }
  const int col = std::min(2, static_cast<int>(std::floor(3 * p.x() / width)));
  const int row = std::min(2, static_cast<int>(std::floor(3 * p.y() / height)));
  return static_cast<GridPosition>(row * 3 + col);
}

namespace detail {
inline int percent_coord(double v, int extent) {
  const double r = std::round(100.0 * v / extent);
  return static_cast<int>(std::clamp(r, 0.0, 100.0));
}
}  // namespace detail

// Box in pixels -> integer token on the [0, 100] scale. Theta is rounded to
// whole degrees; a rounded value of 90 folds back to 0 with width and height
// exchanged.
template <typename Scalar>
SpatialToken normalize(const OrientedBox<Scalar>& box, int width, int height) {
  OrientedBox<double> b = canonicalize(OrientedBox<double>{
      double(box.cx), double(box.cy), double(box.w), double(box.h), double(box.theta)});
  double t = std::round(b.theta);
  if (t >= 90) {
    t -= 90;
    std::swap(b.w, b.h);
  }
  SpatialToken tok;
  tok.x_left = detail::percent_coord(b.cx - b.w / 2, width);
  tok.x_right = detail::percent_coord(b.cx + b.w / 2, width);
  tok.y_top = detail::percent_coord(b.cy - b.h / 2, height);
  tok.y_bottom = detail::percent_coord(b.cy + b.h / 2, height);
  tok.theta = static_cast<int>(t);
  return tok;
}

inline Box denormalize(const SpatialToken& tok, int width, int height) {
  const double sx = width / 100.0;
  const double sy = height / 100.0;
  return Box{(tok.x_left + tok.x_right) * sx / 2, (tok.y_top + tok.y_bottom) * sy / 2,
             (tok.x_right - tok.x_left) * sx, (tok.y_bottom - tok.y_top) * sy,
             static_cast<double>(tok.theta)};
}

}  // namespace geoforge
