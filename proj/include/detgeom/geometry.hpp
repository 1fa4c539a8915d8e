// Copyright 2026 The detgeom Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "detgeom/errors.hpp"

namespace detgeom {

// Axis-aligned box in corner form over continuous pixel coordinates.
// Width is x_max - x_min; there is no "+1" pixel convention.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  constexpr double width() const noexcept { return x_max - x_min; }
  constexpr double height() const noexcept { return y_max - y_min; }
  constexpr double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  constexpr double center_y() const noexcept { return 0.5 * (y_min + y_max); }

  friend constexpr bool operator==(const Box&, const Box&) = default;
};

inline std::string to_string(const Box& b) {
  return "(" + std::to_string(b.x_min) + ", " + std::to_string(b.y_min) + ", " +
         std::to_string(b.x_max) + ", " + std::to_string(b.y_max) + ")";
}

inline std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << "Box" << to_string(b);
}

inline bool is_valid(const Box& b) noexcept {
  return std::isfinite(b.x_min) && std::isfinite(b.y_min) && std::isfinite(b.x_max) &&
         std::isfinite(b.y_max) && b.x_max >= b.x_min && b.y_max >= b.y_min;
}

inline const Box& validate(const Box& b) {
  if (!is_valid(b)) throw InvalidBox("invalid box " + to_string(b));
  return b;
}

// Throws InvalidBox when the corners are non-finite or inverted.
inline Box make_box(double x_min, double y_min, double x_max, double y_max) {
  Box b{x_min, y_min, x_max, y_max};
  validate(b);
  return b;
}

// COCO storage form (x, y, width, height) to corner form.
inline Box box_from_xywh(double x, double y, double w, double h) {
  return make_box(x, y, x + w, y + h);
}

constexpr double area(const Box& b) noexcept { return b.width() * b.height(); }

constexpr bool has_positive_area(const Box& b) noexcept {
  return b.width() > 0.0 && b.height() > 0.0;
}

constexpr double intersection_area(const Box& a, const Box& b) noexcept {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

constexpr double union_area(const Box& a, const Box& b) noexcept {
  return area(a) + area(b) - intersection_area(a, b);
}

// Intersection over union. Touching boxes have IoU 0. Throws UndefinedRatio
// when both boxes have zero area.
inline double iou(const Box& a, const Box& b) {
  const double u = union_area(a, b);
  if (!(u > 0.0)) {
    throw UndefinedRatio("IoU undefined for two zero-area boxes " + to_string(a) + " and " +
                         to_string(b));
  }
  return intersection_area(a, b) / u;
}

// IoU that returns 0 instead of throwing for zero-area pairs.
constexpr double iou_or_zero(const Box& a, const Box& b) noexcept {
  const double u = union_area(a, b);
  return u > 0.0 ? intersection_area(a, b) / u : 0.0;
}

constexpr Box enclosing_box(const Box& a, const Box& b) noexcept {
  return Box{std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
             std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

constexpr double center_distance_sq(const Box& a, const Box& b) noexcept {
  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  return dx * dx + dy * dy;
}

constexpr double enclosing_diag_sq(const Box& a, const Box& b) noexcept {
  const Box c = enclosing_box(a, b);
  return c.width() * c.width() + c.height() * c.height();
}

struct GeometryScalars {
  double iou = 0.0;
  double intersection_area = 0.0;
  double union_area = 0.0;
  double enclosing_area = 0.0;
  double center_distance_sq = 0.0;
  double enclosing_diag_sq = 0.0;
};

inline GeometryScalars geometry_scalars(const Box& a, const Box& b) {
  GeometryScalars s;
  s.iou = iou(a, b);
  s.intersection_area = intersection_area(a, b);
  s.union_area = union_area(a, b);
  s.enclosing_area = area(enclosing_box(a, b));
  s.center_distance_sq = center_distance_sq(a, b);
  s.enclosing_diag_sq = enclosing_diag_sq(a, b);
  return s;
}

constexpr Box translate(const Box& b, double dx, double dy) noexcept {
  return Box{b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
}

constexpr Box scale(const Box& b, double s) noexcept {
  return Box{b.x_min * s, b.y_min * s, b.x_max * s, b.y_max * s};
}

}  // namespace detgeom
