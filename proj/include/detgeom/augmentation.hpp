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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "detgeom/errors.hpp"
#include "detgeom/geometry.hpp"
#include "detgeom/random.hpp"

namespace detgeom {

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
};

// Geometric augmentation bounds. Only geometric decisions are sampled;
// photometric transforms (brightness/contrast, RGB/HSV shifts, channel
// shuffle, blur) leave boxes untouched and are not modelled.
struct AugmentParams {
  double flip_prob = 0.5;
  double shift_scale_rotate_prob = 1.0;
  double max_shift_frac = 0.0625;
  double max_scale_delta = 0.1;
  double max_rotate_deg = 45.0;
  ImageSize image{360.0, 640.0};  // training resolution (width x height)

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(flip_prob) || !prob(shift_scale_rotate_prob)) {
      throw InvalidArgument("probabilities must lie in [0, 1]");
    }
    if (!(max_shift_frac >= 0.0) || !(max_scale_delta >= 0.0)) {
      throw InvalidArgument("shift and scale bounds must be non-negative");
    }
    if (max_scale_delta >= 1.0) throw InvalidArgument("scale bound must be below 1");
    if (!(max_rotate_deg >= 0.0 && max_rotate_deg < 180.0)) {
      throw InvalidArgument("rotation bound must lie in [0, 180)");
    }
    if (!(image.width > 0.0 && image.height > 0.0)) {
      throw InvalidArgument("image dimensions must be positive");
    }
  }
};

// Mirror about the vertical axis of an image `image_width` wide.
constexpr Box flip_box_h(const Box& b, double image_width) noexcept {
  return Box{image_width - b.x_max, b.y_min, image_width - b.x_min, b.y_max};
}

// Minimum area a clipped box must keep to survive.
inline constexpr double kMinClippedArea = 1.0;

// Scales by s and rotates by `angle_deg` (counter-clockwise on screen, as in
// OpenCV's getRotationMatrix2D) about the image center, then translates by
// (dx, dy). Returns the axis-aligned hull of the four transformed corners,
// clipped to the image when `clip` is set; nullopt if clipping leaves less
// than kMinClippedArea.
inline std::optional<Box> shift_scale_rotate_box(const Box& b, double dx, double dy, double s,
                                                 double angle_deg, ImageSize image, bool clip) {
  if (!(std::abs(angle_deg) <= 180.0)) throw InvalidArgument("rotation angle must be within 180");
  if (!(s > 0.0)) throw InvalidArgument("scale must be positive");
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double a = s * std::cos(theta);
  const double c = s * std::sin(theta);
  const double cx = 0.5 * image.width;
  const double cy = 0.5 * image.height;

  const std::array<std::array<double, 2>, 4> corners{
      {{b.x_min, b.y_min}, {b.x_max, b.y_min}, {b.x_min, b.y_max}, {b.x_max, b.y_max}}};
  Box hull{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& [x, y] : corners) {
    const double rx = x - cx;
    const double ry = y - cy;
    const double tx = a * rx + c * ry + cx + dx;
    const double ty = -c * rx + a * ry + cy + dy;
    hull.x_min = std::min(hull.x_min, tx);
    hull.y_min = std::min(hull.y_min, ty);
    hull.x_max = std::max(hull.x_max, tx);
    hull.y_max = std::max(hull.y_max, ty);
  }
  if (!clip) return hull;

  Box clipped{std::clamp(hull.x_min, 0.0, image.width), std::clamp(hull.y_min, 0.0, image.height),
              std::clamp(hull.x_max, 0.0, image.width), std::clamp(hull.y_max, 0.0, image.height)};
  if (area(clipped) < kMinClippedArea) return std::nullopt;
  return clipped;
}

struct ImageDecision {
  std::size_t index = 0;
  bool flip = false;
  bool shift_scale_rotate = false;
  double dx = 0.0;  // pixels
  double dy = 0.0;
  double scale = 1.0;
  double angle_deg = 0.0;

  friend bool operator==(const ImageDecision&, const ImageDecision&) = default;
};

struct AugmentPlan {
  std::uint64_t seed = 0;
  AugmentParams params;
  std::vector<ImageDecision> images;
};

// Decisions for `n_images` images; a pure function of (params, n, seed).
// Every image consumes exactly six draws, so plans for different n share a
// prefix.
inline AugmentPlan sample_plan(const AugmentParams& params, std::size_t n_images,
                               std::uint64_t seed) {
  params.validate();
  AugmentPlan plan{seed, params, {}};
  plan.images.reserve(n_images);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_images; ++i) {
    ImageDecision d;
    d.index = i;
    d.flip = rng.bernoulli(params.flip_prob);
    d.shift_scale_rotate = rng.bernoulli(params.shift_scale_rotate_prob);
    const double sx = rng.uniform(-params.max_shift_frac, params.max_shift_frac);
    const double sy = rng.uniform(-params.max_shift_frac, params.max_shift_frac);
    const double sc = rng.uniform(1.0 - params.max_scale_delta, 1.0 + params.max_scale_delta);
    const double an = rng.uniform(-params.max_rotate_deg, params.max_rotate_deg);
    if (d.shift_scale_rotate) {
      d.dx = sx * params.image.width;
      d.dy = sy * params.image.height;
      d.scale = sc;
      d.angle_deg = an;
    }
    plan.images.push_back(d);
  }
  return plan;
}

struct AugmentedBoxes {
  std::vector<Box> boxes;
  std::vector<std::size_t> dropped;  // input indices removed by clipping
};

// Applies one image's decisions (flip first, then shift/scale/rotate with
// clipping) to its boxes.
inline AugmentedBoxes apply_decision(const ImageDecision& d, const AugmentParams& params,
                                     std::span<const Box> boxes) {
  AugmentedBoxes out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    Box b = d.flip ? flip_box_h(boxes[i], params.image.width) : boxes[i];
    if (d.shift_scale_rotate) {
      auto t = shift_scale_rotate_box(b, d.dx, d.dy, d.scale, d.angle_deg, params.image, true);
      if (!t) {
        out.dropped.push_back(i);
        continue;
      }
      b = *t;
    }
    out.boxes.push_back(b);
  }
  return out;
}

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

// Line-oriented CSV: a '#' metadata line with seed and bounds, a header, then
// one row per image.
inline void write_plan_csv(std::ostream& os, const AugmentPlan& plan) {
  using detail::fmt_double;
  const auto& p = plan.params;
  os << "# seed=" << plan.seed << " flip_prob=" << fmt_double(p.flip_prob)
     << " shift_scale_rotate_prob=" << fmt_double(p.shift_scale_rotate_prob)
     << " max_shift_frac=" << fmt_double(p.max_shift_frac)
     << " max_scale_delta=" << fmt_double(p.max_scale_delta)
     << " max_rotate_deg=" << fmt_double(p.max_rotate_deg)
     << " image_width=" << fmt_double(p.image.width)
     << " image_height=" << fmt_double(p.image.height) << "\n";
  os << "index,flip,shift_scale_rotate,dx,dy,scale,angle_deg\n";
  for (const auto& d : plan.images) {
    os << d.index << ',' << (d.flip ? 1 : 0) << ',' << (d.shift_scale_rotate ? 1 : 0) << ','
       << fmt_double(d.dx) << ',' << fmt_double(d.dy) << ',' << fmt_double(d.scale) << ','
       << fmt_double(d.angle_deg) << "\n";
  }
}

inline AugmentPlan read_plan_csv(std::istream& is) {
  AugmentPlan plan;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("augment plan line " + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    line_no = 1;
    fail("missing '# seed=...' metadata line");
  }
  ++line_no;
  {
    std::istringstream meta(line.substr(2));
    std::string kv;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail("malformed metadata '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      try {
        if (key == "seed") plan.seed = std::stoull(val);
        else if (key == "flip_prob") plan.params.flip_prob = std::stod(val);
        else if (key == "shift_scale_rotate_prob") plan.params.shift_scale_rotate_prob = std::stod(val);
        else if (key == "max_shift_frac") plan.params.max_shift_frac = std::stod(val);
        else if (key == "max_scale_delta") plan.params.max_scale_delta = std::stod(val);
        else if (key == "max_rotate_deg") plan.params.max_rotate_deg = std::stod(val);
        else if (key == "image_width") plan.params.image.width = std::stod(val);
        else if (key == "image_height") plan.params.image.height = std::stod(val);
        else fail("unknown metadata key '" + key + "'");
      } catch (const std::logic_error&) {
        fail("bad value for '" + key + "'");
      }
    }
  }
  if (!std::getline(is, line)) fail("missing header");
  ++line_no;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string f;
    while (std::getline(row, f, ',')) fields.push_back(f);
    if (fields.size() != 7) fail("expected 7 fields, got " + std::to_string(fields.size()));
    ImageDecision d;
    try {
      d.index = std::stoull(fields[0]);
      d.flip = fields[1] == "1";
      d.shift_scale_rotate = fields[2] == "1";
      d.dx = std::stod(fields[3]);
      d.dy = std::stod(fields[4]);
      d.scale = std::stod(fields[5]);
      d.angle_deg = std::stod(fields[6]);
    } catch (const std::logic_error&) {
      fail("non-numeric field");
    }
    plan.images.push_back(d);
  }
  return plan;
}

}  // namespace detgeom
