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

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "detgeom/errors.hpp"
#include "detgeom/geometry.hpp"

namespace detgeom {

enum class LossKind { kL1, kIoU, kGIoU, kDIoU, kCIoU };

inline constexpr std::array<LossKind, 5> kAllLossKinds = {
    LossKind::kL1, LossKind::kIoU, LossKind::kGIoU, LossKind::kDIoU, LossKind::kCIoU};

constexpr std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::kL1: return "l1";
    case LossKind::kIoU: return "iou";
    case LossKind::kGIoU: return "giou";
    case LossKind::kDIoU: return "diou";
    case LossKind::kCIoU: return "ciou";
  }
  return "unknown";
}

inline std::optional<LossKind> parse_loss_kind(std::string_view name) noexcept {
  for (LossKind k : kAllLossKinds) {
    std::string_view n = to_string(k);
    if (name.size() != n.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const char c = name[i];
      const char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      if (lower != n[i]) {
        same = false;
        break;
      }
    }
    if (same) return k;
  }
  return std::nullopt;
}

// Partial derivatives with respect to the predicted box, ordered
// (x_min, y_min, x_max, y_max).
using BoxGradient = std::array<double, 4>;

struct LossResult {
  double value = 0.0;
  BoxGradient gradient{};
};

// Aspect-ratio consistency term and its trade-off weight.
struct CiouInternals {
  double v = 0.0;
  double alpha = 0.0;
};

struct CiouBreakdown {
  LossResult result;
  CiouInternals internals;
};

inline double gradient_norm(const BoxGradient& g) noexcept {
  return std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
}

namespace detail {

// Subgradients of max(fixed, p) and min(fixed, p) with respect to p.
// Ties take the midpoint 1/2.
constexpr double dmax(double fixed, double p) noexcept {
  return p > fixed ? 1.0 : (p < fixed ? 0.0 : 0.5);
}
constexpr double dmin(double fixed, double p) noexcept {
  return p < fixed ? 1.0 : (p > fixed ? 0.0 : 0.5);
}

constexpr BoxGradient scaled(const BoxGradient& g, double s) noexcept {
  return {g[0] * s, g[1] * s, g[2] * s, g[3] * s};
}

// Scalars of the IoU family together with their derivatives with respect to
// the predicted box.
struct OverlapTerms {
  double inter = 0.0;
  double uni = 0.0;
  double iou = 0.0;
  double encl = 0.0;       // enclosing area
  double rho_sq = 0.0;     // squared center distance
  double diag_sq = 0.0;    // squared enclosing diagonal
  BoxGradient d_iou{};
  BoxGradient d_encl{};
  BoxGradient d_uni{};
  BoxGradient d_rho_sq{};
  BoxGradient d_diag_sq{};
};

inline void require_positive_gt(const Box& gt) {
  validate(gt);
  if (!has_positive_area(gt)) {
    throw InvalidBox("ground-truth box must have positive area: " + to_string(gt));
  }
}

inline OverlapTerms overlap_terms(const Box& g, const Box& p) {
  require_positive_gt(g);
  validate(p);
  OverlapTerms t;

  const double iw = std::min(g.x_max, p.x_max) - std::max(g.x_min, p.x_min);
  const double ih = std::min(g.y_max, p.y_max) - std::max(g.y_min, p.y_min);
  const bool overlapping = iw > 0.0 && ih > 0.0;
  t.inter = overlapping ? iw * ih : 0.0;

  BoxGradient d_inter{};
  if (overlapping) {
    d_inter[0] = -ih * dmax(g.x_min, p.x_min);
    d_inter[1] = -iw * dmax(g.y_min, p.y_min);
    d_inter[2] = ih * dmin(g.x_max, p.x_max);
    d_inter[3] = iw * dmin(g.y_max, p.y_max);
  }

  const double pw = p.width();
  const double ph = p.height();
  const BoxGradient d_pred_area{-ph, -pw, ph, pw};

  t.uni = area(g) + pw * ph - t.inter;
  t.iou = t.inter / t.uni;
  for (int i = 0; i < 4; ++i) {
    t.d_uni[i] = d_pred_area[i] - d_inter[i];
    t.d_iou[i] = (d_inter[i] * t.uni - t.inter * t.d_uni[i]) / (t.uni * t.uni);
  }

  const double cw = std::max(g.x_max, p.x_max) - std::min(g.x_min, p.x_min);
  const double ch = std::max(g.y_max, p.y_max) - std::min(g.y_min, p.y_min);
  const BoxGradient d_cw{-dmin(g.x_min, p.x_min), 0.0, dmax(g.x_max, p.x_max), 0.0};
  const BoxGradient d_ch{0.0, -dmin(g.y_min, p.y_min), 0.0, dmax(g.y_max, p.y_max)};
  t.encl = cw * ch;
  t.diag_sq = cw * cw + ch * ch;
  for (int i = 0; i < 4; ++i) {
    t.d_encl[i] = ch * d_cw[i] + cw * d_ch[i];
    t.d_diag_sq[i] = 2.0 * cw * d_cw[i] + 2.0 * ch * d_ch[i];
  }

  const double dx = p.center_x() - g.center_x();
  const double dy = p.center_y() - g.center_y();
  t.rho_sq = dx * dx + dy * dy;
  // d(center)/d(corner) = 1/2, so d(dx^2)/d(x) = dx.
  t.d_rho_sq = {dx, dy, dx, dy};
  return t;
}

inline double aspect_angle(const Box& b) {
  if (!(b.width() > 0.0 && b.height() > 0.0)) {
    throw DegenerateAspect("aspect ratio needs positive width and height: " + to_string(b));
  }
  return std::atan(b.width() / b.height());
}

inline constexpr double kAspectScale = 4.0 / (std::numbers::pi * std::numbers::pi);

inline double ciou_alpha(double iou, double v) noexcept {
  if (iou < 0.5) return 0.0;
  const double denom = (1.0 - iou) + v;
  return denom > 0.0 ? v / denom : 0.0;
}

}  // namespace detail

// Mean absolute difference over the four corner coordinates.
inline LossResult loss_l1(const Box& gt, const Box& pred) {
  validate(gt);
  validate(pred);
  const std::array<double, 4> g{gt.x_min, gt.y_min, gt.x_max, gt.y_max};
  const std::array<double, 4> p{pred.x_min, pred.y_min, pred.x_max, pred.y_max};
  LossResult r;
  for (int i = 0; i < 4; ++i) {
    const double d = p[i] - g[i];
    r.value += std::abs(d);
    r.gradient[i] = d > 0.0 ? 0.25 : (d < 0.0 ? -0.25 : 0.0);
  }
  r.value /= 4.0;
  return r;
}

// 1 - IoU. The gradient is exactly zero for non-overlapping boxes.
inline LossResult loss_iou(const Box& gt, const Box& pred) {
  const auto t = detail::overlap_terms(gt, pred);
  LossResult r;
  r.value = 1.0 - t.iou;
  r.gradient = detail::scaled(t.d_iou, -1.0);
  return r;
}

inline LossResult loss_giou(const Box& gt, const Box& pred) {
  const auto t = detail::overlap_terms(gt, pred);
  LossResult r;
  r.value = 1.0 - t.iou + (t.encl - t.uni) / t.encl;
  for (int i = 0; i < 4; ++i) {
    // (C - U)/C = 1 - U/C
    const double d_ratio = (t.d_uni[i] * t.encl - t.uni * t.d_encl[i]) / (t.encl * t.encl);
    r.gradient[i] = -t.d_iou[i] - d_ratio;
  }
  return r;
}

inline LossResult loss_diou(const Box& gt, const Box& pred) {
  const auto t = detail::overlap_terms(gt, pred);
  LossResult r;
  r.value = 1.0 - t.iou + t.rho_sq / t.diag_sq;
  for (int i = 0; i < 4; ++i) {
    const double d_pen =
        (t.d_rho_sq[i] * t.diag_sq - t.rho_sq * t.d_diag_sq[i]) / (t.diag_sq * t.diag_sq);
    r.gradient[i] = -t.d_iou[i] + d_pen;
  }
  return r;
}

// DIoU plus alpha * V. Alpha is zero below IoU 0.5, where the value equals
// DIoU exactly, and is held constant when differentiating.
inline CiouBreakdown loss_ciou_breakdown(const Box& gt, const Box& pred) {
  const double angle_gt = detail::aspect_angle(gt);
  const double angle_pred = detail::aspect_angle(pred);
  const double diff = angle_gt - angle_pred;

  CiouBreakdown out;
  out.result = loss_diou(gt, pred);
  const double iou_value = iou(gt, pred);
  out.internals.v = detail::kAspectScale * diff * diff;
  out.internals.alpha = detail::ciou_alpha(iou_value, out.internals.v);
  if (out.internals.alpha == 0.0) return out;

  const double w = pred.width();
  const double h = pred.height();
  const double k = 2.0 * detail::kAspectScale * diff / (w * w + h * h);
  const BoxGradient d_v{k * h, -k * w, -k * h, k * w};
  out.result.value += out.internals.alpha * out.internals.v;
  for (int i = 0; i < 4; ++i) out.result.gradient[i] += out.internals.alpha * d_v[i];
  return out;
}

inline LossResult loss_ciou(const Box& gt, const Box& pred) {
  return loss_ciou_breakdown(gt, pred).result;
}

inline LossResult loss(LossKind kind, const Box& gt, const Box& pred) {
  switch (kind) {
    case LossKind::kL1: return loss_l1(gt, pred);
    case LossKind::kIoU: return loss_iou(gt, pred);
    case LossKind::kGIoU: return loss_giou(gt, pred);
    case LossKind::kDIoU: return loss_diou(gt, pred);
    case LossKind::kCIoU: return loss_ciou(gt, pred);
  }
  throw InvalidArgument("unknown loss kind");
}

// Central-difference gradient of the loss value with step h. For CIoU the
// trade-off weight alpha is frozen at the unperturbed prediction, matching
// the analytic convention.
inline BoxGradient finite_diff_gradient(LossKind kind, const Box& gt, const Box& pred, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");

  std::optional<double> frozen_alpha;
  if (kind == LossKind::kCIoU) frozen_alpha = loss_ciou_breakdown(gt, pred).internals.alpha;

  auto value_at = [&](const Box& p) {
    if (!frozen_alpha) return loss(kind, gt, p).value;
    const double diff = detail::aspect_angle(gt) - detail::aspect_angle(p);
    return loss_diou(gt, p).value + *frozen_alpha * detail::kAspectScale * diff * diff;
  };

  BoxGradient g{};
  for (int i = 0; i < 4; ++i) {
    Box plus = pred;
    Box minus = pred;
    double* const plus_coord[4] = {&plus.x_min, &plus.y_min, &plus.x_max, &plus.y_max};
    double* const minus_coord[4] = {&minus.x_min, &minus.y_min, &minus.x_max, &minus.y_max};
    *plus_coord[i] += h;
    *minus_coord[i] -= h;
    g[i] = (value_at(plus) - value_at(minus)) / (2.0 * h);
  }
  return g;
}

}  // namespace detgeom
