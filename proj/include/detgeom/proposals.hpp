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
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "detgeom/errors.hpp"
#include "detgeom/geometry.hpp"

namespace detgeom {

// Anchor tiling over a feature pyramid. Base side at a level is
// stride * scale; each ratio r = width / height yields a box of the same
// area, base * sqrt(r) wide and base / sqrt(r) high.
struct AnchorConfig {
  int scale = 8;
  std::vector<double> aspect_ratios{0.5, 1.0, 2.0};
  std::vector<int> strides{4, 8, 16, 32};

  void validate() const {
    if (scale <= 0) throw InvalidArgument("anchor scale must be positive");
    if (aspect_ratios.empty()) throw InvalidArgument("at least one aspect ratio is required");
    for (double r : aspect_ratios) {
      if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("aspect ratios must be positive");
    }
    if (strides.empty()) throw InvalidArgument("at least one stride is required");
    for (std::size_t i = 0; i < strides.size(); ++i) {
      if (strides[i] <= 0 || (i > 0 && strides[i] <= strides[i - 1])) {
        throw InvalidArgument("strides must be strictly increasing positive integers");
      }
    }
  }
};

struct FeatureSize {
  int height = 0;
  int width = 0;
};

struct Anchor {
  Box box;
  int level = 0;
  int row = 0;
  int col = 0;
};

// Ordered by level, then row, then column, then ratio. Anchors are not
// clipped to the image.
inline std::vector<Anchor> generate_anchors(const AnchorConfig& cfg,
                                            std::span<const FeatureSize> feature_sizes) {
  cfg.validate();
  if (feature_sizes.size() != cfg.strides.size()) {
    throw InvalidArgument("expected one feature size per stride (" +
                          std::to_string(cfg.strides.size()) + "), got " +
                          std::to_string(feature_sizes.size()));
  }
  std::size_t total = 0;
  for (const auto& fs : feature_sizes) {
    if (fs.height < 0 || fs.width < 0) throw InvalidArgument("negative feature size");
    total += static_cast<std::size_t>(fs.height) * fs.width * cfg.aspect_ratios.size();
  }

  std::vector<Anchor> anchors;
  anchors.reserve(total);
  for (std::size_t level = 0; level < cfg.strides.size(); ++level) {
    const double stride = cfg.strides[level];
    const double base = stride * cfg.scale;
    for (int row = 0; row < feature_sizes[level].height; ++row) {
      for (int col = 0; col < feature_sizes[level].width; ++col) {
        const double cx = (col + 0.5) * stride;
        const double cy = (row + 0.5) * stride;
        for (double r : cfg.aspect_ratios) {
          const double half_w = 0.5 * base * std::sqrt(r);
          const double half_h = 0.5 * base / std::sqrt(r);
          anchors.push_back(Anchor{Box{cx - half_w, cy - half_h, cx + half_w, cy + half_h},
                                   static_cast<int>(level), row, col});
        }
      }
    }
  }
  return anchors;
}

// Feature-map sizes for an image: ceil(side / stride) per level.
inline std::vector<FeatureSize> feature_sizes_for_image(const AnchorConfig& cfg, int image_height,
                                                        int image_width) {
  cfg.validate();
  std::vector<FeatureSize> sizes;
  for (int s : cfg.strides) sizes.push_back({(image_height + s - 1) / s, (image_width + s - 1) / s});
  return sizes;
}

struct BoxDelta {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

namespace detail {
inline void require_positive_extent(const Box& b, const char* what) {
  if (!(b.width() > 0.0 && b.height() > 0.0) || !is_valid(b)) {
    throw InvalidArgument(std::string(what) + " must have positive width and height: " +
                          to_string(b));
  }
}
}  // namespace detail

inline BoxDelta encode_delta(const Box& anchor, const Box& target) {
  detail::require_positive_extent(anchor, "anchor");
  detail::require_positive_extent(target, "target");
  const double wa = anchor.width();
  const double ha = anchor.height();
  return BoxDelta{(target.center_x() - anchor.center_x()) / wa,
                  (target.center_y() - anchor.center_y()) / ha, std::log(target.width() / wa),
                  std::log(target.height() / ha)};
}

inline Box decode_delta(const Box& anchor, const BoxDelta& d) {
  detail::require_positive_extent(anchor, "anchor");
  const double wa = anchor.width();
  const double ha = anchor.height();
  const double cx = anchor.center_x() + d.tx * wa;
  const double cy = anchor.center_y() + d.ty * ha;
  const double w = wa * std::exp(d.tw);
  const double h = ha * std::exp(d.th);
  return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

// L1 in delta space: mean absolute difference between the encoded regression
// targets of `gt` and `pred` relative to `anchor`.
inline double delta_l1(const Box& anchor, const Box& gt, const Box& pred) {
  const BoxDelta a = encode_delta(anchor, gt);
  const BoxDelta b = encode_delta(anchor, pred);
  return (std::abs(a.tx - b.tx) + std::abs(a.ty - b.ty) + std::abs(a.tw - b.tw) +
          std::abs(a.th - b.th)) /
         4.0;
}

struct ScoredBox {
  Box box;
  double score = 0.0;
};

inline constexpr double kProposalNmsThreshold = 0.7;
inline constexpr std::size_t kMaxProposals = 1000;

// Greedy non-maximum suppression. Returns kept input indices in descending
// score order (ties by lower index). A candidate is suppressed when its IoU
// with an already kept box is strictly greater than `iou_threshold`.
inline std::vector<std::size_t> nms(std::span<const ScoredBox> candidates,
                                    double iou_threshold = kProposalNmsThreshold,
                                    std::size_t max_keep = kMaxProposals) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("NMS threshold must lie in (0, 1]");
  }
  if (max_keep == 0) throw InvalidArgument("max_keep must be positive");

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });

  std::vector<std::size_t> keep;
  for (std::size_t idx : order) {
    if (keep.size() >= max_keep) break;
    const Box& box = candidates[idx].box;
    const bool suppressed = std::any_of(keep.begin(), keep.end(), [&](std::size_t k) {
      return iou_or_zero(candidates[k].box, box) > iou_threshold;
    });
    if (!suppressed) keep.push_back(idx);
  }
  return keep;
}

struct Assignment {
  bool positive = false;
  std::optional<std::size_t> gt_index;  // argmax ground truth, if any exists
  double max_iou = 0.0;
};

inline constexpr double kPositiveIouThreshold = 0.5;

// Labels a proposal positive when its best IoU with any ground truth exceeds
// `pos_threshold`. Ties in IoU go to the lower ground-truth index.
inline std::vector<Assignment> assign_proposals(std::span<const Box> proposals,
                                                std::span<const Box> gts,
                                                double pos_threshold = kPositiveIouThreshold) {
  if (!(pos_threshold > 0.0 && pos_threshold < 1.0)) {
    throw InvalidArgument("positive threshold must lie in (0, 1)");
  }
  std::vector<Assignment> out(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    Assignment& a = out[i];
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double v = iou_or_zero(proposals[i], gts[j]);
      if (!a.gt_index || v > a.max_iou) {
        a.gt_index = j;
        a.max_iou = v;
      }
    }
    a.positive = a.gt_index.has_value() && a.max_iou > pos_threshold;
  }
  return out;
}

}  // namespace detgeom
