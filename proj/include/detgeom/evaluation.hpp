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
#include <cstddef>
#include <cstdint>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "detgeom/errors.hpp"
#include "detgeom/geometry.hpp"

namespace detgeom {

using ImageId = std::int64_t;
using ClassId = std::int64_t;

struct Detection {
  ImageId image_id = 0;
  ClassId class_id = 0;
  Box box;
  double score = 0.0;
};

struct GroundTruthAnnotation {
  ImageId image_id = 0;
  ClassId class_id = 0;
  Box box;
};

// What a category with neither ground truth nor detections contributes to
// the class means. Categories with detections but no ground truth always
// score AP 0.
enum class AbsentClassPolicy { kSkip, kZero };

// 0.50, 0.55, ..., 0.95, each the double nearest to its decimal value.
inline std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

struct EvalConfig {
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  std::size_t max_detections_per_image = 100;
  std::size_t recall_samples = 101;
  AbsentClassPolicy absent_class_policy = AbsentClassPolicy::kSkip;
  unsigned threads = 1;

  void validate() const {
    if (iou_thresholds.empty()) throw InvalidArgument("at least one IoU threshold is required");
    for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
      const double t = iou_thresholds[i];
      if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("IoU thresholds must lie in (0, 1)");
      if (i > 0 && !(t > iou_thresholds[i - 1])) {
        throw InvalidArgument("IoU thresholds must be strictly increasing");
      }
    }
    if (max_detections_per_image == 0) throw InvalidArgument("max detections must be positive");
    if (recall_samples < 2) throw InvalidArgument("need at least two recall samples");
  }
};

struct MatchResult {
  std::vector<bool> det_is_tp;                         // input order
  std::vector<std::optional<std::size_t>> det_match;   // matched ground-truth index
  std::vector<bool> gt_matched;
};

// Greedy matching at IoU threshold t. Detections are visited by descending
// score (ties in input order); each takes the highest-IoU unmatched ground
// truth of the same image and class with IoU >= t, lower index on IoU ties.
inline MatchResult match_detections(std::span<const Detection> dets,
                                    std::span<const GroundTruthAnnotation> gts, double t) {
  MatchResult m;
  m.det_is_tp.assign(dets.size(), false);
  m.det_match.assign(dets.size(), std::nullopt);
  m.gt_matched.assign(gts.size(), false);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  for (std::size_t d : order) {
    std::optional<std::size_t> best;
    double best_iou = t;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.gt_matched[g] || gts[g].class_id != dets[d].class_id ||
          gts[g].image_id != dets[d].image_id) {
        continue;
      }
      const double v = iou_or_zero(dets[d].box, gts[g].box);
      if (v >= best_iou && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best) {
      m.gt_matched[*best] = true;
      m.det_is_tp[d] = true;
      m.det_match[d] = best;
    }
  }
  return m;
}

// Mean over `samples` evenly spaced recall levels in [0, 1] of the maximum
// precision at recall >= level (0 when the level is never reached).
// `precision` and `recall` are the cumulative curve in score order.
inline double interpolated_ap(std::span<const double> precision, std::span<const double> recall,
                              std::size_t samples) {
  if (precision.size() != recall.size()) throw InvalidArgument("curve length mismatch");
  std::vector<double> envelope(precision.begin(), precision.end());
  for (std::size_t i = envelope.size(); i-- > 1;) {
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double level = static_cast<double>(k) / static_cast<double>(samples - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += envelope[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / static_cast<double>(samples);
}

struct ThresholdStats {
  std::optional<double> ap;      // nullopt when the slice has no gts and no dets
  std::optional<double> recall;  // nullopt when the slice has no gts
};

namespace detail {

// Detections and ground truths of one class, grouped by image, detections
// sorted by score and capped per image.
struct ClassSlice {
  std::map<ImageId, std::vector<Detection>> dets;
  std::map<ImageId, std::vector<GroundTruthAnnotation>> gts;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
};

inline ClassSlice make_slice(std::span<const Detection> dets,
                             std::span<const GroundTruthAnnotation> gts, ClassId class_id,
                             std::size_t max_dets) {
  ClassSlice s;
  for (const auto& g : gts) {
    if (g.class_id != class_id) continue;
    s.gts[g.image_id].push_back(g);
    ++s.num_gt;
  }
  for (const auto& d : dets) {
    if (d.class_id == class_id) s.dets[d.image_id].push_back(d);
  }
  for (auto& [image, list] : s.dets) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (list.size() > max_dets) list.resize(max_dets);
    s.num_det += list.size();
  }
  return s;
}

inline ThresholdStats slice_stats(const ClassSlice& s, double t, std::size_t samples) {
  ThresholdStats out;
  if (s.num_gt == 0) {
    if (s.num_det > 0) out.ap = 0.0;
    return out;
  }
  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> all;
  all.reserve(s.num_det);
  static const std::vector<GroundTruthAnnotation> kNone;
  for (const auto& [image, list] : s.dets) {
    const auto it = s.gts.find(image);
    const auto& image_gts = it == s.gts.end() ? kNone : it->second;
    const MatchResult m = match_detections(list, image_gts, t);
    for (std::size_t i = 0; i < list.size(); ++i) all.push_back({list[i].score, m.det_is_tp[i]});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });

  std::vector<double> precision(all.size());
  std::vector<double> recall(all.size());
  double tp = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].tp) tp += 1.0;
    precision[i] = tp / static_cast<double>(i + 1);
    recall[i] = tp / static_cast<double>(s.num_gt);
  }
  out.ap = interpolated_ap(precision, recall, samples);
  out.recall = tp / static_cast<double>(s.num_gt);
  return out;
}

}  // namespace detail

// Per-class statistics at threshold t over all images.
inline ThresholdStats threshold_stats(std::span<const Detection> dets,
                                      std::span<const GroundTruthAnnotation> gts,
                                      ClassId class_id, double t, const EvalConfig& cfg) {
  const auto slice = detail::make_slice(dets, gts, class_id, cfg.max_detections_per_image);
  return detail::slice_stats(slice, t, cfg.recall_samples);
}

// Interpolated AP of one class at IoU threshold t. Inputs may span many
// images; only entries of `class_id` are used. Returns 0 for a class with
// detections but no ground truth, nullopt when it has neither.
inline std::optional<double> average_precision(std::span<const Detection> dets,
                                               std::span<const GroundTruthAnnotation> gts,
                                               ClassId class_id, double t,
                                               const EvalConfig& cfg = {}) {
  return threshold_stats(dets, gts, class_id, t, cfg).ap;
}

struct ClassResult {
  ClassId class_id = 0;
  std::vector<double> ap_per_threshold;
  std::vector<double> recall_per_threshold;
  double ap_all = 0.0;
  double ap_50 = 0.0;
  std::optional<double> average_recall;
};

// All thresholds for one class. nullopt when the class has neither ground
// truth nor detections and the policy is kSkip.
inline std::optional<ClassResult> evaluate_class(std::span<const Detection> dets,
                                                 std::span<const GroundTruthAnnotation> gts,
                                                 ClassId class_id, const EvalConfig& cfg) {
  const auto slice = detail::make_slice(dets, gts, class_id, cfg.max_detections_per_image);
  ClassResult r;
  r.class_id = class_id;
  if (slice.num_gt == 0 && slice.num_det == 0) {
    if (cfg.absent_class_policy == AbsentClassPolicy::kSkip) return std::nullopt;
    r.ap_per_threshold.assign(cfg.iou_thresholds.size(), 0.0);
    return r;
  }
  bool has_50 = false;
  for (double t : cfg.iou_thresholds) {
    const ThresholdStats st = detail::slice_stats(slice, t, cfg.recall_samples);
    r.ap_per_threshold.push_back(st.ap.value_or(0.0));
    if (st.recall) r.recall_per_threshold.push_back(*st.recall);
    if (t == 0.5) {
      r.ap_50 = st.ap.value_or(0.0);
      has_50 = true;
    }
  }
  if (!has_50) r.ap_50 = detail::slice_stats(slice, 0.5, cfg.recall_samples).ap.value_or(0.0);
  r.ap_all = std::accumulate(r.ap_per_threshold.begin(), r.ap_per_threshold.end(), 0.0) /
             static_cast<double>(r.ap_per_threshold.size());
  if (!r.recall_per_threshold.empty()) {
    r.average_recall =
        std::accumulate(r.recall_per_threshold.begin(), r.recall_per_threshold.end(), 0.0) /
        static_cast<double>(r.recall_per_threshold.size());
  }
  return r;
}

// Harmonic mean; defined as 0 when both inputs are 0.
inline double f1(double precision_like, double recall_like) {
  if (!(precision_like >= 0.0 && precision_like <= 1.0 && recall_like >= 0.0 &&
        recall_like <= 1.0)) {
    throw InvalidArgument("f1 inputs must lie in [0, 1]");
  }
  const double sum = precision_like + recall_like;
  return sum > 0.0 ? 2.0 * precision_like * recall_like / sum : 0.0;
}

struct EvalReport {
  std::vector<ClassResult> per_class;
  double map_all = 0.0;
  double map_50 = 0.0;
  // Absent when no class carries recall (e.g. aggregated AP-only tables).
  std::optional<double> average_recall;
  std::optional<double> f1;
};

// Unweighted class means. Average recall is the mean over classes that have
// ground truth; F1 is the harmonic mean of map_all and average recall.
inline EvalReport aggregate(std::vector<ClassResult> per_class) {
  if (per_class.empty()) throw EmptyEvaluation("nothing to aggregate: no evaluated classes");
  EvalReport report;
  double ar_sum = 0.0;
  std::size_t ar_count = 0;
  for (const auto& c : per_class) {
    report.map_all += c.ap_all;
    report.map_50 += c.ap_50;
    if (c.average_recall) {
      ar_sum += *c.average_recall;
      ++ar_count;
    }
  }
  const double n = static_cast<double>(per_class.size());
  report.map_all /= n;
  report.map_50 /= n;
  if (ar_count > 0) {
    report.average_recall = ar_sum / static_cast<double>(ar_count);
    report.f1 = f1(report.map_all, *report.average_recall);
  }
  report.per_class = std::move(per_class);
  return report;
}

// Full evaluation over `class_ids` (or every class seen in the inputs when
// empty). Classes are evaluated independently, optionally in parallel; the
// result does not depend on the thread count.
inline EvalReport evaluate(std::span<const Detection> dets,
                           std::span<const GroundTruthAnnotation> gts,
                           std::span<const ClassId> class_ids, const EvalConfig& cfg = {}) {
  cfg.validate();
  for (const auto& d : dets) {
    if (!is_valid(d.box)) throw InvalidArgument("detection with invalid box " + to_string(d.box));
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw InvalidArgument("detection score outside [0, 1]");
    }
  }
  std::vector<ClassId> classes(class_ids.begin(), class_ids.end());
  if (classes.empty()) {
    std::set<ClassId> seen;
    for (const auto& g : gts) seen.insert(g.class_id);
    for (const auto& d : dets) seen.insert(d.class_id);
    classes.assign(seen.begin(), seen.end());
  }

  std::vector<std::optional<ClassResult>> results(classes.size());
  if (cfg.threads <= 1 || classes.size() <= 1) {
    for (std::size_t i = 0; i < classes.size(); ++i) {
      results[i] = evaluate_class(dets, gts, classes[i], cfg);
    }
  } else {
    std::vector<std::future<void>> tasks;
    const std::size_t workers = std::min<std::size_t>(cfg.threads, classes.size());
    for (std::size_t w = 0; w < workers; ++w) {
      tasks.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < classes.size(); i += workers) {
          results[i] = evaluate_class(dets, gts, classes[i], cfg);
        }
      }));
    }
    for (auto& t : tasks) t.get();
  }

  std::vector<ClassResult> evaluated;
  for (auto& r : results) {
    if (r) evaluated.push_back(std::move(*r));
  }
  return aggregate(std::move(evaluated));
}

}  // namespace detgeom
