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
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "detgeom/errors.hpp"
#include "detgeom/geometry.hpp"
#include "detgeom/losses.hpp"
#include "detgeom/random.hpp"

namespace detgeom {

enum class Parameterization { kCorners, kCenterSize };

struct DescentConfig {
  LossKind loss_kind = LossKind::kGIoU;
  double learning_rate = 0.1;
  std::size_t max_iters = 10000;
  double success_iou = 0.9;
  Parameterization parameterization = Parameterization::kCorners;
  // Halve the step (up to kMaxHalvings times) until the loss does not increase.
  bool backtracking = false;

  static constexpr int kMaxHalvings = 20;

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (!(success_iou > 0.0 && success_iou <= 1.0)) {
      throw InvalidArgument("success IoU must lie in (0, 1]");
    }
  }
};

struct DescentStep {
  Box box;
  double loss = 0.0;
  double gradient_norm = 0.0;
  double iou = 0.0;
};

struct Trajectory {
  std::vector<DescentStep> iterates;
  std::optional<std::size_t> converged_at;
  // Stopped early at a fixed point: zero gradient, or no backtracked step
  // decreased the loss.
  bool stalled = false;
};

// Swaps inverted coordinates so the box stays valid.
constexpr Box repair_box(Box b) noexcept {
  if (b.x_min > b.x_max) std::swap(b.x_min, b.x_max);
  if (b.y_min > b.y_max) std::swap(b.y_min, b.y_max);
  return b;
}

namespace detail {

inline std::optional<LossResult> try_loss(LossKind kind, const Box& target, const Box& pred) {
  try {
    return loss(kind, target, pred);
  } catch (const GeometryError&) {
    return std::nullopt;
  }
}

inline Box descend_step(const Box& pred, const BoxGradient& g, double step, Parameterization p) {
  if (p == Parameterization::kCorners) {
    return repair_box(Box{pred.x_min - step * g[0], pred.y_min - step * g[1],
                          pred.x_max - step * g[2], pred.y_max - step * g[3]});
  }
  // Chain rule through x_min = cx - w/2, x_max = cx + w/2.
  const double g_cx = g[0] + g[2];
  const double g_cy = g[1] + g[3];
  const double g_w = 0.5 * (g[2] - g[0]);
  const double g_h = 0.5 * (g[3] - g[1]);
  const double cx = pred.center_x() - step * g_cx;
  const double cy = pred.center_y() - step * g_cy;
  const double w = std::abs(pred.width() - step * g_w);
  const double h = std::abs(pred.height() - step * g_h);
  return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

struct DescentOutcome {
  std::optional<std::size_t> converged_at;
  bool stalled = false;
  std::size_t iterations = 0;
  Box final_box;
  double final_iou = 0.0;
};

// Plain gradient descent on the predicted box; `visit` sees every iterate.
template <typename Visitor>
DescentOutcome descend(const Box& init, const Box& target, const DescentConfig& cfg,
                       Visitor&& visit) {
  cfg.validate();
  validate(init);
  validate(target);
  if (!has_positive_area(target)) throw InvalidBox("target must have positive area");

  DescentOutcome out;
  Box pred = repair_box(init);
  for (std::size_t it = 0;; ++it) {
    const double current_iou = iou_or_zero(pred, target);
    const auto r = try_loss(cfg.loss_kind, target, pred);
    if (!r) {
      out.stalled = true;
      out.iterations = it;
      break;
    }
    visit(DescentStep{pred, r->value, gradient_norm(r->gradient), current_iou});
    out.iterations = it;
    if (current_iou >= cfg.success_iou) {
      out.converged_at = it;
      break;
    }
    if (it >= cfg.max_iters) break;
    if (gradient_norm(r->gradient) == 0.0) {
      out.stalled = true;
      break;
    }

    double step = cfg.learning_rate;
    Box candidate = descend_step(pred, r->gradient, step, cfg.parameterization);
    if (cfg.backtracking) {
      bool accepted = false;
      for (int k = 0; k <= DescentConfig::kMaxHalvings; ++k) {
        const auto next = try_loss(cfg.loss_kind, target, candidate);
        if (next && next->value <= r->value) {
          accepted = true;
          break;
        }
        step *= 0.5;
        candidate = descend_step(pred, r->gradient, step, cfg.parameterization);
      }
      if (!accepted) {
        out.stalled = true;
        break;
      }
    }
    pred = candidate;
  }
  out.final_box = pred;
  out.final_iou = iou_or_zero(pred, target);
  return out;
}

}  // namespace detail

// Descends from `init` toward `target` until IoU reaches cfg.success_iou or
// cfg.max_iters updates have been made. Every iterate is recorded.
inline Trajectory run_descent(const Box& init, const Box& target, const DescentConfig& cfg) {
  Trajectory t;
  const auto outcome =
      detail::descend(init, target, cfg, [&](const DescentStep& s) { t.iterates.push_back(s); });
  t.converged_at = outcome.converged_at;
  t.stalled = outcome.stalled;
  return t;
}

// Random (init, target) pairs inside [0, extent]^2 with side lengths in
// [min_side, max_side]. With `disjoint`, pairs never overlap.
struct GeometrySampler {
  std::uint64_t seed = 0;
  double extent = 10.0;
  double min_side = 0.5;
  double max_side = 3.0;
  bool disjoint = true;
};

struct TrialPair {
  Box init;
  Box target;
};

inline std::vector<TrialPair> sample_trial_pairs(const GeometrySampler& s, std::size_t trials) {
  if (!(s.min_side > 0.0 && s.max_side >= s.min_side && s.extent > s.max_side)) {
    throw InvalidArgument("sampler bounds must satisfy 0 < min_side <= max_side < extent");
  }
  Rng rng(s.seed);
  auto random_box = [&] {
    const double w = rng.uniform(s.min_side, s.max_side);
    const double h = rng.uniform(s.min_side, s.max_side);
    const double x = rng.uniform(0.0, s.extent - w);
    const double y = rng.uniform(0.0, s.extent - h);
    return Box{x, y, x + w, y + h};
  };
  std::vector<TrialPair> pairs;
  pairs.reserve(trials);
  while (pairs.size() < trials) {
    TrialPair p{random_box(), random_box()};
    if (s.disjoint && intersection_area(p.init, p.target) > 0.0) continue;
    pairs.push_back(p);
  }
  return pairs;
}

struct TrialOutcome {
  std::size_t trial = 0;
  LossKind loss_kind = LossKind::kL1;
  bool converged = false;
  std::size_t iterations = 0;
  double final_iou = 0.0;
};

struct LossSummary {
  LossKind loss_kind = LossKind::kL1;
  std::size_t trials = 0;
  std::size_t converged = 0;
  double convergence_rate = 0.0;
  std::optional<double> median_iterations;  // over converged trials
};

struct ConvergenceStudy {
  std::vector<TrialOutcome> outcomes;  // grouped by loss kind, then trial
  std::vector<LossSummary> summary;
};

inline std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Runs every loss kind over the same sampled pairs. `base.loss_kind` is
// overridden per kind. Trials may run on several threads; results do not
// depend on scheduling.
inline ConvergenceStudy convergence_study(std::size_t trials, std::span<const LossKind> kinds,
                                          const GeometrySampler& sampler,
                                          const DescentConfig& base, unsigned threads = 1) {
  if (trials < 30) throw InvalidArgument("a convergence study needs at least 30 trials");
  base.validate();
  const auto pairs = sample_trial_pairs(sampler, trials);

  ConvergenceStudy study;
  study.outcomes.resize(kinds.size() * trials);
  const std::size_t jobs = study.outcomes.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t k = j / trials;
      const std::size_t t = j % trials;
      DescentConfig cfg = base;
      cfg.loss_kind = kinds[k];
      const auto r = detail::descend(pairs[t].init, pairs[t].target, cfg, [](const DescentStep&) {});
      study.outcomes[j] = TrialOutcome{t, kinds[k], r.converged_at.has_value(),
                                       r.converged_at.value_or(r.iterations), r.final_iou};
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  for (std::size_t k = 0; k < kinds.size(); ++k) {
    LossSummary s;
    s.loss_kind = kinds[k];
    s.trials = trials;
    std::vector<double> iters;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto& o = study.outcomes[k * trials + t];
      if (o.converged) {
        ++s.converged;
        iters.push_back(static_cast<double>(o.iterations));
      }
    }
    s.convergence_rate = static_cast<double>(s.converged) / static_cast<double>(trials);
    s.median_iterations = median(std::move(iters));
    study.summary.push_back(s);
  }
  return study;
}

inline void write_trials_csv(std::ostream& os, std::span<const TrialOutcome> outcomes) {
  os << "trial,loss,converged,iterations,final_iou\n";
  char buf[32];
  for (const auto& o : outcomes) {
    std::snprintf(buf, sizeof buf, "%.17g", o.final_iou);
    os << o.trial << ',' << to_string(o.loss_kind) << ',' << (o.converged ? 1 : 0) << ','
       << o.iterations << ',' << buf << "\n";
  }
}

}  // namespace detgeom
