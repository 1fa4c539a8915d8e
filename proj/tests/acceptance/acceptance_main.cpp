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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
// if any criterion fails or exceeds its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "detgeom/commands.hpp"
#include "detgeom/detgeom.hpp"
#include "oracles.hpp"

namespace {

using namespace detgeom;

// Collects the first failure message of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && message_.empty()) message_ = what;
    ok_ = ok_ && ok;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(12);
    os << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::fabs(got - want) <= tol, os.str());
  }
  bool ok() const { return ok_; }
  const std::string& message() const { return message_; }

 private:
  bool ok_ = true;
  std::string message_;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<void(Check&)> body;
};

// 1. The fifteen loss fixtures.
void loss_fixtures(Check& c) {
  constexpr double tol = 1e-9;
  const double ciou_exact = oracle::ciou_loss({0, 0, 4, 4}, {0, 0, 4, 2});
  struct Fixture {
    LossKind kind;
    Box gt, pred;
    double want;
  } fixtures[] = {
      {LossKind::kL1, {0, 0, 2, 2}, {0, 0, 2, 2}, 0.0},
      {LossKind::kL1, {0, 0, 2, 2}, {1, 1, 3, 3}, 1.0},
      {LossKind::kL1, {0, 0, 4, 4}, {0, 0, 2, 2}, 1.0},
      {LossKind::kIoU, {0, 0, 2, 2}, {0, 0, 2, 2}, 0.0},
      {LossKind::kIoU, {0, 0, 1, 1}, {3, 3, 4, 5}, 1.0},
      {LossKind::kIoU, {0, 0, 2, 2}, {1, 1, 3, 3}, 6.0 / 7.0},
      {LossKind::kGIoU, {0, 0, 2, 2}, {0, 0, 2, 2}, 0.0},
      {LossKind::kGIoU, {0, 0, 1, 1}, {2, 2, 3, 3}, 1.0 + 7.0 / 9.0},
      {LossKind::kGIoU, {0, 0, 2, 2}, {1, 1, 3, 3}, 6.0 / 7.0 + 2.0 / 9.0},
      {LossKind::kDIoU, {0, 0, 2, 2}, {0, 0, 2, 2}, 0.0},
      {LossKind::kDIoU, {0, 0, 2, 2}, {2, 0, 4, 2}, 1.2},
      {LossKind::kDIoU, {0, 0, 4, 4}, {1, 1, 3, 3}, 0.75},
      {LossKind::kCIoU, {0, 0, 2, 2}, {0, 0, 2, 2}, 0.0},
      {LossKind::kCIoU, {0, 0, 2, 2}, {2, 0, 4, 2}, 1.2},
      {LossKind::kCIoU, {0, 0, 4, 4}, {0, 0, 4, 2}, ciou_exact},
  };
  for (const auto& f : fixtures) {
    c.near(loss(f.kind, f.gt, f.pred).value, f.want, tol,
           std::string(to_string(f.kind)) + " " + to_string(f.gt) + " " + to_string(f.pred));
  }
  c.near(ciou_exact, 0.534499, 1e-6, "ciou fixture (6 significant digits)");
  c.expect(loss_iou({0, 0, 1, 1}, {3, 3, 4, 5}).gradient == BoxGradient{0, 0, 0, 0},
           "disjoint IoU gradient is zero");
  c.expect(loss_ciou_breakdown({0, 0, 2, 2}, {2, 0, 4, 2}).internals.alpha == 0.0,
           "alpha is zero below IoU 0.5");
}

// 2. Analytic gradients against central differences.
void gradient_correctness(Check& c) {
  Rng rng(2);
  for (LossKind kind : kAllLossKinds) {
    for (int trial = 0; trial < 1000; ++trial) {
      const auto [gt, pred] = oracle::differentiable_pair(rng, 1e-3);
      const auto analytic = loss(kind, gt, pred).gradient;
      const auto numeric = finite_diff_gradient(kind, gt, pred, 1e-5);
      for (int i = 0; i < 4; ++i) {
        if (!oracle::gradients_agree(analytic[i], numeric[i], 1e-5, 1e-8)) {
          std::ostringstream os;
          os << to_string(kind) << " trial " << trial << " coord " << i << ": analytic "
             << analytic[i] << " vs numeric " << numeric[i];
          c.expect(false, os.str());
          return;
        }
      }
    }
  }
}

// 3. IoU loss has no gradient on disjoint pairs; GIoU does.
void vanishing_gradient(Check& c) {
  const auto pairs = sample_trial_pairs(GeometrySampler{.seed = 3}, 100);
  for (const auto& p : pairs) {
    const auto iou_grad = loss_iou(p.target, p.init).gradient;
    c.expect(iou_grad == BoxGradient{0, 0, 0, 0}, "IoU gradient not exactly zero");
    if (center_distance_sq(p.target, p.init) > 0.0) {
      c.expect(gradient_norm(loss_giou(p.target, p.init).gradient) > 0.0,
               "GIoU gradient vanished on a disjoint pair");
    }
  }
}

// 4. Convergence ordering on the default study.
void convergence_ordering(Check& c) {
  const auto opts = default_convergence_options();
  c.expect(opts.trials >= 100, "study needs at least 100 trials");
  c.expect(opts.sampler.disjoint, "study must start from disjoint pairs");
  const auto study = convergence_study(opts.trials, opts.losses, opts.sampler, opts.descent, 1);
  std::optional<LossSummary> iou_s, giou_s, diou_s;
  for (const auto& s : study.summary) {
    if (s.loss_kind == LossKind::kIoU) iou_s = s;
    if (s.loss_kind == LossKind::kGIoU) giou_s = s;
    if (s.loss_kind == LossKind::kDIoU) diou_s = s;
  }
  c.expect(iou_s && giou_s && diou_s, "study is missing a loss kind");
  if (!c.ok()) return;
  c.expect(iou_s->convergence_rate == 0.0, "IoU loss converged on a disjoint start");
  c.expect(giou_s->convergence_rate > 0.0, "GIoU never converged");
  c.expect(giou_s->median_iterations && diou_s->median_iterations, "missing medians");
  if (!c.ok()) return;
  std::ostringstream os;
  os << "median iterations DIoU " << *diou_s->median_iterations << " vs GIoU "
     << *giou_s->median_iterations;
  c.expect(*diou_s->median_iterations < *giou_s->median_iterations, os.str());
}

// 5. Published table arithmetic.
void table_arithmetic(Check& c) {
  const auto mf = load_metrics(std::string(DETGEOM_FIXTURES) + "/seed_tables.json");
  c.expect(mf.models.size() == 6, "expected six model rows");
  c.expect(mf.classwise.has_value(), "missing classwise table");
  if (!c.ok()) return;
  const auto stats = derive_report_stats(mf.models, &*mf.classwise, "mBaseline");
  for (const auto& row : mf.models) {
    const std::size_t j = mf.classwise->model_index(row.name);
    c.near(stats.classwise_map_all[j].second, row.map_all, 0.00005, row.name + " classwise mean");
    c.expect(row.reported_f1 && row.reported_fps, row.name + " lacks published F1/FPS");
    if (!c.ok()) return;
    c.near(row.f1, *row.reported_f1, 0.0001, row.name + " F1");
    c.near(1000.0 / row.latency_ms, *row.reported_fps, 0.05, row.name + " FPS");
  }
  bool found = false;
  for (const auto& cc : stats.classes) {
    if (cc.class_name == "CP" && cc.model == "mL1") {
      found = true;
      c.near(cc.ap_all_pct, 37.11, 0.005, "CP mAP@[.50:.95] boost");
      c.near(cc.ap_50_pct, 36.15, 0.005, "CP mAP@.50 boost");
    }
  }
  c.expect(found, "CP/mL1 comparison missing");
}

// 6. Evaluator against a naive PR-curve oracle, plus a perfect fixture.
void evaluator_oracle(Check& c) {
  Rng rng(6);
  const EvalConfig cfg;
  for (int trial = 0; trial < 500 && c.ok(); ++trial) {
    std::vector<GroundTruthAnnotation> gts;
    std::vector<Detection> dets;
    std::vector<oracle::SimpleGt> sg;
    std::vector<oracle::SimpleDet> sd;
    const std::size_t images = 1 + rng.below(3);
    const std::size_t n_gt = rng.below(11), n_det = rng.below(21);
    for (std::size_t i = 0; i < n_gt; ++i) {
      const GroundTruthAnnotation g{static_cast<ImageId>(rng.below(images)),
                                    static_cast<ClassId>(rng.below(3)),
                                    oracle::random_box(rng, 0, 40, 2, 15)};
      gts.push_back(g);
      sg.push_back({g.image_id, g.class_id, g.box});
    }
    std::vector<double> scores(n_det);
    for (std::size_t i = 0; i < n_det; ++i) scores[i] = (static_cast<double>(i) + 1.0) / 32.0;
    rng.shuffle(std::span<double>(scores));
    for (std::size_t i = 0; i < n_det; ++i) {
      Detection d;
      if (!gts.empty() && rng.bernoulli(0.7)) {
        const auto& g = gts[rng.below(gts.size())];
        d = {g.image_id, g.class_id, oracle::jitter(rng, g.box, 0.3), scores[i]};
      } else {
        d = {static_cast<ImageId>(rng.below(images)), static_cast<ClassId>(rng.below(3)),
             oracle::random_box(rng, 0, 40, 2, 15), scores[i]};
      }
      dets.push_back(d);
      sd.push_back({d.image_id, d.class_id, d.box, d.score});
    }
    for (ClassId cls = 0; cls < 3; ++cls) {
      for (double t : cfg.iou_thresholds) {
        const double want = oracle::naive_ap(sd, sg, cls, t, 101);
        const auto got = average_precision(dets, gts, cls, t, cfg);
        if (want < 0) {
          c.expect(!got.has_value(), "AP reported for an empty class");
        } else {
          c.expect(got.has_value(), "AP missing for a populated class");
          if (got) c.near(*got, want, 1e-9, "AP trial " + std::to_string(trial));
        }
      }
    }
  }

  EvaluateOptions opts;
  opts.gt_path = std::string(DETGEOM_FIXTURES) + "/tiny_gt.json";
  opts.pred_path = std::string(DETGEOM_FIXTURES) + "/tiny_pred_perfect.json";
  const auto perfect = run_evaluate(opts).report;
  c.expect(perfect.map_all == 1.0, "perfect fixture mAP != 1");
  c.expect(perfect.average_recall == 1.0, "perfect fixture AR != 1");
  c.expect(perfect.f1 == 1.0, "perfect fixture F1 != 1");
}

// 7. NMS against a brute-force reference.
void nms_oracle(Check& c) {
  Rng rng(7);
  constexpr std::size_t kMaxKeep = 1000;
  for (int trial = 0; trial < 1000 && c.ok(); ++trial) {
    const std::size_t n = rng.below(201);
    std::vector<ScoredBox> cand;
    std::vector<Box> boxes;
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
      Box b = oracle::random_box(rng, 0, 100, 2, 30);
      if (i > 0 && rng.bernoulli(0.1)) b = boxes[rng.below(i)];
      const double s = rng.bernoulli(0.1) ? 0.5 : rng.uniform();
      cand.push_back({b, s});
      boxes.push_back(b);
      scores.push_back(s);
    }
    for (double t : {0.3, 0.5, kProposalNmsThreshold, 0.9}) {
      const auto kept = nms(cand, t, kMaxKeep);
      c.expect(kept == oracle::brute_force_nms(boxes, scores, t, kMaxKeep),
               "NMS differs from reference at trial " + std::to_string(trial));
      c.expect(kept.size() <= kMaxKeep, "NMS kept more than max_keep");
    }
  }
}

// 8. Round trips and seeded determinism.
void round_trips(Check& c) {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const Box anchor = oracle::random_box(rng, -100, 100, 1, 60);
    const Box target = oracle::random_box(rng, -100, 100, 1, 60);
    const Box back = decode_delta(anchor, encode_delta(anchor, target));
    const double err = std::max({std::fabs(back.x_min - target.x_min),
                                 std::fabs(back.y_min - target.y_min),
                                 std::fabs(back.x_max - target.x_max),
                                 std::fabs(back.y_max - target.y_max)});
    if (err > 1e-9) {
      c.expect(false, "delta round trip error " + std::to_string(err));
      return;
    }
  }

  std::vector<ImageId> ids(3319);
  std::iota(ids.begin(), ids.end(), 1);
  const SplitSpec spec{};
  const auto s1 = split_dataset(ids, spec);
  c.expect(s1.train.size() == 1771 && s1.val.size() == 723 && s1.test.size() == 825,
           "split sizes " + std::to_string(s1.train.size()) + "/" +
               std::to_string(s1.val.size()) + "/" + std::to_string(s1.test.size()));
  const auto s2 = split_dataset(ids, spec);
  c.expect(s1.train == s2.train && s1.val == s2.val && s1.test == s2.test,
           "identical seeds gave different splits");

  const auto p1 = sample_plan(AugmentParams{}, 1000, 12345);
  const auto p2 = sample_plan(AugmentParams{}, 1000, 12345);
  c.expect(p1.images == p2.images, "identical seeds gave different augmentation plans");

  DescentConfig cfg;
  cfg.loss_kind = LossKind::kCIoU;
  cfg.learning_rate = 0.3;
  const auto pairs = sample_trial_pairs(GeometrySampler{.seed = 8}, 20);
  for (const auto& p : pairs) {
    const auto a = run_descent(p.init, p.target, cfg);
    const auto b = run_descent(p.init, p.target, cfg);
    bool same = a.iterates.size() == b.iterates.size() && a.converged_at == b.converged_at;
    for (std::size_t i = 0; same && i < a.iterates.size(); ++i) {
      same = a.iterates[i].box == b.iterates[i].box && a.iterates[i].loss == b.iterates[i].loss;
    }
    c.expect(same, "identical inputs gave different trajectories");
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "loss-value fixtures", 1.0, loss_fixtures},
      {2, "gradient correctness", 10.0, gradient_correctness},
      {3, "IoU-loss vanishing gradient", 0.0, vanishing_gradient},
      {4, "convergence ordering", 60.0, convergence_ordering},
      {5, "table arithmetic reproduction", 1.0, table_arithmetic},
      {6, "evaluator oracle equivalence", 0.0, evaluator_oracle},
      {7, "NMS oracle equivalence", 0.0, nms_oracle},
      {8, "round-trip and determinism", 0.0, round_trips},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.budget_s > 0 && secs > cr.budget_s) {
      check.expect(false, "runtime " + std::to_string(secs) + " s exceeds " +
                              std::to_string(cr.budget_s) + " s");
    }
    std::printf("%s criterion %d: %s (%.3f s)%s%s\n", check.ok() ? "PASS" : "FAIL", cr.id, cr.name,
                secs, check.ok() ? "" : " -- ", check.message().c_str());
    failures += !check.ok();
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
