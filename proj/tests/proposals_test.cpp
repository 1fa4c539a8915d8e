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
#include "detgeom/proposals.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace detgeom {
namespace {

TEST(Anchors, SingleLevelExamples) {
  AnchorConfig cfg;
  cfg.strides = {16};
  cfg.aspect_ratios = {1.0};
  const std::vector<FeatureSize> one{{1, 1}};
  const auto anchors = generate_anchors(cfg, one);
  ASSERT_EQ(anchors.size(), 1u);
  EXPECT_EQ(anchors[0].box, (Box{-56, -56, 72, 72}));
  EXPECT_DOUBLE_EQ(anchors[0].box.center_x(), 8.0);
  EXPECT_DOUBLE_EQ(anchors[0].box.width(), 128.0);

  cfg.aspect_ratios = {0.5, 1.0, 2.0};
  const std::vector<FeatureSize> two_by_three{{2, 3}};
  const auto tiled = generate_anchors(cfg, two_by_three);
  EXPECT_EQ(tiled.size(), 18u);
  // Area is preserved across ratios; ratio is width / height.
  EXPECT_NEAR(area(tiled[2].box), 128.0 * 128.0, 1e-9);
  EXPECT_NEAR(area(tiled[0].box), area(tiled[1].box), 1e-9);
  EXPECT_NEAR(tiled[2].box.width() / tiled[2].box.height(), 2.0, 1e-12);
}

TEST(Anchors, CentersAndCounts) {
  const AnchorConfig cfg;  // scale 8, ratios {0.5, 1, 2}, strides {4, 8, 16, 32}
  const std::vector<FeatureSize> sizes{{5, 7}, {3, 4}, {2, 2}, {1, 1}};
  const auto anchors = generate_anchors(cfg, sizes);
  std::size_t expected = 0;
  for (const auto& s : sizes) expected += static_cast<std::size_t>(s.height * s.width) * 3;
  ASSERT_EQ(anchors.size(), expected);
  for (const auto& a : anchors) {
    const double stride = cfg.strides[a.level];
    EXPECT_NEAR(a.box.center_x(), (a.col + 0.5) * stride, 1e-9);
    EXPECT_NEAR(a.box.center_y(), (a.row + 0.5) * stride, 1e-9);
    EXPECT_NEAR(area(a.box), std::pow(stride * cfg.scale, 2), 1e-6);
  }
}

TEST(Anchors, ConfigErrors) {
  AnchorConfig cfg;
  const std::vector<FeatureSize> three{{1, 1}, {1, 1}, {1, 1}};
  EXPECT_THROW(generate_anchors(cfg, three), InvalidArgument);
  cfg.strides = {8, 8, 16};
  EXPECT_THROW(generate_anchors(cfg, three), InvalidArgument);
  cfg = AnchorConfig{};
  cfg.aspect_ratios = {1.0, -2.0};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Anchors, FeatureSizesForImage) {
  const auto sizes = feature_sizes_for_image(AnchorConfig{}, 640, 360);
  ASSERT_EQ(sizes.size(), 4u);
  EXPECT_EQ(sizes[0].height, 160);
  EXPECT_EQ(sizes[0].width, 90);
  EXPECT_EQ(sizes[3].height, 20);
  EXPECT_EQ(sizes[3].width, 12);  // ceil(360 / 32)
}

TEST(BoxDelta, Examples) {
  const Box anchor{0, 0, 2, 2};
  const auto zero = encode_delta(anchor, anchor);
  EXPECT_EQ(zero.tx, 0.0);
  EXPECT_EQ(zero.ty, 0.0);
  EXPECT_EQ(zero.tw, 0.0);
  EXPECT_EQ(zero.th, 0.0);
  EXPECT_EQ(decode_delta(anchor, BoxDelta{}), anchor);

  const auto d = encode_delta(anchor, {1, 1, 3, 3});
  EXPECT_DOUBLE_EQ(d.tx, 0.5);
  EXPECT_DOUBLE_EQ(d.ty, 0.5);
  EXPECT_DOUBLE_EQ(d.tw, 0.0);
  EXPECT_DOUBLE_EQ(d.th, 0.0);

  EXPECT_THROW(encode_delta({0, 0, 0, 2}, anchor), InvalidArgument);
  EXPECT_THROW(decode_delta({0, 0, 2, 0}, BoxDelta{}), InvalidArgument);
}

TEST(BoxDelta, RoundTrip) {
  Rng rng(31);
  for (int trial = 0; trial < 10000; ++trial) {
    const Box anchor = oracle::random_box(rng, -100, 100, 1, 60);
    const Box target = oracle::random_box(rng, -100, 100, 1, 60);
    const Box back = decode_delta(anchor, encode_delta(anchor, target));
    ASSERT_NEAR(back.x_min, target.x_min, 1e-9);
    ASSERT_NEAR(back.y_min, target.y_min, 1e-9);
    ASSERT_NEAR(back.x_max, target.x_max, 1e-9);
    ASSERT_NEAR(back.y_max, target.y_max, 1e-9);
  }
}

TEST(BoxDelta, DeltaSpaceL1) {
  const Box anchor{0, 0, 2, 2};
  EXPECT_EQ(delta_l1(anchor, {1, 1, 3, 3}, {1, 1, 3, 3}), 0.0);
  // tx, ty differ by 0.5 each; sizes equal.
  EXPECT_DOUBLE_EQ(delta_l1(anchor, {0, 0, 2, 2}, {1, 1, 3, 3}), 0.25);
}

TEST(Nms, Examples) {
  const std::vector<ScoredBox> single{{{0, 0, 1, 1}, 0.3}};
  EXPECT_EQ(nms(single), (std::vector<std::size_t>{0}));

  const std::vector<ScoredBox> dup{{{0, 0, 4, 4}, 0.8}, {{0, 0, 4, 4}, 0.9}};
  EXPECT_EQ(nms(dup, 0.7), (std::vector<std::size_t>{1}));

  // IoU exactly 0.5 (inter 4, union 8) stays below 0.7.
  const std::vector<ScoredBox> half{{{0, 0, 2, 3}, 0.9}, {{0, 1, 2, 4}, 0.8}};
  ASSERT_DOUBLE_EQ(iou(half[0].box, half[1].box), 0.5);
  EXPECT_EQ(nms(half, 0.7), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(nms(half, 0.5), (std::vector<std::size_t>{0, 1}));  // strict comparison
  EXPECT_EQ(nms(half, 0.49), (std::vector<std::size_t>{0}));

  EXPECT_TRUE(nms(std::vector<ScoredBox>{}).empty());
}

TEST(Nms, TiesBreakByIndex) {
  const std::vector<ScoredBox> tied{{{0, 0, 1, 1}, 0.5}, {{0, 0, 1, 1}, 0.5}, {{5, 5, 6, 6}, 0.5}};
  EXPECT_EQ(nms(tied, 0.5), (std::vector<std::size_t>{0, 2}));
}

TEST(Nms, ArgumentErrors) {
  const std::vector<ScoredBox> one{{{0, 0, 1, 1}, 0.3}};
  EXPECT_THROW(nms(one, 0.0), InvalidArgument);
  EXPECT_THROW(nms(one, 1.5), InvalidArgument);
  EXPECT_THROW(nms(one, 0.5, 0), InvalidArgument);
}

std::vector<ScoredBox> random_candidates(Rng& rng, std::size_t n) {
  std::vector<ScoredBox> c;
  for (std::size_t i = 0; i < n; ++i) {
    Box b = oracle::random_box(rng, 0, 100, 2, 30);
    // Some exact duplicates and some shared scores.
    if (i > 0 && rng.bernoulli(0.1)) b = c[rng.below(i)].box;
    const double score = rng.bernoulli(0.1) ? 0.5 : rng.uniform();
    c.push_back({b, score});
  }
  return c;
}

TEST(NmsProperties, MatchesBruteForceAndIsIdempotent) {
  Rng rng(41);
  for (double threshold : {0.3, 0.5, 0.7, 0.9}) {
    for (int trial = 0; trial < 250; ++trial) {
      const std::size_t n = rng.below(201);
      const auto cand = random_candidates(rng, n);
      const std::size_t max_keep = rng.bernoulli(0.2) ? 1 + rng.below(10) : 1000;
      std::vector<Box> boxes;
      std::vector<double> scores;
      for (const auto& c : cand) {
        boxes.push_back(c.box);
        scores.push_back(c.score);
      }
      const auto kept = nms(cand, threshold, max_keep);
      ASSERT_EQ(kept, oracle::brute_force_nms(boxes, scores, threshold, max_keep));
      ASSERT_LE(kept.size(), max_keep);

      std::vector<ScoredBox> survivors;
      for (auto i : kept) survivors.push_back(cand[i]);
      std::vector<std::size_t> identity(survivors.size());
      for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
      ASSERT_EQ(nms(survivors, threshold, max_keep), identity);
      for (std::size_t i = 0; i < survivors.size(); ++i) {
        for (std::size_t j = i + 1; j < survivors.size(); ++j) {
          ASSERT_LE(iou_or_zero(survivors[i].box, survivors[j].box), threshold);
        }
      }
    }
  }
}

TEST(NmsProperties, ThresholdOneRemovesOnlyExactDuplicates) {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cand = random_candidates(rng, 60);
    const auto kept = nms(cand, 1.0, 1000);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      bool seen = false;
      for (std::size_t j = 0; j < i; ++j) seen = seen || cand[j].box == cand[i].box;
      distinct += !seen;
    }
    EXPECT_EQ(kept.size(), cand.size());  // IoU never exceeds 1
    EXPECT_GE(kept.size(), distinct);
  }
}

TEST(AssignProposals, Examples) {
  const std::vector<Box> gts{{1, 1, 3, 3}, {0, 0, 2, 3}};
  const std::vector<Box> proposals{{0, 0, 2, 3}, {0, 0, 2, 2}, {10, 10, 11, 11}};
  const auto a = assign_proposals(proposals, gts, 0.5);
  EXPECT_TRUE(a[0].positive);
  EXPECT_EQ(a[0].max_iou, 1.0);
  EXPECT_EQ(a[0].gt_index, 1u);

  EXPECT_TRUE(a[1].positive);
  EXPECT_EQ(a[1].gt_index, 1u);
  EXPECT_NEAR(a[1].max_iou, 2.0 / 3.0, 1e-12);

  EXPECT_FALSE(a[2].positive);
  EXPECT_EQ(a[2].max_iou, 0.0);
}

TEST(AssignProposals, ThresholdAndTies) {
  // IoU 0.4: inter 4, union 10.
  const std::vector<Box> gt{{0, 0, 10, 1}};
  const std::vector<Box> prop{{0, 0, 4, 1}};
  ASSERT_NEAR(iou(gt[0], prop[0]), 0.4, 1e-12);
  EXPECT_FALSE(assign_proposals(prop, gt, 0.5)[0].positive);

  const std::vector<Box> twins{{0, 0, 2, 2}, {0, 0, 2, 2}};
  const std::vector<Box> p{{0, 0, 2, 2}};
  EXPECT_EQ(assign_proposals(p, twins)[0].gt_index, 0u);

  const auto none = assign_proposals(p, std::vector<Box>{});
  EXPECT_FALSE(none[0].positive);
  EXPECT_FALSE(none[0].gt_index.has_value());

  EXPECT_THROW(assign_proposals(p, twins, 1.0), InvalidArgument);
}

}  // namespace
}  // namespace detgeom
