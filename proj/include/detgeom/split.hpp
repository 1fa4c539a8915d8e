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

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "detgeom/dataset.hpp"
#include "detgeom/errors.hpp"
#include "detgeom/random.hpp"

namespace detgeom {

struct SplitSpec {
  double train_frac = 0.5335;
  double val_frac = 0.2178;
  double test_frac = 0.2487;
  std::uint64_t seed = 0;

  void validate() const {
    for (double f : {train_frac, val_frac, test_frac}) {
      if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("split fractions must lie in [0, 1]");
    }
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
      throw InvalidArgument("split fractions must sum to 1");
    }
  }
};

struct DatasetSplit {
  std::vector<ImageId> train;
  std::vector<ImageId> val;
  std::vector<ImageId> test;
};

// Seeded shuffle, then val and test take round(n * frac) ids each and train
// takes the remainder.
inline DatasetSplit split_dataset(std::span<const ImageId> ids, const SplitSpec& spec) {
  spec.validate();
  std::vector<ImageId> shuffled(ids.begin(), ids.end());
  Rng rng(spec.seed);
  rng.shuffle(std::span<ImageId>(shuffled));

  const std::size_t n = shuffled.size();
  std::size_t n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val_frac));
  std::size_t n_test =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test_frac));
  n_val = std::min(n_val, n);
  n_test = std::min(n_test, n - n_val);

  DatasetSplit s;
  const auto begin = shuffled.begin();
  const auto n_train = static_cast<std::ptrdiff_t>(n - n_val - n_test);
  s.train.assign(begin, begin + n_train);
  s.val.assign(begin + n_train, begin + n_train + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(begin + n_train + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
  return s;
}

inline DatasetSplit split_dataset(const DatasetManifest& manifest, const SplitSpec& spec) {
  const auto ids = manifest.image_ids();
  return split_dataset(std::span<const ImageId>(ids), spec);
}

}  // namespace detgeom
