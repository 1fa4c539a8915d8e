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

#include "detgeom/augmentation.hpp"
#include "detgeom/dataset.hpp"
#include "detgeom/errors.hpp"
#include "detgeom/evaluation.hpp"
#include "detgeom/geometry.hpp"
#include "detgeom/losses.hpp"
#include "detgeom/proposals.hpp"
#include "detgeom/regression_lab.hpp"
#include "detgeom/report.hpp"
#include "detgeom/split.hpp"
