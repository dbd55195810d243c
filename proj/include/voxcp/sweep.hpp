/*
 * Copyright 2026 The voxcp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Geometric IoU as a function of the rare-class occupied recall the gate is
// calibrated for.

#ifndef VOXCP_SWEEP_HPP_
#define VOXCP_SWEEP_HPP_

#include <span>
#include <vector>

#include "voxcp/conformal.hpp"
#include "voxcp/error.hpp"
#include "voxcp/metrics.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

struct SweepRow {
  double target = 0.0;
  Ratio recall;
  Ratio iou;
};

// Gate with alpha_o = 1 - target for the rare class. A target of 0 gives
// q = -inf, a gate that passes nothing.
inline GeometricGate GateForRecall(const CalibrationSet& cal, ClassId rare,
                                   ScoreKind kind, double epsilon,
                                   double target) {
  if (target <= 0.0) {
    GeometricGate gate{kind, epsilon, {rare},
                       ClassTable<double>(cal.num_classes(), kInf)};
    gate.q[rare] = -kInf;
    return gate;
  }
  ClassTable<double> alpha_o(cal.num_classes(), 0.5);
  alpha_o[rare] = 1.0 - target;
  return CalibrateGate(cal, {rare}, alpha_o, kind, epsilon);
}

// Calibrates one gate per target on `cal` and scores it on the voxels in
// `test` only. Targets must be strictly increasing within [0, 1).
inline std::vector<SweepRow> RecallIouSweep(
    const SoftmaxGrid& grid, const LabelGrid& gt, const CalibrationSet& cal,
    std::span<const std::size_t> test, ClassId rare, ScoreKind kind,
    double epsilon, std::span<const double> targets) {
  if (grid.voxel_count() != gt.labels.size()) {
    throw ValidationError("sweep: softmax grid and labels differ in size");
  }
  if (rare < 2 || rare > gt.num_classes) {
    throw ConfigError("rare_classes", "sweep needs one occupied rare class");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] >= 0.0 && targets[i] < 1.0)) {
      throw ConfigError("targets", "recall targets must lie in [0, 1)");
    }
    if (i > 0 && !(targets[i] > targets[i - 1])) {
      throw ConfigError("targets", "recall targets must be strictly increasing");
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(targets.size());
  for (double target : targets) {
    const GeometricGate gate = GateForRecall(cal, rare, kind, epsilon, target);
    std::size_t tp = 0, fp = 0, fn = 0, rare_hit = 0, rare_total = 0;
    for (std::size_t v : test) {
      const bool p = gate.Passes(grid.at(v));
      const ClassId y = gt.labels[v];
      const bool g = y != kEmptyClass;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
      if (y == rare) {
        ++rare_total;
        rare_hit += p;
      }
    }
    rows.push_back({target, SafeRatio(rare_hit, rare_total),
                    SafeRatio(tp, tp + fp + fn)});
  }
  return rows;
}

}  // namespace voxcp

#endif  // VOXCP_SWEEP_HPP_
