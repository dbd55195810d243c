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

// Evaluation metrics. Ratios with a zero denominator are std::nullopt, never
// 0 or 1, so that means over classes skip them.

#ifndef VOXCP_METRICS_HPP_
#define VOXCP_METRICS_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "voxcp/conformal.hpp"
#include "voxcp/error.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

using Ratio = std::optional<double>;

inline Ratio SafeRatio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

struct GeometryMetrics {
  Ratio iou;
  Ratio precision;
  Ratio recall;
};

// Occupied/empty agreement, ignoring semantic labels (gt occupied = label >= 2).
inline GeometryMetrics ComputeGeometryMetrics(const BinaryOccupancyGrid& pred,
                                              const LabelGrid& gt) {
  if (pred.values.dims() != gt.labels.dims()) {
    throw ValidationError("geometry metrics: grid dims differ");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool g = gt.labels[i] != kEmptyClass;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return {SafeRatio(tp, tp + fp + fn), SafeRatio(tp, tp + fp),
          SafeRatio(tp, tp + fn)};
}

struct SemanticMetrics {
  ClassTable<Ratio> per_class_iou;
  Ratio miou;
};

// Per occupied class IoU and their mean over classes present in either grid.
inline SemanticMetrics ComputeSemanticMiou(const LabelGrid& pred,
                                           const LabelGrid& gt) {
  if (pred.labels.dims() != gt.labels.dims()) {
    throw ValidationError("semantic metrics: grid dims differ");
  }
  if (pred.num_classes != gt.num_classes) {
    throw ValidationError("semantic metrics: class counts differ");
  }
  const int m = gt.num_classes;
  ClassTable<std::size_t> tp(m, 0), fp(m, 0), fn(m, 0);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const ClassId p = pred.labels[i];
    const ClassId g = gt.labels[i];
    if (p == g) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  SemanticMetrics out{ClassTable<Ratio>(m), std::nullopt};
  double sum = 0.0;
  int present = 0;
  for (ClassId y = 2; y <= m; ++y) {
    out.per_class_iou[y] = SafeRatio(tp[y], tp[y] + fp[y] + fn[y]);
    if (out.per_class_iou[y]) {
      sum += *out.per_class_iou[y];
      ++present;
    }
  }
  if (present > 0) out.miou = sum / present;
  return out;
}

// Fraction of gt voxels labeled y that the prediction marks occupied.
inline Ratio OccupiedRecall(const BinaryOccupancyGrid& pred,
                            const LabelGrid& gt, ClassId y) {
  if (y == kEmptyClass) {
    throw DomainError("occupied recall is undefined for the empty class");
  }
  if (y < 1 || y > gt.num_classes) throw DomainError("occupied recall: bad class");
  if (pred.values.dims() != gt.labels.dims()) {
    throw ValidationError("occupied recall: grid dims differ");
  }
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    if (gt.labels[i] != y) continue;
    ++total;
    hit += pred.values[i] != 0;
  }
  return SafeRatio(hit, total);
}

// Empirical P(Y in C(X) | Y = y) for every occupied class.
inline ClassTable<Ratio> ClassCoverage(std::span<const PredictionSet> sets,
                                       const LabelGrid& gt) {
  if (sets.size() != gt.labels.size()) {
    throw ValidationError("coverage: set count differs from voxel count");
  }
  const int m = gt.num_classes;
  ClassTable<std::size_t> hit(m, 0), total(m, 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const ClassId y = gt.labels[i];
    ++total[y];
    hit[y] += sets[i].contains(y);
  }
  ClassTable<Ratio> cov(m);
  for (ClassId y = 2; y <= m; ++y) cov[y] = SafeRatio(hit[y], total[y]);
  return cov;
}

// Mean over occupied classes present in gt of |c_y - (1 - alpha_y)|.
inline Ratio CovGap(std::span<const PredictionSet> sets, const LabelGrid& gt,
                    const ClassTable<double>& alpha_target) {
  const ClassTable<Ratio> cov = ClassCoverage(sets, gt);
  double sum = 0.0;
  int present = 0;
  for (ClassId y = 2; y <= gt.num_classes; ++y) {
    if (!cov[y]) continue;
    sum += std::abs(*cov[y] - (1.0 - alpha_target[y]));
    ++present;
  }
  if (present == 0) return std::nullopt;
  return sum / present;
}

// Mean number of occupied classes per set; the empty class is never counted.
inline double AvgSize(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw DomainError("avg_size: no test voxels");
  std::size_t total = 0;
  for (const auto& s : sets) {
    for (ClassId y : s.classes) total += y != kEmptyClass;
  }
  return static_cast<double>(total) / static_cast<double>(sets.size());
}

struct MetricsReport {
  GeometryMetrics geometry;
  SemanticMetrics semantic;
  ClassTable<Ratio> occupied_recall;
  ClassTable<Ratio> coverage;
  ClassTable<double> alpha_target;
  ClassTable<std::size_t> class_count;
  Ratio cov_gap;
  double avg_size = 0.0;
};

}  // namespace voxcp

#endif  // VOXCP_METRICS_HPP_
