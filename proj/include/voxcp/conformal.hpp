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

// Split conformal prediction for voxel classifiers.
//
// Three calibrators share one quantile rule (the ceil((N+1)(1-alpha))-th
// smallest calibration score):
//
//  * SCP   - one quantile over all records, marginal coverage 1 - alpha.
//  * CCCP  - one quantile per true class, class-conditional coverage.
//  * HCP   - hierarchical: an occupancy gate calibrated on a set of rare
//            classes with a KL score against the "occupied" reference
//            O = (eps, 1, ..., 1), followed by per-class semantic quantiles
//            computed only over records that pass the gate. The per-class
//            error budget is split so that
//                (1 - alpha_s^y)(1 - alpha_o^y) = 1 - alpha^y,
//            which makes the composed set cover class y with probability
//            at least 1 - alpha^y.
//
// Class ids are 1-based; class 1 is empty and never appears in an HCP set.

#ifndef VOXCP_CONFORMAL_HPP_
#define VOXCP_CONFORMAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "voxcp/error.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense per-class table indexed by class id 1..M.
template <typename T>
class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(int num_classes, T fill = T{})
      : values_(static_cast<std::size_t>(num_classes), fill) {}

  int num_classes() const { return static_cast<int>(values_.size()); }
  T& operator[](ClassId y) { return values_[static_cast<std::size_t>(y - 1)]; }
  const T& operator[](ClassId y) const {
    return values_[static_cast<std::size_t>(y - 1)];
  }
  bool operator==(const ClassTable&) const = default;

 private:
  std::vector<T> values_;
};

// Sorted list of class ids.
struct PredictionSet {
  std::vector<ClassId> classes;

  bool contains(ClassId y) const {
    return std::binary_search(classes.begin(), classes.end(), y);
  }
  std::size_t size() const { return classes.size(); }
  bool empty() const { return classes.empty(); }
  bool operator==(const PredictionSet&) const = default;
};

// (softmax vector, true label) records, stored flat.
class CalibrationSet {
 public:
  explicit CalibrationSet(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 2) throw ValidationError("calibration: need >= 2 classes");
  }

  void Add(std::span<const float> probs, ClassId label) {
    if (static_cast<int>(probs.size()) != num_classes_) {
      throw ValidationError("calibration: vector length differs from M");
    }
    if (label < 1 || label > num_classes_) {
      throw ValidationError("calibration: label out of range");
    }
    SoftmaxGrid::ValidateVector(probs);
    probs_.insert(probs_.end(), probs.begin(), probs.end());
    labels_.push_back(static_cast<std::uint16_t>(label));
  }

  int num_classes() const { return num_classes_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::span<const float> probs(std::size_t i) const {
    return {probs_.data() + i * num_classes_,
            static_cast<std::size_t>(num_classes_)};
  }
  ClassId label(std::size_t i) const { return labels_[i]; }

  // Number of records per label.
  ClassTable<std::size_t> ClassCounts() const {
    ClassTable<std::size_t> counts(num_classes_, 0);
    for (auto y : labels_) ++counts[y];
    return counts;
  }

  static CalibrationSet FromGrid(const SoftmaxGrid& grid,
                                 const LabelGrid& labels,
                                 std::span<const std::size_t> voxels) {
    if (grid.num_classes() != labels.num_classes) {
      throw ValidationError("calibration: softmax and label class counts differ");
    }
    if (grid.voxel_count() != labels.labels.size()) {
      throw ValidationError("calibration: softmax and label dims differ");
    }
    CalibrationSet cal(grid.num_classes());
    for (std::size_t v : voxels) cal.Add(grid.at(v), labels.labels[v]);
    return cal;
  }

 private:
  int num_classes_;
  std::vector<float> probs_;
  std::vector<std::uint16_t> labels_;
};

// ---------------------------------------------------------------------------
// Score functions. Lower means better agreement.

// 1 - f_y.
inline double ScoreClass(std::span<const float> f, ClassId y) {
  if (y < 1 || y > static_cast<int>(f.size())) {
    throw DomainError("score_class: class out of range");
  }
  return 1.0 - static_cast<double>(f[y - 1]);
}

// 1 - sum_{y >= 2} f_y, i.e. the empty-class probability.
inline double ScoreOccupied(std::span<const float> f) {
  double occupied = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) occupied += f[i];
  return 1.0 - occupied;
}

// KL(f || O) with O = (eps, 1, ..., 1):
//   p_1 log(p_1 / eps) + sum_{i >= 2} p_i log p_i,   with 0 log 0 = 0.
// Small when mass sits on occupied classes, largest (log(1/eps)) for a
// one-hot empty vector. O is not normalized, so the value can be negative.
inline double ScoreKl(std::span<const float> f, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("score_kl: epsilon must lie in (0, 1)");
  }
  double s = 0.0;
  const double p1 = f[0];
  if (p1 > 0.0) s += p1 * std::log(p1 / epsilon);
  for (std::size_t i = 1; i < f.size(); ++i) {
    const double p = f[i];
    if (p > 0.0) s += p * std::log(p);
  }
  return s;
}

enum class ScoreKind { kKl, kClass, kOccupied };

inline const char* ToString(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kKl: return "kl";
    case ScoreKind::kClass: return "class";
    case ScoreKind::kOccupied: return "occupied";
  }
  return "?";
}

inline ScoreKind ScoreKindFromString(const std::string& s) {
  if (s == "kl") return ScoreKind::kKl;
  if (s == "class") return ScoreKind::kClass;
  if (s == "occupied") return ScoreKind::kOccupied;
  throw ConfigError("score", "unknown score kind '" + s + "'");
}

// Occupancy score of f for rare class y under the given score family. Only
// the class score depends on y.
inline double OccupancyScore(ScoreKind kind, std::span<const float> f,
                             ClassId y, double epsilon) {
  switch (kind) {
    case ScoreKind::kKl: return ScoreKl(f, epsilon);
    case ScoreKind::kClass: return ScoreClass(f, y);
    case ScoreKind::kOccupied: return ScoreOccupied(f);
  }
  return kInf;
}

// ---------------------------------------------------------------------------
// Quantile.

// Rank k = ceil((N + 1)(1 - alpha)). A relative slack of 1e-12 keeps values
// such as 100 * (1 - 0.9) = 10.000000000000002 from rounding up a whole rank.
inline std::int64_t ConformalRank(std::size_t n, double alpha) {
  const double x = static_cast<double>(n + 1) * (1.0 - alpha);
  return static_cast<std::int64_t>(std::ceil(x - 1e-12 * std::max(1.0, x)));
}

// k-th smallest score, or +inf when k > N (including N = 0).
inline double ConformalQuantile(std::vector<double> scores, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("conformal_quantile: alpha must lie in (0, 1)");
  }
  const std::int64_t k = ConformalRank(scores.size(), alpha);
  if (k > static_cast<std::int64_t>(scores.size())) return kInf;
  auto kth = scores.begin() + (k - 1);
  std::nth_element(scores.begin(), kth, scores.end());
  return *kth;
}

// ---------------------------------------------------------------------------
// Standard (marginal) CP.

inline double ScpCalibrate(const CalibrationSet& cal, double alpha) {
  std::vector<double> scores;
  scores.reserve(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    scores.push_back(ScoreClass(cal.probs(i), cal.label(i)));
  }
  return ConformalQuantile(std::move(scores), alpha);
}

// {y in 1..M : 1 - f_y <= q}.
inline PredictionSet ScpPredict(std::span<const float> f, double q) {
  PredictionSet set;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (1.0 - static_cast<double>(f[i]) <= q) {
      set.classes.push_back(static_cast<ClassId>(i + 1));
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Class-conditional CP.

// Per-class quantiles of 1 - f_y over records labeled y. Classes without
// records get +inf (always included).
inline ClassTable<double> CccpCalibrate(const CalibrationSet& cal,
                                        const ClassTable<double>& alpha) {
  const int m = cal.num_classes();
  if (alpha.num_classes() != m) {
    throw ValidationError("cccp: alpha table size differs from M");
  }
  std::vector<std::vector<double>> scores(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const ClassId y = cal.label(i);
    scores[y - 1].push_back(ScoreClass(cal.probs(i), y));
  }
  ClassTable<double> q(m, kInf);
  for (ClassId y = 1; y <= m; ++y) {
    q[y] = ConformalQuantile(std::move(scores[y - 1]), alpha[y]);
  }
  return q;
}

inline PredictionSet CccpPredict(std::span<const float> f,
                                 const ClassTable<double>& q) {
  if (q.num_classes() != static_cast<int>(f.size())) {
    throw ValidationError("cccp: model and vector class counts differ");
  }
  PredictionSet set;
  for (ClassId y = 1; y <= q.num_classes(); ++y) {
    if (1.0 - static_cast<double>(f[y - 1]) <= q[y]) set.classes.push_back(y);
  }
  return set;
}

// ---------------------------------------------------------------------------
// Hierarchical CP.

// alpha_s = 1 - (1 - alpha) / (1 - alpha_o), clamped to [0, 1). When the
// occupancy stage already spends the whole budget (alpha_o >= alpha) the
// semantic stage gets alpha_s = 0, i.e. an always-accept quantile.
inline double SplitAlpha(double alpha_target, double alpha_o) {
  if (alpha_o >= 1.0) return 0.0;
  const double raw = 1.0 - (1.0 - alpha_target) / (1.0 - alpha_o);
  return std::clamp(raw, 0.0, std::nextafter(1.0, 0.0));
}

struct HcpConfig {
  int num_classes = 0;
  std::vector<ClassId> rare_classes;
  // Occupancy error rate per rare class (other entries ignored).
  ClassTable<double> alpha_o;
  // Target error rate per occupied class 2..M (entry 1 ignored).
  ClassTable<double> alpha_target;
  double epsilon = 0.01;

  void Validate() const {
    if (num_classes < 2) throw ConfigError("num_classes", "must be >= 2");
    if (alpha_o.num_classes() != num_classes ||
        alpha_target.num_classes() != num_classes) {
      throw ConfigError("alpha", "rate tables must have one entry per class");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      throw ConfigError("epsilon", "must lie in (0, 1)");
    }
    if (rare_classes.empty()) {
      throw ConfigError("rare_classes", "at least one rare class is required");
    }
    for (ClassId y = 2; y <= num_classes; ++y) {
      if (!(alpha_target[y] > 0.0 && alpha_target[y] < 1.0)) {
        throw ConfigError("alpha_target",
                          "class " + std::to_string(y) + " rate not in (0, 1)");
      }
    }
    for (ClassId y : rare_classes) {
      if (y < 2 || y > num_classes) {
        throw ConfigError("rare_classes",
                          "class " + std::to_string(y) + " is not an occupied class");
      }
      if (!(alpha_o[y] > 0.0 && alpha_o[y] < 1.0)) {
        throw ConfigError("alpha_o",
                          "class " + std::to_string(y) + " rate not in (0, 1)");
      }
      if (!(alpha_o[y] < alpha_target[y])) {
        throw ConfigError("alpha_o", "class " + std::to_string(y) +
                                         " occupancy rate must be below its "
                                         "target rate");
      }
    }
  }

  bool is_rare(ClassId y) const {
    return std::find(rare_classes.begin(), rare_classes.end(), y) !=
           rare_classes.end();
  }
};

// Occupancy gate: a vector is "occupied" iff some rare class y has
// score(f, y) <= q[y]. With the KL score this is a single threshold at
// max_y q[y], since the KL score does not depend on y.
struct GeometricGate {
  ScoreKind kind = ScoreKind::kKl;
  double epsilon = 0.01;
  std::vector<ClassId> rare_classes;
  ClassTable<double> q;

  bool Passes(std::span<const float> f) const {
    if (kind == ScoreKind::kClass) {
      for (ClassId y : rare_classes) {
        if (ScoreClass(f, y) <= q[y]) return true;
      }
      return false;
    }
    return OccupancyScore(kind, f, kEmptyClass, epsilon) <= Threshold();
  }

  // max over rare classes of q; -inf when there are none.
  double Threshold() const {
    double t = -kInf;
    for (ClassId y : rare_classes) t = std::max(t, q[y]);
    return t;
  }
};

// Per rare class y, the conformal quantile of the occupancy score over
// calibration records labeled y at rate alpha_o[y].
inline GeometricGate CalibrateGate(const CalibrationSet& cal,
                                   const std::vector<ClassId>& rare_classes,
                                   const ClassTable<double>& alpha_o,
                                   ScoreKind kind, double epsilon) {
  GeometricGate gate{kind, epsilon, rare_classes,
                     ClassTable<double>(cal.num_classes(), kInf)};
  for (ClassId y : rare_classes) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < cal.size(); ++i) {
      if (cal.label(i) == y) {
        scores.push_back(OccupancyScore(kind, cal.probs(i), y, epsilon));
      }
    }
    gate.q[y] = ConformalQuantile(std::move(scores), alpha_o[y]);
  }
  return gate;
}

struct HcpModel {
  int num_classes = 0;
  double epsilon = 0.01;
  std::vector<ClassId> rare_classes;
  // Occupancy quantile per rare class; NaN elsewhere.
  ClassTable<double> q_o;
  // Occupancy error rate for every occupied class: configured for rare
  // classes, empirical 1 - tp/(tp + fn) on calibration data otherwise.
  ClassTable<double> alpha_o;
  ClassTable<double> alpha_s;
  ClassTable<double> q_s;
  ClassTable<double> alpha_target;
  // Calibration bookkeeping: records per label, and how many passed the gate.
  ClassTable<std::size_t> calibration_count;
  ClassTable<std::size_t> gate_pass_count;

  // Single KL threshold equivalent to the per-rare-class test.
  double GateThreshold() const {
    double t = -kInf;
    for (ClassId y : rare_classes) t = std::max(t, q_o[y]);
    return t;
  }

  bool GatePasses(std::span<const float> f) const {
    return ScoreKl(f, epsilon) <= GateThreshold();
  }
};

inline HcpModel HcpCalibrate(const CalibrationSet& cal, const HcpConfig& cfg) {
  cfg.Validate();
  if (cal.num_classes() != cfg.num_classes) {
    throw ValidationError("hcp: calibration and config class counts differ");
  }
  if (cal.empty()) throw ValidationError("hcp: empty calibration set");
  const int m = cfg.num_classes;

  HcpModel model;
  model.num_classes = m;
  model.epsilon = cfg.epsilon;
  model.rare_classes = cfg.rare_classes;
  std::sort(model.rare_classes.begin(), model.rare_classes.end());
  model.alpha_target = cfg.alpha_target;
  model.q_o = ClassTable<double>(m, std::numeric_limits<double>::quiet_NaN());
  model.alpha_o = ClassTable<double>(m, 0.0);
  model.alpha_s = ClassTable<double>(m, 0.0);
  model.q_s = ClassTable<double>(m, kInf);
  model.calibration_count = cal.ClassCounts();
  model.gate_pass_count = ClassTable<std::size_t>(m, 0);

  // Geometric level.
  const GeometricGate gate = CalibrateGate(cal, model.rare_classes, cfg.alpha_o,
                                           ScoreKind::kKl, cfg.epsilon);
  for (ClassId y : model.rare_classes) model.q_o[y] = gate.q[y];
  const double threshold = model.GateThreshold();

  // Semantic level.
  std::vector<std::vector<double>> occupied_scores(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < cal.size(); ++i) {
    const ClassId y = cal.label(i);
    if (y == kEmptyClass) continue;
    if (ScoreKl(cal.probs(i), cfg.epsilon) <= threshold) {
      ++model.gate_pass_count[y];
      occupied_scores[y - 1].push_back(ScoreClass(cal.probs(i), y));
    }
  }
  for (ClassId y = 2; y <= m; ++y) {
    const std::size_t total = model.calibration_count[y];
    if (total == 0) {
      model.alpha_o[y] = 1.0;
    } else if (cfg.is_rare(y)) {
      model.alpha_o[y] = cfg.alpha_o[y];
    } else {
      model.alpha_o[y] = 1.0 - static_cast<double>(model.gate_pass_count[y]) /
                                   static_cast<double>(total);
    }
    model.alpha_s[y] = SplitAlpha(cfg.alpha_target[y], model.alpha_o[y]);
    if (total == 0 || model.alpha_s[y] <= 0.0) {
      model.q_s[y] = kInf;
    } else {
      model.q_s[y] =
          ConformalQuantile(std::move(occupied_scores[y - 1]), model.alpha_s[y]);
    }
  }
  return model;
}

// Empty set when the occupancy gate rejects f; otherwise
// {y in 2..M : 1 - f_y <= q_s[y]}.
inline PredictionSet HcpPredict(std::span<const float> f, const HcpModel& model) {
  PredictionSet set;
  if (!model.GatePasses(f)) return set;
  for (ClassId y = 2; y <= model.num_classes; ++y) {
    if (1.0 - static_cast<double>(f[y - 1]) <= model.q_s[y]) {
      set.classes.push_back(y);
    }
  }
  return set;
}

struct HcpGridPrediction {
  BinaryOccupancyGrid occupancy;
  std::vector<PredictionSet> sets;
};

inline HcpGridPrediction HcpGridPredict(const SoftmaxGrid& grid,
                                        const HcpModel& model) {
  if (grid.num_classes() != model.num_classes) {
    throw ValidationError("hcp: grid and model class counts differ");
  }
  HcpGridPrediction out{
      BinaryOccupancyGrid{VoxelGrid<std::uint8_t>(grid.geometry(), 0)}, {}};
  out.sets.resize(grid.voxel_count());
  for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
    out.sets[v] = HcpPredict(grid.at(v), model);
    out.occupancy.values[v] = model.GatePasses(grid.at(v)) ? 1 : 0;
  }
  return out;
}

}  // namespace voxcp

#endif  // VOXCP_CONFORMAL_HPP_
