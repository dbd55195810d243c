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

// End-to-end commands behind the voxcp tool: simulate, project, calibrate,
// evaluate and sweep. Each returns a JSON summary plus any statistical
// warnings; numeric results go to files.

#ifndef VOXCP_PIPELINE_HPP_
#define VOXCP_PIPELINE_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "voxcp/config.hpp"
#include "voxcp/conformal.hpp"
#include "voxcp/container.hpp"
#include "voxcp/error.hpp"
#include "voxcp/metrics.hpp"
#include "voxcp/projection.hpp"
#include "voxcp/random.hpp"
#include "voxcp/sweep.hpp"
#include "voxcp/synth.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

struct CommandResult {
  nlohmann::json summary;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Calibration / test split.

struct VoxelSplit {
  std::vector<std::size_t> calibration;
  std::vector<std::size_t> test;
};

// Voxel v goes to calibration when u < cal_fraction and to test when
// cal_fraction <= u < cal_fraction + test_fraction, with
// u = HashUniform(seed, v). The assignment of a voxel never depends on any
// other voxel.
inline VoxelSplit SplitVoxels(std::size_t count, std::uint64_t seed,
                              double cal_fraction, double test_fraction) {
  if (!(cal_fraction > 0.0 && cal_fraction < 1.0)) {
    throw ConfigError("split", "calibration fraction must lie in (0, 1)");
  }
  if (!(test_fraction > 0.0 && cal_fraction + test_fraction <= 1.0)) {
    throw ConfigError("split", "test fraction must lie in (0, 1 - calibration]");
  }
  VoxelSplit split;
  for (std::size_t v = 0; v < count; ++v) {
    const double u = HashUniform(seed, v);
    if (u < cal_fraction) {
      split.calibration.push_back(v);
    } else if (u < cal_fraction + test_fraction) {
      split.test.push_back(v);
    }
  }
  return split;
}

inline VoxelSplit SplitVoxels(std::size_t count, std::uint64_t seed,
                              double cal_fraction) {
  return SplitVoxels(count, seed, cal_fraction, 1.0 - cal_fraction);
}

// ---------------------------------------------------------------------------
// JSON helpers. Infinities are written as "inf" / "-inf" and NaN as null.

inline nlohmann::json NumberToJson(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double NumberFromJson(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw FormatError("model: bad number '" + s + "'");
  }
  return j.get<double>();
}

inline nlohmann::json RatioToJson(const Ratio& r) {
  return r ? nlohmann::json(*r) : nlohmann::json(nullptr);
}

template <typename T>
nlohmann::json TableToJson(const ClassTable<T>& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (ClassId y = 1; y <= t.num_classes(); ++y) {
    if constexpr (std::is_floating_point_v<T>) {
      arr.push_back(NumberToJson(t[y]));
    } else {
      arr.push_back(t[y]);
    }
  }
  return arr;
}

inline ClassTable<double> TableFromJson(const nlohmann::json& j, int m,
                                        const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != m) {
    throw FormatError(std::string("model: ") + field +
                      " needs one entry per class");
  }
  ClassTable<double> t(m);
  for (ClassId y = 1; y <= m; ++y) t[y] = NumberFromJson(j[y - 1]);
  return t;
}

inline nlohmann::json NamedRatios(const ClassTable<Ratio>& t,
                                  const std::vector<std::string>& names) {
  nlohmann::json out = nlohmann::json::object();
  for (ClassId y = 2; y <= t.num_classes(); ++y) {
    out[names[y - 1]] = RatioToJson(t[y]);
  }
  return out;
}

inline void WriteTextFile(const std::filesystem::path& path,
                          const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move output into " + path.string());
}

inline std::string CsvNumber(const Ratio& r) {
  if (!r) return "";
  std::ostringstream s;
  s << std::setprecision(9) << *r;
  return s.str();
}

// ---------------------------------------------------------------------------
// Calibrated models.

enum class Method { kScp, kCccp, kHcp };

inline const char* ToString(Method m) {
  switch (m) {
    case Method::kScp: return "scp";
    case Method::kCccp: return "cccp";
    case Method::kHcp: return "hcp";
  }
  return "?";
}

inline Method MethodFromString(const std::string& s) {
  if (s == "scp") return Method::kScp;
  if (s == "cccp") return Method::kCccp;
  if (s == "hcp") return Method::kHcp;
  throw ConfigError("method", "expected scp, cccp or hcp, got '" + s + "'");
}

struct CalibratedModel {
  Method method = Method::kHcp;
  int num_classes = 0;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;
  double calibration_fraction = 0.3;
  std::size_t calibration_records = 0;
  // scp
  double alpha = 0.1;
  double q = kInf;
  // cccp
  ClassTable<double> class_alpha;
  ClassTable<double> class_q;
  // hcp
  HcpModel hcp;

  PredictionSet Predict(std::span<const float> f) const {
    switch (method) {
      case Method::kScp: return ScpPredict(f, q);
      case Method::kCccp: return CccpPredict(f, class_q);
      case Method::kHcp: return HcpPredict(f, hcp);
    }
    return {};
  }

  // Occupancy decision: the HCP gate, or the argmax for the baselines,
  // which have no geometric stage.
  bool Occupied(std::span<const float> f) const {
    if (method == Method::kHcp) return hcp.GatePasses(f);
    return std::max_element(f.begin(), f.end()) != f.begin();
  }
};

inline nlohmann::json ModelToJson(const CalibratedModel& m) {
  nlohmann::json j;
  j["method"] = ToString(m.method);
  j["num_classes"] = m.num_classes;
  j["class_names"] = m.class_names;
  j["split"] = {{"seed", m.seed}, {"calibration_fraction", m.calibration_fraction}};
  j["calibration_records"] = m.calibration_records;
  switch (m.method) {
    case Method::kScp:
      j["alpha"] = m.alpha;
      j["q"] = NumberToJson(m.q);
      break;
    case Method::kCccp:
      j["alpha"] = TableToJson(m.class_alpha);
      j["q"] = TableToJson(m.class_q);
      break;
    case Method::kHcp: {
      const HcpModel& h = m.hcp;
      j["epsilon"] = h.epsilon;
      j["rare_classes"] = h.rare_classes;
      j["q_o"] = TableToJson(h.q_o);
      j["alpha_o"] = TableToJson(h.alpha_o);
      j["alpha_s"] = TableToJson(h.alpha_s);
      j["q_s"] = TableToJson(h.q_s);
      j["alpha_target"] = TableToJson(h.alpha_target);
      j["calibration_count"] = TableToJson(h.calibration_count);
      j["gate_pass_count"] = TableToJson(h.gate_pass_count);
      break;
    }
  }
  return j;
}

inline CalibratedModel ModelFromJson(const nlohmann::json& j) {
  try {
    CalibratedModel m;
    m.method = MethodFromString(j.at("method").get<std::string>());
    m.num_classes = j.at("num_classes").get<int>();
    if (m.num_classes < 2) throw FormatError("model: num_classes < 2");
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (static_cast<int>(m.class_names.size()) != m.num_classes) {
      throw FormatError("model: class_names length differs from num_classes");
    }
    m.seed = j.at("split").at("seed").get<std::uint64_t>();
    m.calibration_fraction = j.at("split").at("calibration_fraction").get<double>();
    m.calibration_records = j.at("calibration_records").get<std::size_t>();
    const int n = m.num_classes;
    switch (m.method) {
      case Method::kScp:
        m.alpha = j.at("alpha").get<double>();
        m.q = NumberFromJson(j.at("q"));
        break;
      case Method::kCccp:
        m.class_alpha = TableFromJson(j.at("alpha"), n, "alpha");
        m.class_q = TableFromJson(j.at("q"), n, "q");
        break;
      case Method::kHcp: {
        HcpModel& h = m.hcp;
        h.num_classes = n;
        h.epsilon = j.at("epsilon").get<double>();
        h.rare_classes = j.at("rare_classes").get<std::vector<ClassId>>();
        h.q_o = TableFromJson(j.at("q_o"), n, "q_o");
        h.alpha_o = TableFromJson(j.at("alpha_o"), n, "alpha_o");
        h.alpha_s = TableFromJson(j.at("alpha_s"), n, "alpha_s");
        h.q_s = TableFromJson(j.at("q_s"), n, "q_s");
        h.alpha_target = TableFromJson(j.at("alpha_target"), n, "alpha_target");
        const auto counts = j.at("calibration_count").get<std::vector<std::size_t>>();
        const auto passes = j.at("gate_pass_count").get<std::vector<std::size_t>>();
        if (static_cast<int>(counts.size()) != n ||
            static_cast<int>(passes.size()) != n) {
          throw FormatError("model: count tables need one entry per class");
        }
        h.calibration_count = ClassTable<std::size_t>(n);
        h.gate_pass_count = ClassTable<std::size_t>(n);
        for (ClassId y = 1; y <= n; ++y) {
          h.calibration_count[y] = counts[y - 1];
          h.gate_pass_count[y] = passes[y - 1];
        }
        for (ClassId y : h.rare_classes) {
          if (y < 2 || y > n) throw FormatError("model: rare class out of range");
        }
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

inline CalibratedModel ReadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return ModelFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands.

inline std::vector<std::string> ClassNamesFor(const PipelineConfig& cfg,
                                              int num_classes) {
  if (cfg.num_classes() == num_classes) return cfg.scene.class_names;
  std::vector<std::string> names;
  for (int y = 1; y <= num_classes; ++y) names.push_back("class" + std::to_string(y));
  return names;
}

inline CommandResult CmdSimulate(const PipelineConfig& cfg) {
  cfg.Validate();
  const StreamSeeds seeds = StreamSeeds::From(cfg.seed);
  const LabelGrid world = GenerateScene(cfg.scene);
  const RenderedDepth depth = RenderDepth(world, cfg.camera, cfg.noise, seeds.depth);
  const SoftmaxGrid softmax = SynthClassifier(world, cfg.classifier);

  WriteGrid(world, cfg.paths.labels);
  WriteGrid(depth.estimate, cfg.paths.depth);
  WriteGrid(softmax, cfg.paths.softmax);

  CommandResult r;
  nlohmann::json fractions = nlohmann::json::object();
  const auto f = ClassFractions(world);
  for (std::size_t i = 0; i < f.size(); ++i) fractions[cfg.scene.class_names[i]] = f[i];
  r.summary = {{"command", "simulate"},
               {"seed", cfg.seed},
               {"class_fractions", fractions},
               {"valid_depth_pixels", depth.estimate.valid_count()},
               {"outputs",
                {{"labels", cfg.paths.labels.string()},
                 {"depth", cfg.paths.depth.string()},
                 {"softmax", cfg.paths.softmax.string()}}}};
  return r;
}

inline CommandResult CmdProject(const PipelineConfig& cfg, bool binary,
                                int threads) {
  const DepthEstimate est = ReadGridAs<DepthEstimate>(cfg.paths.depth);
  const GridGeometry& geom = cfg.scene.geometry;
  CommandResult r;
  std::size_t occupied = 0;
  double mass = 0.0;
  if (binary) {
    const BinaryOccupancyGrid g = BuildBinaryGrid(est, cfg.camera, geom);
    for (auto x : g.values.values()) occupied += x != 0;
    WriteGrid(g, cfg.paths.grid);
  } else {
    if (!est.has_sigma()) {
      throw DomainError(cfg.paths.depth.string() +
                        " has no sigma plane; rerun with --binary");
    }
    const ProbOccupancyGrid g =
        BuildProbGrid(est, cfg.camera, geom, ProjectionOptions{threads, false});
    for (float x : g.values.values()) {
      occupied += x >= 0.5f;
      mass += x;
    }
    WriteGrid(g, cfg.paths.grid);
  }
  r.summary = {{"command", "project"},
               {"mode", binary ? "binary" : "probabilistic"},
               {"voxels_at_least_half", occupied},
               {"total_mass", mass},
               {"outputs", {{"grid", cfg.paths.grid.string()}}}};
  if (occupied == 0 && mass == 0.0) {
    r.warnings.push_back("projection is empty: no ray reaches the grid");
  }
  return r;
}

inline void CheckSameShape(const SoftmaxGrid& f, const LabelGrid& gt) {
  if (f.voxel_count() != gt.labels.size() || f.num_classes() != gt.num_classes) {
    throw ValidationError("softmax and label grids differ in shape or class count");
  }
}

inline CalibrationSet CalibrationFor(const SoftmaxGrid& f, const LabelGrid& gt,
                                     const VoxelSplit& split) {
  return CalibrationSet::FromGrid(f, gt, split.calibration);
}

inline CommandResult CmdCalibrate(const PipelineConfig& cfg, Method method) {
  const SoftmaxGrid f = ReadGridAs<SoftmaxGrid>(cfg.paths.softmax);
  const LabelGrid gt = ReadGridAs<LabelGrid>(cfg.paths.labels);
  CheckSameShape(f, gt);
  if (gt.num_classes != cfg.num_classes()) {
    throw ValidationError("grids have " + std::to_string(gt.num_classes) +
                          " classes, config has " + std::to_string(cfg.num_classes()));
  }
  const std::uint64_t split_seed = StreamSeeds::From(cfg.seed).split;
  const VoxelSplit split =
      SplitVoxels(f.voxel_count(), split_seed, cfg.calibration_fraction);
  const CalibrationSet cal = CalibrationFor(f, gt, split);

  CalibratedModel m;
  m.method = method;
  m.num_classes = gt.num_classes;
  m.class_names = cfg.scene.class_names;
  m.seed = split_seed;
  m.calibration_fraction = cfg.calibration_fraction;
  m.calibration_records = cal.size();

  CommandResult r;
  const auto counts = cal.ClassCounts();
  for (ClassId y = 2; y <= m.num_classes; ++y) {
    if (counts[y] == 0) {
      const bool rare = method == Method::kHcp && cfg.hcp.is_rare(y);
      r.warnings.push_back("class '" + m.class_names[y - 1] +
                           "' has no calibration records" +
                           (rare ? "; q_o recorded as +inf" : ""));
    }
  }
  switch (method) {
    case Method::kScp:
      m.alpha = cfg.scp_alpha;
      m.q = ScpCalibrate(cal, m.alpha);
      break;
    case Method::kCccp:
      m.class_alpha = cfg.hcp.alpha_target;
      m.class_alpha[kEmptyClass] = cfg.scp_alpha;
      m.class_q = CccpCalibrate(cal, m.class_alpha);
      break;
    case Method::kHcp:
      m.hcp = HcpCalibrate(cal, cfg.hcp);
      break;
  }
  WriteTextFile(cfg.paths.model, ModelToJson(m).dump(2) + "\n");
  r.summary = {{"command", "calibrate"},
               {"method", ToString(method)},
               {"calibration_records", cal.size()},
               {"outputs", {{"model", cfg.paths.model.string()}}}};
  if (method == Method::kHcp) {
    r.summary["gate_threshold"] = NumberToJson(m.hcp.GateThreshold());
  } else if (method == Method::kScp) {
    r.summary["q"] = NumberToJson(m.q);
  }
  return r;
}

// Labels of `gt` at `voxels`, packed into a U x 1 x 1 grid.
inline LabelGrid SubsetLabels(const LabelGrid& gt,
                              std::span<const std::size_t> voxels) {
  GridGeometry g{{voxels.size(), 1, 1}, 1.0, {0.0, 0.0, 0.0}};
  LabelGrid out{VoxelGrid<std::uint16_t>(g, kEmptyClass), gt.num_classes};
  for (std::size_t i = 0; i < voxels.size(); ++i) out.labels[i] = gt.labels[voxels[i]];
  return out;
}

struct Evaluation {
  MetricsReport report;
  std::size_t test_voxels = 0;
};

// Applies the model to the test voxels only.
inline Evaluation EvaluateModel(const CalibratedModel& m, const SoftmaxGrid& f,
                                const LabelGrid& gt,
                                std::span<const std::size_t> test) {
  CheckSameShape(f, gt);
  if (gt.num_classes != m.num_classes) {
    throw ValidationError("model has " + std::to_string(m.num_classes) +
                          " classes, grids have " + std::to_string(gt.num_classes));
  }
  const int n = m.num_classes;
  const LabelGrid truth = SubsetLabels(gt, test);
  GridGeometry g = truth.labels.geometry();
  BinaryOccupancyGrid occ{VoxelGrid<std::uint8_t>(g, 0)};
  LabelGrid pred{VoxelGrid<std::uint16_t>(g, kEmptyClass), n};
  std::vector<PredictionSet> sets(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto p = f.at(test[i]);
    sets[i] = m.Predict(p);
    if (m.Occupied(p)) {
      occ.values[i] = 1;
      pred.labels[i] = static_cast<std::uint16_t>(
          std::max_element(p.begin() + 1, p.end()) - p.begin() + 1);
    }
  }
  Evaluation e;
  e.test_voxels = test.size();
  MetricsReport& r = e.report;
  r.geometry = ComputeGeometryMetrics(occ, truth);
  r.semantic = ComputeSemanticMiou(pred, truth);
  r.occupied_recall = ClassTable<Ratio>(n);
  for (ClassId y = 2; y <= n; ++y) r.occupied_recall[y] = OccupiedRecall(occ, truth, y);
  r.coverage = ClassCoverage(sets, truth);
  r.alpha_target = m.method == Method::kHcp   ? m.hcp.alpha_target
                   : m.method == Method::kCccp ? m.class_alpha
                                               : ClassTable<double>(n, m.alpha);
  r.class_count = ClassTable<std::size_t>(n, 0);
  for (auto y : truth.labels.values()) ++r.class_count[y];
  r.cov_gap = CovGap(sets, truth, r.alpha_target);
  r.avg_size = test.empty() ? 0.0 : AvgSize(sets);
  return e;
}

inline nlohmann::json ReportToJson(const Evaluation& e,
                                   const std::vector<std::string>& names) {
  const MetricsReport& r = e.report;
  nlohmann::json target = nlohmann::json::object();
  nlohmann::json count = nlohmann::json::object();
  for (ClassId y = 2; y <= r.coverage.num_classes(); ++y) {
    target[names[y - 1]] = 1.0 - r.alpha_target[y];
    count[names[y - 1]] = r.class_count[y];
  }
  return {{"test_voxels", e.test_voxels},
          {"geometry",
           {{"iou", RatioToJson(r.geometry.iou)},
            {"precision", RatioToJson(r.geometry.precision)},
            {"recall", RatioToJson(r.geometry.recall)}}},
          {"semantic",
           {{"miou", RatioToJson(r.semantic.miou)},
            {"per_class_iou", NamedRatios(r.semantic.per_class_iou, names)}}},
          {"occupied_recall", NamedRatios(r.occupied_recall, names)},
          {"coverage", NamedRatios(r.coverage, names)},
          {"target_coverage", target},
          {"class_count", count},
          {"cov_gap", RatioToJson(r.cov_gap)},
          {"avg_size", r.avg_size}};
}

// One row per occupied class, then an aggregate row named "all".
inline std::string ReportToCsv(const Evaluation& e,
                               const std::vector<std::string>& names) {
  const MetricsReport& r = e.report;
  std::ostringstream out;
  out << "class,test_count,coverage,target_coverage,occupied_recall,"
         "semantic_iou,geometry_iou,miou,cov_gap,avg_size\n";
  for (ClassId y = 2; y <= r.coverage.num_classes(); ++y) {
    out << names[y - 1] << ',' << r.class_count[y] << ','
        << CsvNumber(r.coverage[y]) << ',' << CsvNumber(1.0 - r.alpha_target[y])
        << ',' << CsvNumber(r.occupied_recall[y]) << ','
        << CsvNumber(r.semantic.per_class_iou[y]) << ",,,,\n";
  }
  out << "all," << e.test_voxels << ",,,,," << CsvNumber(r.geometry.iou) << ','
      << CsvNumber(r.semantic.miou) << ',' << CsvNumber(r.cov_gap) << ','
      << CsvNumber(r.avg_size) << '\n';
  return out.str();
}

inline CommandResult CmdEvaluate(const PipelineConfig& cfg) {
  const CalibratedModel m = ReadModel(cfg.paths.model);
  const SoftmaxGrid f = ReadGridAs<SoftmaxGrid>(cfg.paths.softmax);
  const LabelGrid gt = ReadGridAs<LabelGrid>(cfg.paths.labels);
  const VoxelSplit split =
      SplitVoxels(f.voxel_count(), m.seed, m.calibration_fraction);
  const Evaluation e = EvaluateModel(m, f, gt, split.test);

  CommandResult r;
  for (ClassId y = 2; y <= m.num_classes; ++y) {
    if (e.report.class_count[y] == 0) {
      r.warnings.push_back("class '" + m.class_names[y - 1] +
                           "' has no test voxels; its coverage is null");
    }
  }
  nlohmann::json report = ReportToJson(e, m.class_names);
  report["method"] = ToString(m.method);
  WriteTextFile(cfg.paths.metrics, report.dump(2) + "\n");
  WriteTextFile(cfg.paths.metrics_csv, ReportToCsv(e, m.class_names));
  r.summary = {{"command", "evaluate"},
               {"method", ToString(m.method)},
               {"test_voxels", e.test_voxels},
               {"geometry_iou", RatioToJson(e.report.geometry.iou)},
               {"cov_gap", RatioToJson(e.report.cov_gap)},
               {"avg_size", e.report.avg_size},
               {"outputs",
                {{"metrics", cfg.paths.metrics.string()},
                 {"metrics_csv", cfg.paths.metrics_csv.string()}}}};
  return r;
}

inline CommandResult CmdSweep(const PipelineConfig& cfg,
                              const std::vector<ScoreKind>& kinds) {
  if (cfg.hcp.rare_classes.size() != 1) {
    throw ConfigError("hcp.rare_classes", "sweep needs exactly one rare class");
  }
  const ClassId rare = cfg.hcp.rare_classes.front();
  const SoftmaxGrid f = ReadGridAs<SoftmaxGrid>(cfg.paths.softmax);
  const LabelGrid gt = ReadGridAs<LabelGrid>(cfg.paths.labels);
  CheckSameShape(f, gt);
  const VoxelSplit split = SplitVoxels(
      f.voxel_count(), StreamSeeds::From(cfg.seed).split, cfg.calibration_fraction);
  const CalibrationSet cal = CalibrationFor(f, gt, split);

  CommandResult r;
  std::ostringstream csv;
  csv << "score,target_recall,achieved_recall,iou\n";
  for (ScoreKind kind : kinds) {
    const auto rows = RecallIouSweep(f, gt, cal, split.test, rare, kind,
                                     cfg.hcp.epsilon, cfg.sweep_targets);
    for (const SweepRow& row : rows) {
      csv << ToString(kind) << ',' << CsvNumber(row.target) << ','
          << CsvNumber(row.recall) << ',' << CsvNumber(row.iou) << '\n';
      if (!row.recall) {
        r.warnings.push_back("rare class has no test voxels; recall is null");
      }
    }
  }
  WriteTextFile(cfg.paths.sweep_csv, csv.str());
  nlohmann::json names = nlohmann::json::array();
  for (ScoreKind k : kinds) names.push_back(ToString(k));
  r.summary = {{"command", "sweep"},
               {"rare_class", ClassNamesFor(cfg, gt.num_classes)[rare - 1]},
               {"scores", names},
               {"targets", cfg.sweep_targets},
               {"outputs", {{"sweep_csv", cfg.paths.sweep_csv.string()}}}};
  return r;
}

}  // namespace voxcp

#endif  // VOXCP_PIPELINE_HPP_
