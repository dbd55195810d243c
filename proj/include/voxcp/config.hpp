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

// Pipeline configuration and its JSON form. The schema is documented in
// docs/config.md. Every key is optional; unknown keys are rejected so typos
// do not silently fall back to defaults.

#ifndef VOXCP_CONFIG_HPP_
#define VOXCP_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "voxcp/conformal.hpp"
#include "voxcp/error.hpp"
#include "voxcp/random.hpp"
#include "voxcp/synth.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

// Seeds of the independent streams derived from one top-level seed. The
// scene uses the top-level seed itself.
struct StreamSeeds {
  std::uint64_t scene;
  std::uint64_t depth;
  std::uint64_t classifier;
  std::uint64_t split;

  static StreamSeeds From(std::uint64_t seed) {
    return {seed, Mix64(seed + 1 * kGolden), Mix64(seed + 2 * kGolden),
            Mix64(seed + 3 * kGolden)};
  }
};

struct PipelinePaths {
  std::filesystem::path labels = "labels.sscg";
  std::filesystem::path depth = "depth.sscg";
  std::filesystem::path softmax = "softmax.sscg";
  std::filesystem::path grid = "grid.sscg";
  std::filesystem::path model = "model.json";
  std::filesystem::path metrics = "metrics.json";
  std::filesystem::path metrics_csv = "metrics.csv";
  std::filesystem::path sweep_csv = "sweep.csv";
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  // Fraction of voxels used for calibration; the rest is the test split.
  double calibration_fraction = 0.3;
  SceneSpec scene = DefaultSceneSpec();
  CameraIntrinsics camera = DefaultIntrinsics();
  DepthNoiseModel noise;
  ClassifierSpec classifier = DefaultClassifierSpec();
  HcpConfig hcp;
  // Miscoverage rate of the marginal (scp) baseline and of the empty class
  // under cccp.
  double scp_alpha = 0.1;
  std::vector<double> sweep_targets{0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  PipelinePaths paths;

  int num_classes() const { return scene.num_classes(); }

  void Validate() const {
    if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
      throw ConfigError("split", "calibration fraction must lie in (0, 1)");
    }
    if (!(scp_alpha > 0.0 && scp_alpha < 1.0)) {
      throw ConfigError("scp_alpha", "must lie in (0, 1)");
    }
    scene.Validate();
    camera.Validate();
    noise.Validate();
    classifier.Validate();
    if (classifier.num_classes() != num_classes()) {
      throw ConfigError("classifier.confusion",
                        "needs one row per scene class");
    }
    if (hcp.num_classes != num_classes()) {
      throw ConfigError("hcp", "class count differs from the scene's");
    }
    hcp.Validate();
  }
};

// Default HCP settings for the default scene: person is the rare class.
inline HcpConfig DefaultHcpConfig(int num_classes, ClassId rare) {
  HcpConfig cfg;
  cfg.num_classes = num_classes;
  cfg.rare_classes = {rare};
  cfg.alpha_o = ClassTable<double>(num_classes, 0.1);
  cfg.alpha_target = ClassTable<double>(num_classes, 0.2);
  cfg.alpha_target[1] = 0.1;
  if (num_classes >= 2) cfg.alpha_target[2] = 0.1;
  return cfg;
}

// Propagates the top-level seed into the generator specs.
inline void ApplySeed(PipelineConfig* cfg, std::uint64_t seed) {
  cfg->seed = seed;
  cfg->scene.seed = StreamSeeds::From(seed).scene;
  cfg->classifier.seed = StreamSeeds::From(seed).classifier;
}

inline PipelineConfig DefaultPipelineConfig(std::uint64_t seed = 0) {
  PipelineConfig cfg;
  cfg.hcp = DefaultHcpConfig(cfg.num_classes(), cfg.num_classes());
  ApplySeed(&cfg, seed);
  return cfg;
}

namespace config_detail {

inline void RejectUnknown(const nlohmann::json& obj, const std::string& where,
                          std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ConfigError(where, "must be a JSON object");
  const std::set<std::string> keys(known.begin(), known.end());
  for (const auto& [key, _] : obj.items()) {
    if (!keys.count(key)) {
      throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

template <typename T>
T Get(const nlohmann::json& obj, const std::string& field) {
  try {
    return obj.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(field, "has the wrong type");
  }
}

template <typename T>
void Read(const nlohmann::json& obj, const char* key, const std::string& where,
          T* out) {
  if (!obj.contains(key)) return;
  *out = Get<T>(obj.at(key), where.empty() ? key : where + "." + key);
}

inline std::array<double, 3> Triple(const nlohmann::json& j,
                                    const std::string& field) {
  const auto v = Get<std::vector<double>>(j, field);
  if (v.size() != 3) throw ConfigError(field, "needs exactly 3 numbers");
  return {v[0], v[1], v[2]};
}

}  // namespace config_detail

// Class reference: a 1-based id or one of the scene's class names.
inline ClassId ResolveClass(const nlohmann::json& ref,
                            const std::vector<std::string>& names,
                            const std::string& field) {
  if (ref.is_number_integer()) {
    const int y = ref.get<int>();
    if (y < 1 || y > static_cast<int>(names.size())) {
      throw ConfigError(field, "class id " + std::to_string(y) + " out of range");
    }
    return y;
  }
  if (ref.is_string()) {
    const std::string name = ref.get<std::string>();
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<ClassId>(i + 1);
    }
    throw ConfigError(field, "unknown class '" + name + "'");
  }
  throw ConfigError(field, "class must be a name or an id");
}

inline ClassId ResolveClassName(const std::string& name,
                                const std::vector<std::string>& names,
                                const std::string& field) {
  const bool numeric =
      !name.empty() && name.find_first_not_of("0123456789") == std::string::npos;
  return ResolveClass(numeric ? nlohmann::json(std::stoi(name))
                              : nlohmann::json(name),
                      names, field);
}

// {"person": 0.2, "car": 0.1} into a table over all classes.
inline void ReadClassRates(const nlohmann::json& obj,
                           const std::vector<std::string>& names,
                           const std::string& field, ClassTable<double>* out) {
  if (!obj.is_object()) throw ConfigError(field, "must map class to rate");
  for (const auto& [key, value] : obj.items()) {
    const ClassId y = ResolveClassName(key, names, field);
    (*out)[y] = config_detail::Get<double>(value, field + "." + key);
  }
}

inline PipelineConfig ConfigFromJson(const nlohmann::json& j) {
  using config_detail::Read;
  using config_detail::RejectUnknown;
  using config_detail::Triple;
  RejectUnknown(j, "",
                {"seed", "split", "scp_alpha", "scene", "camera", "depth_noise",
                 "classifier", "hcp", "sweep_targets", "paths"});
  PipelineConfig cfg = DefaultPipelineConfig();
  Read(j, "seed", "", &cfg.seed);
  Read(j, "split", "", &cfg.calibration_fraction);
  Read(j, "scp_alpha", "", &cfg.scp_alpha);
  Read(j, "sweep_targets", "", &cfg.sweep_targets);

  bool classes_changed = false;
  if (j.contains("scene")) {
    const auto& s = j.at("scene");
    RejectUnknown(s, "scene",
                  {"dims", "voxel_edge", "origin", "classes", "objects"});
    auto& g = cfg.scene.geometry;
    if (s.contains("dims")) {
      const auto d = Triple(s.at("dims"), "scene.dims");
      for (double x : d) {
        if (!(x >= 1.0) || x != std::floor(x)) {
          throw ConfigError("scene.dims", "must be positive integers");
        }
      }
      g.dims = {static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[1]),
                static_cast<std::size_t>(d[2])};
    }
    Read(s, "voxel_edge", "scene", &g.voxel_edge);
    if (s.contains("origin")) {
      const auto o = Triple(s.at("origin"), "scene.origin");
      g.origin = {o[0], o[1], o[2]};
    }
    if (s.contains("classes")) {
      cfg.scene.class_names =
          config_detail::Get<std::vector<std::string>>(s.at("classes"),
                                                       "scene.classes");
      classes_changed = true;
    }
    if (s.contains("objects")) {
      cfg.scene.objects.clear();
      const auto& arr = s.at("objects");
      if (!arr.is_array()) throw ConfigError("scene.objects", "must be a list");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string f = "scene.objects[" + std::to_string(i) + "]";
        const auto& o = arr[i];
        RejectUnknown(o, f, {"class", "shape", "fraction", "size_min", "size_max"});
        ObjectTemplate t;
        if (!o.contains("class")) throw ConfigError(f + ".class", "is required");
        t.class_id = ResolveClass(o.at("class"), cfg.scene.class_names, f + ".class");
        const std::string shape =
            o.contains("shape") ? config_detail::Get<std::string>(o.at("shape"), f + ".shape")
                                : "box";
        if (shape == "box") {
          t.shape = ObjectShape::kBox;
        } else if (shape == "ground") {
          t.shape = ObjectShape::kGroundPatch;
        } else {
          throw ConfigError(f + ".shape", "must be 'box' or 'ground'");
        }
        Read(o, "fraction", f, &t.fraction);
        if (o.contains("size_min")) t.size_min = Triple(o.at("size_min"), f + ".size_min");
        if (o.contains("size_max")) t.size_max = Triple(o.at("size_max"), f + ".size_max");
        cfg.scene.objects.push_back(t);
      }
    }
  }
  const int m = cfg.num_classes();
  const auto& names = cfg.scene.class_names;

  if (j.contains("camera")) {
    const auto& c = j.at("camera");
    RejectUnknown(c, "camera", {"f_u", "f_v", "c_h", "c_w", "height", "width"});
    Read(c, "f_u", "camera", &cfg.camera.f_u);
    Read(c, "f_v", "camera", &cfg.camera.f_v);
    Read(c, "c_h", "camera", &cfg.camera.c_h);
    Read(c, "c_w", "camera", &cfg.camera.c_w);
    Read(c, "height", "camera", &cfg.camera.height);
    Read(c, "width", "camera", &cfg.camera.width);
  }
  if (j.contains("depth_noise")) {
    const auto& n = j.at("depth_noise");
    RejectUnknown(n, "depth_noise", {"a", "b"});
    Read(n, "a", "depth_noise", &cfg.noise.a);
    Read(n, "b", "depth_noise", &cfg.noise.b);
  }
  if (j.contains("classifier")) {
    const auto& c = j.at("classifier");
    RejectUnknown(c, "classifier",
                  {"confusion", "sharpness", "residual", "floor", "temperature"});
    Read(c, "confusion", "classifier", &cfg.classifier.confusion);
    Read(c, "sharpness", "classifier", &cfg.classifier.sharpness);
    Read(c, "residual", "classifier", &cfg.classifier.residual);
    Read(c, "floor", "classifier", &cfg.classifier.floor);
    Read(c, "temperature", "classifier", &cfg.classifier.temperature);
  }

  if (classes_changed) cfg.hcp = DefaultHcpConfig(m, m);
  if (j.contains("hcp")) {
    const auto& h = j.at("hcp");
    RejectUnknown(h, "hcp", {"rare_classes", "alpha_o", "alpha_target", "epsilon"});
    if (h.contains("rare_classes")) {
      const auto& arr = h.at("rare_classes");
      if (!arr.is_array()) throw ConfigError("hcp.rare_classes", "must be a list");
      cfg.hcp.rare_classes.clear();
      for (const auto& r : arr) {
        cfg.hcp.rare_classes.push_back(ResolveClass(r, names, "hcp.rare_classes"));
      }
    }
    if (h.contains("alpha_o")) {
      ReadClassRates(h.at("alpha_o"), names, "hcp.alpha_o", &cfg.hcp.alpha_o);
    }
    if (h.contains("alpha_target")) {
      ReadClassRates(h.at("alpha_target"), names, "hcp.alpha_target",
                     &cfg.hcp.alpha_target);
    }
    Read(h, "epsilon", "hcp", &cfg.hcp.epsilon);
  }

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    RejectUnknown(p, "paths",
                  {"labels", "depth", "softmax", "grid", "model", "metrics",
                   "metrics_csv", "sweep_csv"});
    auto path = [&](const char* key, std::filesystem::path* out) {
      if (p.contains(key)) {
        *out = config_detail::Get<std::string>(p.at(key), std::string("paths.") + key);
      }
    };
    path("labels", &cfg.paths.labels);
    path("depth", &cfg.paths.depth);
    path("softmax", &cfg.paths.softmax);
    path("grid", &cfg.paths.grid);
    path("model", &cfg.paths.model);
    path("metrics", &cfg.paths.metrics);
    path("metrics_csv", &cfg.paths.metrics_csv);
    path("sweep_csv", &cfg.paths.sweep_csv);
  }

  ApplySeed(&cfg, cfg.seed);
  cfg.Validate();
  return cfg;
}

inline PipelineConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return ConfigFromJson(j);
}

}  // namespace voxcp

#endif  // VOXCP_CONFIG_HPP_
