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

// voxcp command-line tool.
//
// stdout carries exactly one JSON line per run; diagnostics go to stderr.
// Exit status: 0 success, 2 configuration error, 3 data or format error,
// 4 statistical warnings under --strict.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "voxcp/config.hpp"
#include "voxcp/error.hpp"
#include "voxcp/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitStrict = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> split;
  std::optional<double> epsilon;
  std::vector<std::string> alpha_target;
  std::vector<std::string> alpha_o;
  std::vector<std::string> rare;
  std::string labels, depth, softmax, grid, model, metrics, metrics_csv, sweep_csv;
  bool strict = false;
  int threads = 1;
  bool binary = false;
  std::string method = "hcp";
  std::vector<std::string> scores{"kl", "class", "occupied"};
  std::vector<double> targets;
};

void Emit(const nlohmann::json& line) { std::cout << line.dump() << std::endl; }

int Fail(const std::string& command, int code, const std::string& message,
         const std::string& field = "") {
  std::cerr << "voxcp " << command << ": " << message << "\n";
  nlohmann::json line = {{"command", command},
                         {"status", "error"},
                         {"exit_code", code},
                         {"error", message}};
  if (!field.empty()) line["field"] = field;
  Emit(line);
  return code;
}

// "name=value" pairs into a per-class rate table.
void ApplyRates(const std::vector<std::string>& pairs, const char* field,
                const std::vector<std::string>& names,
                voxcp::ClassTable<double>* table) {
  for (const std::string& kv : pairs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw voxcp::ConfigError(field, "expected name=value, got '" + kv + "'");
    }
    const voxcp::ClassId y =
        voxcp::ResolveClassName(kv.substr(0, eq), names, field);
    try {
      std::size_t used = 0;
      const double v = std::stod(kv.substr(eq + 1), &used);
      if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
      (*table)[y] = v;
    } catch (const std::logic_error&) {
      throw voxcp::ConfigError(field, "bad rate in '" + kv + "'");
    }
  }
}

voxcp::PipelineConfig BuildConfig(const Options& o) {
  voxcp::PipelineConfig cfg = o.config.empty() ? voxcp::DefaultPipelineConfig()
                                               : voxcp::LoadConfig(o.config);
  if (o.seed) voxcp::ApplySeed(&cfg, *o.seed);
  if (o.split) cfg.calibration_fraction = *o.split;
  if (o.epsilon) cfg.hcp.epsilon = *o.epsilon;
  const auto& names = cfg.scene.class_names;
  if (!o.rare.empty()) {
    cfg.hcp.rare_classes.clear();
    for (const auto& r : o.rare) {
      cfg.hcp.rare_classes.push_back(voxcp::ResolveClassName(r, names, "rare"));
    }
  }
  ApplyRates(o.alpha_target, "alpha-target", names, &cfg.hcp.alpha_target);
  ApplyRates(o.alpha_o, "alpha-o", names, &cfg.hcp.alpha_o);
  if (!o.targets.empty()) cfg.sweep_targets = o.targets;
  auto path = [](const std::string& flag, std::filesystem::path* out) {
    if (!flag.empty()) *out = flag;
  };
  path(o.labels, &cfg.paths.labels);
  path(o.depth, &cfg.paths.depth);
  path(o.softmax, &cfg.paths.softmax);
  path(o.grid, &cfg.paths.grid);
  path(o.model, &cfg.paths.model);
  path(o.metrics, &cfg.paths.metrics);
  path(o.metrics_csv, &cfg.paths.metrics_csv);
  path(o.sweep_csv, &cfg.paths.sweep_csv);
  cfg.Validate();
  return cfg;
}

voxcp::CommandResult Run(const std::string& command, const Options& o) {
  const voxcp::PipelineConfig cfg = BuildConfig(o);
  if (o.threads < 1) throw voxcp::ConfigError("threads", "must be >= 1");
  if (command == "simulate") return voxcp::CmdSimulate(cfg);
  if (command == "project") return voxcp::CmdProject(cfg, o.binary, o.threads);
  if (command == "calibrate") {
    return voxcp::CmdCalibrate(cfg, voxcp::MethodFromString(o.method));
  }
  if (command == "evaluate") return voxcp::CmdEvaluate(cfg);
  std::vector<voxcp::ScoreKind> kinds;
  for (const auto& s : o.scores) kinds.push_back(voxcp::ScoreKindFromString(s));
  return voxcp::CmdSweep(cfg, kinds);
}

void AddCommon(CLI::App* sub, Options* o) {
  sub->add_option("-c,--config", o->config, "JSON config file");
  sub->add_option("--seed", o->seed, "top-level seed");
  sub->add_option("--split", o->split, "calibration fraction in (0, 1)");
  sub->add_option("--epsilon", o->epsilon, "empty-class floor of the KL score");
  sub->add_option("--alpha-target", o->alpha_target,
                  "per-class target error rate, name=value (repeatable)");
  sub->add_option("--alpha-o", o->alpha_o,
                  "per-rare-class occupancy error rate, name=value (repeatable)");
  sub->add_option("--rare", o->rare, "rare class name or id (repeatable)");
  sub->add_option("--labels", o->labels, "label grid container");
  sub->add_option("--depth", o->depth, "depth estimate container");
  sub->add_option("--softmax", o->softmax, "softmax grid container");
  sub->add_option("--grid", o->grid, "projected occupancy grid container");
  sub->add_option("--model", o->model, "calibrated model JSON");
  sub->add_option("--metrics", o->metrics, "metrics JSON output");
  sub->add_option("--metrics-csv", o->metrics_csv, "metrics CSV output");
  sub->add_option("--sweep-csv", o->sweep_csv, "sweep CSV output");
  sub->add_option("--threads", o->threads, "worker threads (output does not depend on it)");
  sub->add_flag("--strict", o->strict, "exit with status 4 on statistical warnings");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware voxel scene completion: projection and conformal calibration"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic scene, depth and softmax grids");
  auto* project = app.add_subcommand("project", "project a depth estimate into an occupancy grid");
  auto* calibrate = app.add_subcommand("calibrate", "calibrate scp, cccp or hcp on the calibration split");
  auto* evaluate = app.add_subcommand("evaluate", "apply a calibrated model to the test split");
  auto* sweep = app.add_subcommand("sweep", "geometric IoU against rare-class occupied recall");
  for (auto* sub : {simulate, project, calibrate, evaluate, sweep}) AddCommon(sub, &o);
  project->add_flag("--binary", o.binary, "deterministic binary projection");
  calibrate->add_option("--method", o.method, "scp, cccp or hcp")
      ->check(CLI::IsMember({"scp", "cccp", "hcp"}));
  sweep->add_option("--score", o.scores, "kl, class and/or occupied (repeatable)")
      ->check(CLI::IsMember({"kl", "class", "occupied"}));
  sweep->add_option("--targets", o.targets, "strictly increasing recall targets in [0, 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Fail("voxcp", kExitConfig, e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    voxcp::CommandResult r = Run(command, o);
    for (const auto& w : r.warnings) std::cerr << "voxcp " << command << ": warning: " << w << "\n";
    r.summary["warnings"] = r.warnings;
    const bool escalate = o.strict && !r.warnings.empty();
    r.summary["status"] = escalate ? "warning" : "ok";
    r.summary["exit_code"] = escalate ? kExitStrict : 0;
    Emit(r.summary);
    return escalate ? kExitStrict : 0;
  } catch (const voxcp::ConfigError& e) {
    return Fail(command, kExitConfig, e.what(), e.field());
  } catch (const voxcp::Error& e) {
    return Fail(command, kExitData, e.what());
  } catch (const std::exception& e) {
    return Fail(command, kExitData, e.what());
  }
}
