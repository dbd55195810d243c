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

// End-to-end in memory: synthesize a scene, project its noisy depth into a
// probabilistic occupancy grid, calibrate HCP and report held-out metrics.

#include <cstdio>

#include "voxcp/config.hpp"
#include "voxcp/conformal.hpp"
#include "voxcp/metrics.hpp"
#include "voxcp/pipeline.hpp"
#include "voxcp/projection.hpp"
#include "voxcp/synth.hpp"

int main() {
  using namespace voxcp;
  const PipelineConfig cfg = DefaultPipelineConfig(/*seed=*/11);
  const StreamSeeds seeds = StreamSeeds::From(cfg.seed);

  const LabelGrid world = GenerateScene(cfg.scene);
  const RenderedDepth depth =
      RenderDepth(world, cfg.camera, cfg.noise, seeds.depth);
  const ProbOccupancyGrid prob =
      BuildProbGrid(depth.estimate, cfg.camera, cfg.scene.geometry);
  std::size_t likely = 0;
  for (float p : prob.values.values()) likely += p >= 0.5f;
  std::printf("valid pixels %zu, voxels with p >= 0.5: %zu\n",
              depth.estimate.valid_count(), likely);

  const SoftmaxGrid softmax = SynthClassifier(world, cfg.classifier);
  const VoxelSplit split = SplitVoxels(softmax.voxel_count(), seeds.split,
                                       cfg.calibration_fraction);
  const HcpModel model = HcpCalibrate(
      CalibrationSet::FromGrid(softmax, world, split.calibration), cfg.hcp);
  std::printf("gate threshold %.4f\n", model.GateThreshold());

  std::vector<PredictionSet> sets;
  LabelGrid truth{VoxelGrid<std::uint16_t>(
                      GridGeometry{{split.test.size(), 1, 1}, 1.0, {}}, 1),
                  world.num_classes};
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    sets.push_back(HcpPredict(softmax.at(split.test[i]), model));
    truth.labels[i] = world.labels[split.test[i]];
  }
  const ClassTable<Ratio> cov = ClassCoverage(sets, truth);
  for (ClassId y = 2; y <= world.num_classes; ++y) {
    if (!cov[y]) continue;
    std::printf("%-9s coverage %.3f (target %.2f)\n",
                cfg.scene.class_names[y - 1].c_str(), *cov[y],
                1.0 - cfg.hcp.alpha_target[y]);
  }
  std::printf("avg set size %.3f, cov gap %.4f\n", AvgSize(sets),
              CovGap(sets, truth, cfg.hcp.alpha_target).value_or(0.0));
  return 0;
}
