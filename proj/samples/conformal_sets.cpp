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

// Split and class-conditional conformal prediction on hand-written
// three-class softmax vectors.

#include <cstdio>
#include <vector>

#include "voxcp/conformal.hpp"

namespace {

void Print(const char* name, const voxcp::PredictionSet& set) {
  std::printf("%s {", name);
  for (voxcp::ClassId y : set.classes) std::printf(" %d", y);
  std::printf(" }\n");
}

}  // namespace

int main() {
  using namespace voxcp;
  CalibrationSet cal(3);
  const std::vector<std::pair<std::vector<float>, ClassId>> records = {
      {{0.8f, 0.1f, 0.1f}, 1}, {{0.7f, 0.2f, 0.1f}, 1}, {{0.2f, 0.7f, 0.1f}, 2},
      {{0.3f, 0.6f, 0.1f}, 2}, {{0.1f, 0.3f, 0.6f}, 3}, {{0.4f, 0.2f, 0.4f}, 3},
      {{0.6f, 0.3f, 0.1f}, 2}, {{0.5f, 0.1f, 0.4f}, 3}, {{0.9f, 0.05f, 0.05f}, 1}};
  for (const auto& [p, y] : records) cal.Add(p, y);

  const double q = ScpCalibrate(cal, 0.2);
  std::printf("scp quantile %.4f\n", q);

  ClassTable<double> alpha(3, 0.25);
  const ClassTable<double> per_class = CccpCalibrate(cal, alpha);
  for (ClassId y = 1; y <= 3; ++y) {
    std::printf("cccp quantile class %d: %.4f\n", y, per_class[y]);
  }

  const std::vector<float> query{0.45f, 0.35f, 0.2f};
  Print("scp set ", ScpPredict(query, q));
  Print("cccp set", CccpPredict(query, per_class));

  // Class 3 rare: occupancy is gated on the KL score before the semantic stage.
  HcpConfig hcp;
  hcp.num_classes = 3;
  hcp.rare_classes = {3};
  hcp.alpha_o = ClassTable<double>(3, 0.0);
  hcp.alpha_o[3] = 0.25;
  hcp.alpha_target = ClassTable<double>(3, 0.3);
  const HcpModel model = HcpCalibrate(cal, hcp);
  std::printf("gate threshold %.4f, query passes: %s\n", model.GateThreshold(),
              model.GatePasses(query) ? "yes" : "no");
  Print("hcp set ", HcpPredict(query, model));
  return 0;
}
