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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "voxcp/error.hpp"
#include "voxcp/projection.hpp"

namespace voxcp {
namespace {

constexpr double kInfD = std::numeric_limits<double>::infinity();

// Slab test written against the box directly: the ray point at depth z is
// (sx z, sy z, z); returns the depth extent inside the box within (0, z_max].
double SlabExtent(double sx, double sy, const GridGeometry& g, double z_max) {
  const double s[3] = {sx, sy, 1.0};
  const double lo[3] = {g.origin.x, g.origin.y, g.origin.z};
  const double n[3] = {static_cast<double>(g.dims.u),
                       static_cast<double>(g.dims.v),
                       static_cast<double>(g.dims.d)};
  double t0 = 0.0, t1 = z_max;
  for (int a = 0; a < 3; ++a) {
    const double hi = lo[a] + g.voxel_edge * n[a];
    if (s[a] == 0.0) {
      if (!(lo[a] <= 0.0 && 0.0 < hi)) return 0.0;
      continue;
    }
    const double e0 = std::min(lo[a] / s[a], hi / s[a]);
    const double e1 = std::max(lo[a] / s[a], hi / s[a]);
    t0 = std::max(t0, e0);
    t1 = std::min(t1, e1);
  }
  return std::max(0.0, t1 - t0);
}

TEST(PixelToPoint, PrincipalRay) {
  const CameraIntrinsics c{500, 500, 250, 250, 500, 500};
  EXPECT_EQ(PixelToPoint(250, 250, 10, c), (Vec3{0, 0, 10}));
}

TEST(PixelToPoint, DirectSubstitution) {
  const CameraIntrinsics c{500, 500, 250, 250, 500, 500};
  EXPECT_EQ(PixelToPoint(300, 250, 10, c), (Vec3{1.0, 0, 10}));
}

TEST(PixelToPoint, LinearInDepthAndRejectsNonPositive) {
  const CameraIntrinsics c{321.5, 287.25, 100.5, 80.25, 200, 160};
  const Vec3 a = PixelToPoint(17, 143, 3.5, c);
  const Vec3 b = PixelToPoint(17, 143, 7.0, c);
  EXPECT_EQ(b.x, 2 * a.x);
  EXPECT_EQ(b.y, 2 * a.y);
  EXPECT_EQ(b.z, 7.0);
  EXPECT_THROW(PixelToPoint(1, 1, 0.0, c), DomainError);
  EXPECT_THROW(PixelToPoint(1, 1, -2.0, c), DomainError);
}

TEST(TraverseRay, AxisAlignedPrincipalRay) {
  const CameraIntrinsics c{100, 100, 0, 0, 1, 1};
  const GridGeometry g{{1, 1, 50}, 0.2, {-0.1, -0.1, 0.0}};
  const auto segs = TraverseRay(0, 0, c, g, 10.0);
  ASSERT_EQ(segs.size(), 50u);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    EXPECT_EQ(segs[k].voxel, (VoxelIndex{0, 0, k}));
    EXPECT_NEAR(segs[k].z_entry, 0.2 * k, 1e-12);
    EXPECT_NEAR(segs[k].z_exit, 0.2 * (k + 1), 1e-12);
  }
}

TEST(TraverseRay, MissingRayIsEmpty) {
  const CameraIntrinsics c{10, 10, 0, 0, 20, 20};
  // The ray of pixel (19, 19) heads toward +x, +y; the box sits at -x.
  const GridGeometry g{{4, 4, 4}, 0.5, {-5.0, -5.0, 1.0}};
  EXPECT_TRUE(TraverseRay(19, 19, c, g, 100.0).empty());
  EXPECT_THROW(TraverseRay(0, 0, c, g, 0.0), DomainError);
}

TEST(TraverseRay, ZMaxCutsInsideTheGrid) {
  const CameraIntrinsics c{100, 100, 0, 0, 1, 1};
  const GridGeometry g{{1, 1, 50}, 0.2, {-0.1, -0.1, 0.0}};
  const auto segs = TraverseRay(0, 0, c, g, 1.05);
  ASSERT_EQ(segs.size(), 6u);
  EXPECT_DOUBLE_EQ(segs.back().z_exit, 1.05);
}

// Property: random rays through random grids. Segments are ordered,
// contiguous, never repeat a voxel, each segment's midpoint lies in its
// voxel, and the lengths sum to the slab-oracle extent.
TEST(TraverseRayProperty, MatchesSlabOracle) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 12);
  int non_empty = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const CameraIntrinsics c{20 + 200 * unit(rng), 20 + 200 * unit(rng),
                             64 * unit(rng), 64 * unit(rng), 64, 64};
    const GridGeometry g{{static_cast<std::size_t>(dim(rng)),
                          static_cast<std::size_t>(dim(rng)),
                          static_cast<std::size_t>(dim(rng))},
                         0.05 + unit(rng),
                         {-4 * unit(rng), -4 * unit(rng), 3 * unit(rng)}};
    const int h = static_cast<int>(64 * unit(rng));
    const int w = static_cast<int>(64 * unit(rng));
    const double z_max = trial % 3 == 0 ? 2 + 10 * unit(rng) : kInfD;
    const auto segs = TraverseRay(h, w, c, g, z_max);
    const double sx = (h - c.c_h) / c.f_u, sy = (w - c.c_w) / c.f_v;
    const double oracle = SlabExtent(sx, sy, g, z_max);
    double total = 0.0;
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const RaySegment& s = segs[k];
      ASSERT_GE(s.z_entry, 0.0);
      ASSERT_LT(s.z_entry, s.z_exit);
      if (k > 0) {
        ASSERT_EQ(segs[k - 1].z_exit, s.z_entry);
      }
      ASSERT_LT(s.voxel.u, g.dims.u);
      ASSERT_LT(s.voxel.v, g.dims.v);
      ASSERT_LT(s.voxel.d, g.dims.d);
      ASSERT_TRUE(seen.insert({s.voxel.u, s.voxel.v, s.voxel.d}).second);
      const double z = 0.5 * (s.z_entry + s.z_exit);
      VoxelIndex mid;
      if (PointToVoxel({sx * z, sy * z, z}, g, &mid)) {
        EXPECT_EQ(mid, s.voxel);
      }
      total += s.z_exit - s.z_entry;
    }
    EXPECT_NEAR(total, oracle, 1e-9);
    non_empty += !segs.empty();
  }
  EXPECT_GT(non_empty, 300);
}

DepthEstimate OnePixel(double mean, double sigma) {
  return {Image<float>(1, 1, static_cast<float>(mean)),
          Image<float>(1, 1, static_cast<float>(sigma))};
}

TEST(BuildProbGrid, OneSigmaVoxel) {
  const CameraIntrinsics c{100, 100, 0, 0, 1, 1};
  // Mean 5 and sigma 0.25 are exact in float32; the voxel spans [4.75, 5.25].
  const GridGeometry g{{1, 1, 1}, 0.5, {-0.25, -0.25, 4.75}};
  const auto p = BuildProbGrid(OnePixel(5.0, 0.25), c, g);
  EXPECT_NEAR(p.values[0], 0.6826894921, 1e-7);
}

TEST(BuildProbGrid, ClampsAtOne) {
  // Voxel spanning mean +- a with Phi(a/sigma) = 0.8: one ray gives 0.6.
  const double a = 0.8416212335729143;
  const CameraIntrinsics c{1e6, 1e6, 0, 0, 1, 2};
  const GridGeometry g{{1, 1, 1}, 2 * a, {-a, -a, 5.0 - a}};
  DepthEstimate est{Image<float>(1, 2, 5.0f), Image<float>(1, 2, 1.0f)};
  DepthEstimate single = est;
  single.mean(0, 1) = 0.0f;
  single.sigma(0, 1) = 0.0f;
  EXPECT_NEAR(BuildProbGrid(single, c, g).values[0], 0.6, 1e-6);
  EXPECT_EQ(BuildProbGrid(est, c, g).values[0], 1.0f);
}

TEST(BuildProbGrid, NeedsSigmaPlane) {
  const CameraIntrinsics c{100, 100, 0, 0, 1, 1};
  const GridGeometry g{{1, 1, 1}, 0.5, {-0.25, -0.25, 4.75}};
  DepthEstimate est = OnePixel(5.0, 1.0);
  est.sigma = Image<float>();
  EXPECT_THROW(BuildProbGrid(est, c, g), DomainError);
}

struct Scene {
  CameraIntrinsics intr{24, 24, 12, 12, 24, 24};
  GridGeometry geom{{8, 8, 16}, 0.25, {-1.0, -1.0, 0.5}};
  DepthEstimate est;
};

Scene RandomScene(std::uint64_t seed, double sigma_lo, double sigma_hi,
                  double invalid_fraction = 0.1) {
  Scene s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  s.est = {Image<float>(24, 24), Image<float>(24, 24)};
  for (std::size_t i = 0; i < s.est.mean.size(); ++i) {
    if (unit(rng) < invalid_fraction) continue;
    s.est.mean.data[i] = static_cast<float>(0.8 + 3.5 * unit(rng));
    s.est.sigma.data[i] =
        static_cast<float>(sigma_lo + (sigma_hi - sigma_lo) * unit(rng));
  }
  return s;
}

TEST(BuildProbGrid, DiracLimitMatchesBinaryGrid) {
  const Scene s = RandomScene(1, 1e-6, 1e-6, 0.0);
  const auto p = BuildProbGrid(s.est, s.intr, s.geom);
  const auto b = BuildBinaryGrid(s.est, s.intr, s.geom);
  std::size_t occupied = 0;
  for (std::size_t v = 0; v < p.values.size(); ++v) {
    if (b.values[v]) {
      ++occupied;
      EXPECT_NEAR(p.values[v], 1.0f, 1e-3) << "voxel " << v;
    } else {
      EXPECT_NEAR(p.values[v], 0.0f, 1e-3) << "voxel " << v;
    }
  }
  EXPECT_GT(occupied, 50u);
}

// Monte Carlo oracle: per pixel, sample depths from N(mean, sigma^2), drop
// each sample into its voxel via back-projection, take hit frequencies per
// ray and clamp-sum over rays.
TEST(BuildProbGrid, MatchesMonteCarloOracle) {
  const Scene s = RandomScene(2, 0.05, 0.6);
  const auto p = BuildProbGrid(s.est, s.intr, s.geom);
  constexpr int kSamples = 100000;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> acc(s.geom.dims.count(), 0.0);
  std::vector<std::uint32_t> hits(s.geom.dims.count(), 0);
  std::vector<std::size_t> touched;
  for (int h = 0; h < s.intr.height; ++h) {
    for (int w = 0; w < s.intr.width; ++w) {
      const float mean = s.est.mean(h, w);
      if (!(mean > 0)) continue;
      const float sigma = s.est.sigma(h, w);
      touched.clear();
      for (int k = 0; k < kSamples; ++k) {
        const double z = mean + sigma * normal(rng);
        if (!(z > 0)) continue;
        VoxelIndex vi;
        if (!PointToVoxel(PixelToPoint(h, w, z, s.intr), s.geom, &vi)) continue;
        const std::size_t f = s.geom.Flat(vi);
        if (hits[f]++ == 0) touched.push_back(f);
      }
      for (std::size_t f : touched) {
        acc[f] += static_cast<double>(hits[f]) / kSamples;
        hits[f] = 0;
      }
    }
  }
  std::size_t checked = 0;
  for (std::size_t v = 0; v < acc.size(); ++v) {
    if (p.values[v] < 0.05) continue;
    ++checked;
    EXPECT_NEAR(std::min(1.0, acc[v]), p.values[v], 0.02) << "voxel " << v;
  }
  EXPECT_GT(checked, 100u);
}

TEST(BuildProbGridProperty, ValuesInUnitIntervalAndMonotoneInPixels) {
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    Scene s = RandomScene(seed, 0.02, 1.0);
    auto prev = BuildProbGrid(s.est, s.intr, s.geom);
    EXPECT_NO_THROW(prev.Validate());
    // Invalidate pixels one row at a time; no voxel may gain probability.
    for (int h = 0; h < s.intr.height; h += 3) {
      for (int w = 0; w < s.intr.width; ++w) {
        s.est.mean(h, w) = 0.0f;
        s.est.sigma(h, w) = 0.0f;
      }
      const auto next = BuildProbGrid(s.est, s.intr, s.geom);
      for (std::size_t v = 0; v < next.values.size(); ++v) {
        ASSERT_LE(next.values[v], prev.values[v]);
      }
      prev = next;
    }
  }
}

TEST(BuildProbGridProperty, BitIdenticalAcrossThreadCounts) {
  const Scene s = RandomScene(7, 0.01, 2.0);
  const auto one = BuildProbGrid(s.est, s.intr, s.geom, {1, false});
  for (int t : {2, 3, 5, 8, 64}) {
    const auto many = BuildProbGrid(s.est, s.intr, s.geom, {t, false});
    ASSERT_EQ(std::memcmp(one.values.values().data(), many.values.values().data(),
                          one.values.size() * sizeof(float)),
              0)
        << t << " threads";
  }
}

TEST(BuildProbGrid, TailTruncationIsWithinFloatRounding) {
  const Scene s = RandomScene(8, 0.05, 0.5);
  const auto exact = BuildProbGrid(s.est, s.intr, s.geom);
  const auto cut = BuildProbGrid(s.est, s.intr, s.geom, {1, true});
  for (std::size_t v = 0; v < exact.values.size(); ++v) {
    EXPECT_NEAR(exact.values[v], cut.values[v], 1e-6);
  }
}

TEST(BuildBinaryGrid, SinglePointSetsOneVoxel) {
  const CameraIntrinsics c{10, 10, 1, 1, 3, 3};
  const GridGeometry g{{3, 3, 10}, 0.5, {-0.75, -0.75, 0.0}};
  Image<float> depth(3, 3, 0.0f);
  depth(1, 1) = 2.2f;  // principal ray, d = 4
  const auto b = BuildBinaryGrid(depth, c, g);
  std::size_t set = 0;
  for (auto x : b.values.values()) set += x;
  EXPECT_EQ(set, 1u);
  EXPECT_EQ(b.values.at(1, 1, 4), 1);
}

TEST(BuildBinaryGrid, BeyondFarFaceIsEmpty) {
  const CameraIntrinsics c{10, 10, 1, 1, 3, 3};
  const GridGeometry g{{3, 3, 10}, 0.5, {-0.75, -0.75, 0.0}};
  const auto b = BuildBinaryGrid(Image<float>(3, 3, 5.0f), c, g);
  for (auto x : b.values.values()) EXPECT_EQ(x, 0);
}

TEST(BuildBinaryGrid, SharedFaceGoesToLargerIndex) {
  const CameraIntrinsics c{100, 100, 0, 0, 1, 1};
  // Principal ray: x = y = 0 lies on the face between u (and v) 0 and 1;
  // z = 0.5 lies on the face between d = 1 and 2.
  const GridGeometry g{{2, 2, 4}, 0.25, {-0.25, -0.25, 0.0}};
  const auto b = BuildBinaryGrid(Image<float>(1, 1, 0.5f), c, g);
  EXPECT_EQ(b.values.at(1, 1, 2), 1);
  std::size_t set = 0;
  for (auto x : b.values.values()) set += x;
  EXPECT_EQ(set, 1u);
}

}  // namespace
}  // namespace voxcp
