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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "voxcp/container.hpp"
#include "voxcp/error.hpp"
#include "voxcp/types.hpp"

namespace voxcp {
namespace {

using testing::RandomSimplex;
using testing::SmallGeometry;
using testing::TempDir;

std::vector<std::uint8_t> Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void Spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
}

TEST(GridGeometry, FlatIndexIsRowMajorUvd) {
  const GridGeometry g = SmallGeometry(3, 4, 5);
  EXPECT_EQ(g.Flat(0, 0, 1), 1u);
  EXPECT_EQ(g.Flat(0, 1, 0), 5u);
  EXPECT_EQ(g.Flat(1, 0, 0), 20u);
  for (std::size_t f = 0; f < g.dims.count(); ++f) {
    EXPECT_EQ(g.Flat(g.Unflat(f)), f);
  }
}

TEST(CameraIntrinsics, RejectsPrincipalPointOutsideImage) {
  CameraIntrinsics c{10, 10, 5, 5, 10, 10};
  EXPECT_NO_THROW(c.Validate());
  c.c_h = 10;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = {0, 10, 5, 5, 10, 10};
  EXPECT_THROW(c.Validate(), ValidationError);
}

TEST(Container, LabelGridRoundTrip) {
  TempDir dir("grid");
  LabelGrid g{VoxelGrid<std::uint16_t>(SmallGeometry(2, 2, 2), 1), 5};
  WriteGrid(g, dir / "l.sscg");
  EXPECT_EQ(ReadGridAs<LabelGrid>(dir / "l.sscg"), g);
}

TEST(Container, BadMagicIsFormatError) {
  TempDir dir("grid");
  ProbOccupancyGrid g{VoxelGrid<float>(SmallGeometry(1, 1, 1), 0.5f)};
  WriteGrid(g, dir / "p.sscg");
  auto bytes = Slurp(dir / "p.sscg");
  std::memcpy(bytes.data(), "XXXX", 4);
  Spit(dir / "p.sscg", bytes);
  EXPECT_THROW(ReadGrid(dir / "p.sscg"), FormatError);
}

TEST(Container, SoftmaxSummingToHalfIsValidationError) {
  TempDir dir("grid");
  SoftmaxGrid g(SmallGeometry(1, 1, 2), 2,
                std::vector<float>{0.5f, 0.5f, 0.25f, 0.75f});
  WriteGrid(g, dir / "s.sscg");
  auto bytes = Slurp(dir / "s.sscg");
  // Halve the last vector in place: (0.125, 0.375).
  const float halved[2] = {0.125f, 0.375f};
  std::memcpy(bytes.data() + bytes.size() - 8, halved, 8);
  Spit(dir / "s.sscg", bytes);
  EXPECT_THROW(ReadGrid(dir / "s.sscg"), ValidationError);
}

TEST(Container, SameGridWrittenTwiceIsByteIdentical) {
  TempDir dir("grid");
  std::mt19937_64 rng(7);
  std::vector<float> probs;
  for (int i = 0; i < 2 * 3 * 4; ++i) {
    auto f = RandomSimplex(rng, 4);
    probs.insert(probs.end(), f.begin(), f.end());
  }
  SoftmaxGrid g(SmallGeometry(2, 3, 4), 4, probs);
  WriteGrid(g, dir / "a.sscg");
  WriteGrid(g, dir / "b.sscg");
  EXPECT_EQ(Slurp(dir / "a.sscg"), Slurp(dir / "b.sscg"));
}

TEST(Container, ZeroDimIsRejectedBeforeWrite) {
  TempDir dir("grid");
  LabelGrid g{VoxelGrid<std::uint16_t>(SmallGeometry(0, 2, 2), 1), 3};
  EXPECT_THROW(WriteGrid(g, dir / "z.sscg"), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir / "z.sscg"));
  EXPECT_FALSE(std::filesystem::exists(dir / "z.sscg.tmp"));
}

TEST(Container, SingleProbVoxelIsHeaderPlusFourBytes) {
  ProbOccupancyGrid g{VoxelGrid<float>(SmallGeometry(1, 1, 1), 0.5f)};
  const auto bytes = EncodeGrid(g);
  ASSERT_GE(bytes.size(), kContainerPreambleBytes);
  EXPECT_EQ(std::memcmp(bytes.data(), "SSCG", 4), 0);
  std::uint32_t version;
  std::uint64_t header_len;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&header_len, bytes.data() + 8, 8);
  EXPECT_EQ(version, 1u);
  EXPECT_EQ(bytes.size(), kContainerPreambleBytes + header_len + 4);
  // 0.5f little-endian.
  const std::uint8_t tail[4] = {0x00, 0x00, 0x00, 0x3f};
  EXPECT_EQ(std::memcmp(bytes.data() + bytes.size() - 4, tail, 4), 0);
  const auto header = nlohmann::json::parse(
      bytes.begin() + kContainerPreambleBytes,
      bytes.begin() + kContainerPreambleBytes + header_len);
  EXPECT_EQ(header.at("kind"), "prob");
  EXPECT_EQ(header.at("dtype"), "float32");
}

TEST(Container, PayloadShorterThanHeaderIsTruncation) {
  BinaryOccupancyGrid g{VoxelGrid<std::uint8_t>(SmallGeometry(2, 2, 2), 1)};
  auto bytes = EncodeGrid(g);
  bytes.pop_back();
  EXPECT_THROW(DecodeGrid(bytes), TruncationError);
  bytes.push_back(1);
  bytes.push_back(1);
  EXPECT_THROW(DecodeGrid(bytes), TruncationError);
}

TEST(Container, HeaderLongerThanFileIsTruncation) {
  BinaryOccupancyGrid g{VoxelGrid<std::uint8_t>(SmallGeometry(1, 1, 1), 0)};
  auto bytes = EncodeGrid(g);
  bytes.resize(kContainerPreambleBytes + 3);
  EXPECT_THROW(DecodeGrid(bytes), TruncationError);
}

TEST(Container, UnknownVersionIsFormatError) {
  BinaryOccupancyGrid g{VoxelGrid<std::uint8_t>(SmallGeometry(1, 1, 1), 0)};
  auto bytes = EncodeGrid(g);
  bytes[4] = 2;
  EXPECT_THROW(DecodeGrid(bytes), FormatError);
}

TEST(Container, LabelOutOfRangeIsValidationError) {
  LabelGrid g{VoxelGrid<std::uint16_t>(SmallGeometry(1, 1, 2), 2), 3};
  auto bytes = EncodeGrid(g);
  bytes[bytes.size() - 2] = 9;  // low byte of the last label
  EXPECT_THROW(DecodeGrid(bytes), ValidationError);
}

TEST(Container, ProbOutsideUnitIntervalRejectedOnWrite) {
  ProbOccupancyGrid g{VoxelGrid<float>(SmallGeometry(1, 1, 1), 1.5f)};
  EXPECT_THROW(EncodeGrid(g), ValidationError);
}

TEST(Container, MissingFileIsIoError) {
  TempDir dir("grid");
  EXPECT_THROW(ReadGrid(dir / "absent.sscg"), IoError);
}

TEST(Container, ReadAsWrongKindIsFormatError) {
  TempDir dir("grid");
  BinaryOccupancyGrid g{VoxelGrid<std::uint8_t>(SmallGeometry(1, 1, 1), 0)};
  WriteGrid(g, dir / "b.sscg");
  EXPECT_THROW(ReadGridAs<LabelGrid>(dir / "b.sscg"), FormatError);
}

// Property: every kind round-trips bit-exactly, for random contents and
// random (non-trivial) geometry.
TEST(ContainerProperty, RandomGridsRoundTripBitExactly) {
  std::mt19937_64 rng(20260101);
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    GridGeometry geom{{static_cast<std::size_t>(dim(rng)),
                       static_cast<std::size_t>(dim(rng)),
                       static_cast<std::size_t>(dim(rng))},
                      0.05 + unit(rng),
                      {unit(rng) - 0.5, -unit(rng), unit(rng) * 3}};
    const std::size_t n = geom.dims.count();

    ProbOccupancyGrid p{VoxelGrid<float>(geom)};
    for (std::size_t i = 0; i < n; ++i) p.values[i] = static_cast<float>(unit(rng));
    EXPECT_EQ(std::get<ProbOccupancyGrid>(DecodeGrid(EncodeGrid(p))), p);

    BinaryOccupancyGrid b{VoxelGrid<std::uint8_t>(geom)};
    for (std::size_t i = 0; i < n; ++i) b.values[i] = unit(rng) < 0.3;
    EXPECT_EQ(std::get<BinaryOccupancyGrid>(DecodeGrid(EncodeGrid(b))), b);

    const int m = 2 + trial % 6;
    LabelGrid l{VoxelGrid<std::uint16_t>(geom, 1), m};
    std::uniform_int_distribution<int> cls(1, m);
    for (std::size_t i = 0; i < n; ++i) l.labels[i] = static_cast<std::uint16_t>(cls(rng));
    EXPECT_EQ(std::get<LabelGrid>(DecodeGrid(EncodeGrid(l))), l);

    std::vector<float> probs;
    for (std::size_t i = 0; i < n; ++i) {
      auto f = RandomSimplex(rng, m);
      probs.insert(probs.end(), f.begin(), f.end());
    }
    SoftmaxGrid s(geom, m, probs);
    EXPECT_EQ(std::get<SoftmaxGrid>(DecodeGrid(EncodeGrid(s))), s);

    const int hh = dim(rng), ww = dim(rng);
    DepthEstimate d{Image<float>(hh, ww), Image<float>(hh, ww)};
    for (std::size_t i = 0; i < d.mean.size(); ++i) {
      if (unit(rng) < 0.8) {
        d.mean.data[i] = static_cast<float>(0.1 + 20 * unit(rng));
        d.sigma.data[i] = static_cast<float>(0.01 + unit(rng));
      }
    }
    EXPECT_EQ(std::get<DepthEstimate>(DecodeGrid(EncodeGrid(d))), d);
  }
}

// Property: decoding never yields an object that fails its own validation,
// whatever single byte of the payload is corrupted.
TEST(ContainerProperty, CorruptedPayloadNeverDecodesToInvalidGrid) {
  std::mt19937_64 rng(3);
  std::vector<float> probs;
  for (int i = 0; i < 8; ++i) {
    auto f = RandomSimplex(rng, 3);
    probs.insert(probs.end(), f.begin(), f.end());
  }
  const SoftmaxGrid s(SmallGeometry(2, 2, 2), 3, probs);
  const auto clean = EncodeGrid(s);
  const std::size_t payload_start = clean.size() - probs.size() * 4;
  std::uniform_int_distribution<int> byte(0, 255);
  for (std::size_t pos = payload_start; pos < clean.size(); ++pos) {
    auto bytes = clean;
    bytes[pos] = static_cast<std::uint8_t>(byte(rng));
    try {
      const AnyGrid g = DecodeGrid(bytes);
      EXPECT_NO_THROW(std::get<SoftmaxGrid>(g).Validate());
    } catch (const ValidationError&) {
    }
  }
}

TEST(DepthEstimate, InvalidPixelMustCarryZeroSigma) {
  DepthEstimate d{Image<float>(1, 2), Image<float>(1, 2)};
  d.mean.data = {3.0f, 0.0f};
  d.sigma.data = {0.5f, 0.0f};
  EXPECT_NO_THROW(d.Validate());
  d.sigma.data[1] = 0.1f;
  EXPECT_THROW(d.Validate(), ValidationError);
  d.sigma.data = {0.0f, 0.0f};
  EXPECT_THROW(d.Validate(), ValidationError);
}

}  // namespace
}  // namespace voxcp
