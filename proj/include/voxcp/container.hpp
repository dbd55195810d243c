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

// The "SSCG" container: the only on-disk format of the library.
//
//   offset  size  content
//   0       4     magic "SSCG"
//   4       4     version, uint32 little-endian (= 1)
//   8       8     header length L, uint64 little-endian
//   16      L     UTF-8 JSON header
//   16+L    ...   raw little-endian payload, row-major
//
// Header keys: kind, dims, dtype, voxel_edge, origin and, for label and
// softmax grids, class_count. Kinds and payloads:
//
//   "prob"            dims [U,V,D]      float32
//   "binary"          dims [U,V,D]      uint8
//   "label"           dims [U,V,D]      uint16
//   "softmax"         dims [U,V,D]      float32, M values per voxel
//   "depth_estimate"  dims [H,W,C]      float32, C planes: mean[, sigma]
//
// Depth estimates carry no placement; their voxel_edge and origin are null.

#ifndef VOXCP_CONTAINER_HPP_
#define VOXCP_CONTAINER_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "voxcp/error.hpp"
#include "voxcp/types.hpp"

namespace voxcp {

using AnyGrid = std::variant<ProbOccupancyGrid, BinaryOccupancyGrid,
                             SoftmaxGrid, LabelGrid, DepthEstimate>;

inline constexpr std::string_view kContainerMagic = "SSCG";
inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerPreambleBytes = 16;

namespace container_detail {

template <typename T>
void AppendLittleEndian(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <typename T>
T ReadLittleEndian(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

template <typename T>
void AppendArray(std::vector<std::uint8_t>& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    out.insert(out.end(), p, p + values.size_bytes());
  } else {
    for (const T& v : values) AppendLittleEndian(out, v);
  }
}

template <typename T>
std::vector<T> ReadArray(const std::uint8_t* p, std::size_t count) {
  std::vector<T> values(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(values.data(), p, count * sizeof(T));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = ReadLittleEndian<T>(p + i * sizeof(T));
    }
  }
  return values;
}

inline nlohmann::json GeometryHeader(const GridGeometry& g,
                                     std::string_view kind,
                                     std::string_view dtype) {
  nlohmann::json h;
  h["kind"] = kind;
  h["dims"] = {g.dims.u, g.dims.v, g.dims.d};
  h["dtype"] = dtype;
  h["voxel_edge"] = g.voxel_edge;
  h["origin"] = {g.origin.x, g.origin.y, g.origin.z};
  return h;
}

inline GridGeometry GeometryFromHeader(const nlohmann::json& h) {
  const auto& dims = h.at("dims");
  if (!dims.is_array() || dims.size() != 3) {
    throw FormatError("container: grid dims must have three entries");
  }
  const auto& origin = h.at("origin");
  if (!origin.is_array() || origin.size() != 3) {
    throw FormatError("container: origin must have three entries");
  }
  GridGeometry g;
  g.dims = {dims[0].get<std::size_t>(), dims[1].get<std::size_t>(),
            dims[2].get<std::size_t>()};
  g.voxel_edge = h.at("voxel_edge").get<double>();
  g.origin = {origin[0].get<double>(), origin[1].get<double>(),
              origin[2].get<double>()};
  return g;
}

inline void ExpectDtype(const nlohmann::json& h, std::string_view dtype) {
  if (h.at("dtype").get<std::string>() != dtype) {
    throw FormatError("container: kind " + h.at("kind").get<std::string>() +
                      " requires dtype " + std::string(dtype));
  }
}

inline void ExpectPayload(std::size_t have, std::size_t want) {
  if (have != want) {
    throw TruncationError("container: payload is " + std::to_string(have) +
                          " bytes, header implies " + std::to_string(want));
  }
}

struct Encoded {
  nlohmann::json header;
  std::vector<std::uint8_t> payload;
};

inline Encoded Encode(const ProbOccupancyGrid& g) {
  Encoded e{GeometryHeader(g.values.geometry(), "prob", "float32"), {}};
  AppendArray(e.payload, g.values.values());
  return e;
}

inline Encoded Encode(const BinaryOccupancyGrid& g) {
  Encoded e{GeometryHeader(g.values.geometry(), "binary", "uint8"), {}};
  AppendArray(e.payload, g.values.values());
  return e;
}

inline Encoded Encode(const LabelGrid& g) {
  Encoded e{GeometryHeader(g.labels.geometry(), "label", "uint16"), {}};
  e.header["class_count"] = g.num_classes;
  AppendArray(e.payload, g.labels.values());
  return e;
}

inline Encoded Encode(const SoftmaxGrid& g) {
  Encoded e{GeometryHeader(g.geometry(), "softmax", "float32"), {}};
  e.header["class_count"] = g.num_classes();
  AppendArray(e.payload, g.raw());
  return e;
}

inline Encoded Encode(const DepthEstimate& g) {
  Encoded e;
  e.header["kind"] = "depth_estimate";
  e.header["dims"] = {g.height(), g.width(), g.has_sigma() ? 2 : 1};
  e.header["dtype"] = "float32";
  e.header["voxel_edge"] = nullptr;
  e.header["origin"] = nullptr;
  AppendArray(e.payload, std::span<const float>(g.mean.data));
  if (g.has_sigma()) AppendArray(e.payload, std::span<const float>(g.sigma.data));
  return e;
}

inline AnyGrid Decode(const nlohmann::json& h, const std::uint8_t* payload,
                      std::size_t payload_size) {
  const std::string kind = h.at("kind").get<std::string>();
  if (kind == "prob" || kind == "binary" || kind == "label" ||
      kind == "softmax") {
    const GridGeometry geom = GeometryFromHeader(h);
    geom.Validate();
    const std::size_t n = geom.dims.count();
    if (kind == "prob") {
      ExpectDtype(h, "float32");
      ExpectPayload(payload_size, n * sizeof(float));
      ProbOccupancyGrid g{VoxelGrid<float>(geom, ReadArray<float>(payload, n))};
      g.Validate();
      return g;
    }
    if (kind == "binary") {
      ExpectDtype(h, "uint8");
      ExpectPayload(payload_size, n);
      BinaryOccupancyGrid g{
          VoxelGrid<std::uint8_t>(geom, ReadArray<std::uint8_t>(payload, n))};
      g.Validate();
      return g;
    }
    const int classes = h.at("class_count").get<int>();
    if (classes < 2) throw ValidationError("container: class_count < 2");
    if (kind == "label") {
      ExpectDtype(h, "uint16");
      ExpectPayload(payload_size, n * sizeof(std::uint16_t));
      LabelGrid g{VoxelGrid<std::uint16_t>(
                      geom, ReadArray<std::uint16_t>(payload, n)),
                  classes};
      g.Validate();
      return g;
    }
    ExpectDtype(h, "float32");
    const std::size_t values = n * static_cast<std::size_t>(classes);
    ExpectPayload(payload_size, values * sizeof(float));
    SoftmaxGrid g(geom, classes, ReadArray<float>(payload, values));
    g.Validate();
    return g;
  }
  if (kind == "depth_estimate") {
    ExpectDtype(h, "float32");
    const auto& dims = h.at("dims");
    if (!dims.is_array() || dims.size() != 3) {
      throw FormatError("container: depth dims must be [H, W, C]");
    }
    const int height = dims[0].get<int>();
    const int width = dims[1].get<int>();
    const int planes = dims[2].get<int>();
    if (height < 1 || width < 1 || (planes != 1 && planes != 2)) {
      throw ValidationError("container: bad depth estimate dims");
    }
    const std::size_t n = static_cast<std::size_t>(height) * width;
    ExpectPayload(payload_size, n * planes * sizeof(float));
    DepthEstimate est;
    est.mean = Image<float>(height, width);
    est.mean.data = ReadArray<float>(payload, n);
    if (planes == 2) {
      est.sigma = Image<float>(height, width);
      est.sigma.data = ReadArray<float>(payload + n * sizeof(float), n);
    }
    est.Validate();
    return est;
  }
  throw FormatError("container: unknown kind '" + kind + "'");
}

}  // namespace container_detail

// Serializes a grid into a byte buffer. Validates first; identical input
// yields identical bytes.
template <typename Grid>
std::vector<std::uint8_t> EncodeGrid(const Grid& grid) {
  grid.Validate();
  auto [header, payload] = container_detail::Encode(grid);
  const std::string text = header.dump();
  std::vector<std::uint8_t> out;
  out.reserve(kContainerPreambleBytes + text.size() + payload.size());
  out.insert(out.end(), kContainerMagic.begin(), kContainerMagic.end());
  container_detail::AppendLittleEndian<std::uint32_t>(out, kContainerVersion);
  container_detail::AppendLittleEndian<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline std::vector<std::uint8_t> EncodeGrid(const AnyGrid& grid) {
  return std::visit([](const auto& g) { return EncodeGrid(g); }, grid);
}

inline AnyGrid DecodeGrid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kContainerPreambleBytes ||
      std::memcmp(bytes.data(), kContainerMagic.data(), 4) != 0) {
    throw FormatError("container: missing SSCG magic");
  }
  const auto version =
      container_detail::ReadLittleEndian<std::uint32_t>(bytes.data() + 4);
  if (version != kContainerVersion) {
    throw FormatError("container: unsupported version " +
                      std::to_string(version));
  }
  const auto header_size =
      container_detail::ReadLittleEndian<std::uint64_t>(bytes.data() + 8);
  if (header_size > bytes.size() - kContainerPreambleBytes) {
    throw TruncationError("container: header extends past end of file");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(
        bytes.begin() + kContainerPreambleBytes,
        bytes.begin() + kContainerPreambleBytes + header_size);
    const std::size_t offset = kContainerPreambleBytes + header_size;
    return container_detail::Decode(header, bytes.data() + offset,
                                    bytes.size() - offset);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("container: bad header: ") + e.what());
  }
}

// Writes through a temporary sibling file and renames it into place, so a
// failed write never leaves a partial container at `path`.
template <typename Grid>
void WriteGrid(const Grid& grid, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = EncodeGrid(grid);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move container into " + path.string());
  }
}

inline AnyGrid ReadGrid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeGrid(bytes);
}

// Reads a container and insists on a particular kind.
template <typename Grid>
Grid ReadGridAs(const std::filesystem::path& path) {
  AnyGrid any = ReadGrid(path);
  if (auto* g = std::get_if<Grid>(&any)) return std::move(*g);
  throw FormatError(path.string() + ": container holds a different kind");
}

}  // namespace voxcp

#endif  // VOXCP_CONTAINER_HPP_
