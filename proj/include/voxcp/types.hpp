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

#ifndef VOXCP_TYPES_HPP_
#define VOXCP_TYPES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "voxcp/error.hpp"

namespace voxcp {

// Classes are numbered 1..M; class 1 is "empty".
using ClassId = int;
inline constexpr ClassId kEmptyClass = 1;

// Softmax vectors must sum to one within this tolerance (absorbs float32
// round-off after serialization).
inline constexpr double kSoftmaxTolerance = 1e-5;

// Pinhole model. Note the row index h maps to the camera x axis and the
// column index w to the y axis; see pixel_to_point().
struct CameraIntrinsics {
  double f_u = 1.0;
  double f_v = 1.0;
  double c_h = 0.0;
  double c_w = 0.0;
  int height = 1;
  int width = 1;

  void Validate() const {
    if (!(height >= 1 && width >= 1)) {
      throw ValidationError("intrinsics: image must be at least 1x1");
    }
    if (!(f_u > 0.0 && f_v > 0.0) || !std::isfinite(f_u) ||
        !std::isfinite(f_v)) {
      throw ValidationError("intrinsics: focal lengths must be positive");
    }
    if (!(c_h >= 0.0 && c_h < height && c_w >= 0.0 && c_w < width)) {
      throw ValidationError("intrinsics: principal point outside the image");
    }
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Vec3&) const = default;
};

// Voxel counts. u runs along camera x (image rows, "height"), v along
// camera y (image columns, "width") and d along camera z (depth, "length").
struct GridDims {
  std::size_t u = 0;
  std::size_t v = 0;
  std::size_t d = 0;

  std::size_t count() const { return u * v * d; }
  bool operator==(const GridDims&) const = default;
};

struct VoxelIndex {
  std::size_t u = 0;
  std::size_t v = 0;
  std::size_t d = 0;
  bool operator==(const VoxelIndex&) const = default;
};

// Placement of the voxel lattice in the camera frame. Voxel (u, v, d) covers
// the half-open box origin + edge * [u, u+1) x [v, v+1) x [d, d+1).
struct GridGeometry {
  GridDims dims;
  double voxel_edge = 0.2;
  Vec3 origin;

  void Validate() const {
    if (dims.u < 1 || dims.v < 1 || dims.d < 1) {
      throw ValidationError("geometry: every grid dimension must be >= 1");
    }
    if (!(voxel_edge > 0.0) || !std::isfinite(voxel_edge)) {
      throw ValidationError("geometry: voxel_edge must be positive");
    }
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y) ||
        !std::isfinite(origin.z)) {
      throw ValidationError("geometry: origin must be finite");
    }
    const double extent =
        voxel_edge * static_cast<double>(std::max({dims.u, dims.v, dims.d}));
    if (!std::isfinite(extent)) {
      throw ValidationError("geometry: grid volume is not finite");
    }
  }

  std::size_t Flat(std::size_t u, std::size_t v, std::size_t d) const {
    return (u * dims.v + v) * dims.d + d;
  }
  std::size_t Flat(const VoxelIndex& i) const { return Flat(i.u, i.v, i.d); }

  VoxelIndex Unflat(std::size_t flat) const {
    VoxelIndex i;
    i.d = flat % dims.d;
    flat /= dims.d;
    i.v = flat % dims.v;
    i.u = flat / dims.v;
    return i;
  }

  bool operator==(const GridGeometry&) const = default;
};

// Dense U x V x D array stored row-major as [u][v][d].
template <typename T>
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(const GridGeometry& geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.dims.count(), fill) {}
  VoxelGrid(const GridGeometry& geometry, std::vector<T> data)
      : geometry_(geometry), data_(std::move(data)) {
    if (data_.size() != geometry_.dims.count()) {
      throw ValidationError("voxel grid: payload size does not match dims");
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  const GridDims& dims() const { return geometry_.dims; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }
  T& at(std::size_t u, std::size_t v, std::size_t d) {
    return data_[geometry_.Flat(u, v, d)];
  }
  const T& at(std::size_t u, std::size_t v, std::size_t d) const {
    return data_[geometry_.Flat(u, v, d)];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool operator==(const VoxelGrid&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<T> data_;
};

// Occupancy probabilities in [0, 1].
struct ProbOccupancyGrid {
  VoxelGrid<float> values;

  void Validate() const {
    values.geometry().Validate();
    for (float p : values.values()) {
      if (!(p >= 0.0f && p <= 1.0f)) {
        throw ValidationError("probability grid: value outside [0, 1]");
      }
    }
  }
  bool operator==(const ProbOccupancyGrid&) const = default;
};

struct BinaryOccupancyGrid {
  VoxelGrid<std::uint8_t> values;

  void Validate() const {
    values.geometry().Validate();
    for (std::uint8_t b : values.values()) {
      if (b > 1) throw ValidationError("binary grid: value outside {0, 1}");
    }
  }
  bool operator==(const BinaryOccupancyGrid&) const = default;
};

struct LabelGrid {
  VoxelGrid<std::uint16_t> labels;
  int num_classes = 2;

  void Validate() const {
    labels.geometry().Validate();
    if (num_classes < 2) {
      throw ValidationError("label grid: need at least two classes");
    }
    for (std::uint16_t y : labels.values()) {
      if (y < 1 || y > num_classes) {
        throw ValidationError("label grid: label " + std::to_string(y) +
                              " outside 1.." + std::to_string(num_classes));
      }
    }
  }
  bool operator==(const LabelGrid&) const = default;
};

// Per-voxel class-probability vectors, stored [u][v][d][class].
class SoftmaxGrid {
 public:
  SoftmaxGrid() = default;
  SoftmaxGrid(const GridGeometry& geometry, int num_classes)
      : geometry_(geometry),
        num_classes_(num_classes),
        probs_(geometry.dims.count() * static_cast<std::size_t>(num_classes),
               0.0f) {}
  SoftmaxGrid(const GridGeometry& geometry, int num_classes,
              std::vector<float> probs)
      : geometry_(geometry), num_classes_(num_classes), probs_(std::move(probs)) {
    if (probs_.size() !=
        geometry_.dims.count() * static_cast<std::size_t>(num_classes_)) {
      throw ValidationError("softmax grid: payload size does not match dims");
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  int num_classes() const { return num_classes_; }
  std::size_t voxel_count() const { return geometry_.dims.count(); }

  std::span<const float> at(std::size_t flat) const {
    return {probs_.data() + flat * num_classes_,
            static_cast<std::size_t>(num_classes_)};
  }
  std::span<float> at(std::size_t flat) {
    return {probs_.data() + flat * num_classes_,
            static_cast<std::size_t>(num_classes_)};
  }
  std::span<const float> raw() const { return probs_; }

  void Validate() const {
    geometry_.Validate();
    if (num_classes_ < 2) {
      throw ValidationError("softmax grid: need at least two classes");
    }
    for (std::size_t i = 0; i < voxel_count(); ++i) {
      ValidateVector(at(i));
    }
  }

  static void ValidateVector(std::span<const float> f) {
    double sum = 0.0;
    for (float p : f) {
      if (!(p >= 0.0f) || !std::isfinite(p)) {
        throw ValidationError("softmax: negative or non-finite entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSoftmaxTolerance) {
      throw ValidationError("softmax: vector sums to " + std::to_string(sum));
    }
  }

  bool operator==(const SoftmaxGrid&) const = default;

 private:
  GridGeometry geometry_;
  int num_classes_ = 0;
  std::vector<float> probs_;
};

// H x W image stored row-major as [h][w].
template <typename T>
struct Image {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Image() = default;
  Image(int h, int w, T fill = T{})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const { return data.size(); }
  T& operator()(int h, int w) { return data[static_cast<std::size_t>(h) * width + w]; }
  const T& operator()(int h, int w) const {
    return data[static_cast<std::size_t>(h) * width + w];
  }
  bool operator==(const Image&) const = default;
};

// Per-pixel Gaussian depth estimate. A pixel is valid iff its mean is > 0;
// invalid pixels carry mean = sigma = 0. `sigma` may be empty when only a
// point estimate is available (binary projection only).
struct DepthEstimate {
  Image<float> mean;
  Image<float> sigma;

  int height() const { return mean.height; }
  int width() const { return mean.width; }
  bool has_sigma() const { return !sigma.data.empty(); }
  bool valid(std::size_t i) const { return mean.data[i] > 0.0f; }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < mean.size(); ++i) n += valid(i) ? 1 : 0;
    return n;
  }

  void Validate() const {
    if (mean.height < 1 || mean.width < 1) {
      throw ValidationError("depth estimate: empty image");
    }
    if (has_sigma() &&
        (sigma.height != mean.height || sigma.width != mean.width)) {
      throw ValidationError("depth estimate: mean/sigma dims differ");
    }
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const float m = mean.data[i];
      const float s = has_sigma() ? sigma.data[i] : 0.0f;
      if (!std::isfinite(m) || !std::isfinite(s)) {
        throw ValidationError("depth estimate: non-finite value");
      }
      if (m > 0.0f) {
        if (has_sigma() && !(s > 0.0f)) {
          throw ValidationError("depth estimate: sigma <= 0 on a valid pixel");
        }
      } else if (m != 0.0f || s != 0.0f) {
        throw ValidationError(
            "depth estimate: invalid pixels must carry mean = sigma = 0");
      }
    }
  }

  void ValidateAgainst(const CameraIntrinsics& intr) const {
    Validate();
    if (mean.height != intr.height || mean.width != intr.width) {
      throw ValidationError("depth estimate: dims differ from intrinsics");
    }
  }

  bool operator==(const DepthEstimate&) const = default;
};

// Ground-truth depth; valid iff depth > 0.
struct GroundTruthDepth {
  Image<float> depth;

  bool valid(std::size_t i) const { return depth.data[i] > 0.0f; }
  bool operator==(const GroundTruthDepth&) const = default;
};

}  // namespace voxcp

#endif  // VOXCP_TYPES_HPP_
