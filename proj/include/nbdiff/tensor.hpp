#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "nbdiff/common.hpp"

namespace nbdiff {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// C x H x W layout; element (c, y, x) lives at index (c*h + y)*w + x.
struct TensorShape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t size() const {
    return static_cast<std::int64_t>(c) * h * w;
  }
  std::int64_t plane() const {
    return static_cast<std::int64_t>(h) * w;
  }
  bool operator==(const TensorShape&) const = default;

  std::string str() const {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
  }
};

/// Dense image tensor over a scalar type. Flat storage, shape on the side.
template <typename Scalar>
struct ImageT {
  TensorShape shape;
  ArrayX<Scalar> data;

  ImageT() = default;
  explicit ImageT(TensorShape s) : shape(s), data(ArrayX<Scalar>::Zero(s.size())) {}
  ImageT(TensorShape s, ArrayX<Scalar> d) : shape(s), data(std::move(d)) {
    if (data.size() != shape.size())
      throw Error("image data size " + std::to_string(data.size()) +
                  " does not match shape " + shape.str());
  }

  Scalar& at(int c, int y, int x) {
    return data[(static_cast<std::int64_t>(c) * shape.h + y) * shape.w + x];
  }
  Scalar at(int c, int y, int x) const {
    return data[(static_cast<std::int64_t>(c) * shape.h + y) * shape.w + x];
  }

  bool all_finite() const {
    return data.isFinite().all();
  }

  template <typename T>
  ImageT<T> cast() const {
    return ImageT<T>(shape, data.template cast<T>());
  }
};

using Image = ImageT<float>;
using ImageD = ImageT<double>;

inline void require_same_shape(const TensorShape& a, const TensorShape& b,
                               const char* what) {
  if (!(a == b))
    throw Error(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

/// H x W map of small integer labels (class ids).
struct LabelMap {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> v;

  LabelMap() = default;
  LabelMap(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0) {}

  std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
  bool operator==(const LabelMap&) const = default;
};

/// H x W binary map (edge bitmap).
using BitMap = LabelMap;

}  // namespace nbdiff
