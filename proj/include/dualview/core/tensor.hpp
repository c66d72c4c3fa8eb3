#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dualview/core/error.hpp"

namespace dualview {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense weight tensor with an explicit shape; storage is row-major.
class ParamTensor {
 public:
  ParamTensor() = default;

  explicit ParamTensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)) {
    detail::require(!shape_.empty(), "ParamTensor: empty shape");
    for (auto s : shape_) detail::require(s > 0, "ParamTensor: zero dimension");
    values_.assign(shape_size(shape_), fill);
  }

  ParamTensor(std::vector<std::size_t> shape, Vec values) : shape_(std::move(shape)), values_(std::move(values)) {
    detail::require(!shape_.empty(), "ParamTensor: empty shape");
    detail::require(values_.size() == shape_size(shape_), "ParamTensor: value count does not match shape");
    detail::require(all_finite(), "ParamTensor: non-finite value");
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const ParamTensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  Vec values_;
};

/// Which network a parameter belongs to.
enum class ParamRole { Feature, Value };

/// Flat gradient with the map back to (role, tensor, element).
struct GradVector {
  struct Segment {
    ParamRole role;
    std::size_t tensor;
    std::size_t offset;
    std::size_t count;
  };

  Vec values;
  std::vector<Segment> layout;

  std::size_t size() const noexcept { return values.size(); }

  /// Flat position of element `index` of tensor `tensor` in network `role`.
  std::size_t position(ParamRole role, std::size_t tensor, std::size_t index) const {
    for (const auto& s : layout)
      if (s.role == role && s.tensor == tensor) {
        detail::require(index < s.count, "GradVector: element out of range");
        return s.offset + index;
      }
    throw InvalidArgument("GradVector: tensor not in selected subset");
  }
};

inline double dot(const GradVector& a, const GradVector& b) { return dot(a.values, b.values); }

}  // namespace dualview
