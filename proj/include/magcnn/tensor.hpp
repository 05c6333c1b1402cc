#pragma once

#include <cassert>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "magcnn/common.hpp"

namespace magcnn {

// Dense row-major tensor of 64-bit reals.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> d)
      : dims(std::move(d)), values(count_of(dims), 0.0) {}

  static std::size_t count_of(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return dims.size(); }
  double* data() { return values.data(); }
  const double* data() const { return values.data(); }

  double& at1(std::size_t i) {
    assert(rank() == 1);
    return values[i];
  }
  double at1(std::size_t i) const {
    assert(rank() == 1);
    return values[i];
  }
  double& at2(std::size_t i, std::size_t j) {
    assert(rank() == 2);
    return values[i * dims[1] + j];
  }
  double at2(std::size_t i, std::size_t j) const {
    assert(rank() == 2);
    return values[i * dims[1] + j];
  }
  double& at3(std::size_t i, std::size_t j, std::size_t k) {
    assert(rank() == 3);
    return values[(i * dims[1] + j) * dims[2] + k];
  }
  double at3(std::size_t i, std::size_t j, std::size_t k) const {
    assert(rank() == 3);
    return values[(i * dims[1] + j) * dims[2] + k];
  }

  void zero() { values.assign(values.size(), 0.0); }

  bool same_shape(const Tensor& other) const { return dims == other.dims; }
};

inline std::string shape_string(const Tensor& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.dims[i]);
  }
  s += ")";
  return s;
}

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* where) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(where) + ": shape mismatch " +
                     shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace magcnn
