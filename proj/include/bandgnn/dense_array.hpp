// Copyright (c) 2026, The bandgnn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Row-major dense tensor with instrumented buffer traffic.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bandgnn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Per-thread counters of buffer allocations and element copies made by
/// DenseArray. Tests use them to check that reshapes move no data.
struct BufferTraffic {
  std::uint64_t allocations = 0;
  std::uint64_t copies = 0;
};
BufferTraffic& buffer_traffic();

template <typename T>
class DenseArray {
 public:
  using value_type = T;

  DenseArray() = default;
  explicit DenseArray(Shape shape, T fill = T{0}) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
    ++buffer_traffic().allocations;
  }
  DenseArray(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
      throw std::invalid_argument("DenseArray: value count does not match shape " + shape_string(shape_));
    }
  }

  DenseArray(const DenseArray& other) : shape_(other.shape_), values_(other.values_) {
    ++buffer_traffic().allocations;
    ++buffer_traffic().copies;
  }
  DenseArray& operator=(const DenseArray& other) {
    if (this != &other) {
      shape_ = other.shape_;
      values_ = other.values_;
      ++buffer_traffic().copies;
    }
    return *this;
  }
  DenseArray(DenseArray&&) noexcept = default;
  DenseArray& operator=(DenseArray&&) noexcept = default;

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  T& at(std::initializer_list<std::size_t> index) { return values_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const { return values_[offset(index)]; }

  /// Reinterprets the buffer under a new shape of equal element count.
  /// Consumes the array so the buffer is moved, never copied.
  DenseArray reshaped(Shape shape) && {
    if (shape_size(shape) != values_.size()) {
      throw std::invalid_argument("reshape " + shape_string(shape_) + " -> " + shape_string(shape) +
                                  " changes element count");
    }
    DenseArray out;
    out.shape_ = std::move(shape);
    out.values_ = std::move(values_);
    shape_.clear();
    return out;
  }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) throw std::out_of_range("DenseArray: index rank mismatch");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      if (i >= shape_[axis]) throw std::out_of_range("DenseArray: index out of range");
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }

  Shape shape_;
  std::vector<T> values_;
};

}  // namespace bandgnn
