#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "rgbdtrack/errors.hpp"

namespace rgbdtrack::nn {

/// Dense row-major double tensor, rank 1..4.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);
  static Tensor from(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double v) { return from({1}, {v}); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(i); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::int64_t i) { return data_[i]; }
  double operator[](std::int64_t i) const { return data_[i]; }

  // 2D accessors
  int rows() const { return shape_.at(0); }
  int cols() const { return shape_.at(1); }
  double& at(int r, int c) { return data_[static_cast<std::int64_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data_[static_cast<std::int64_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  double item() const;  // requires size() == 1

  Tensor reshaped(std::vector<int> shape) const;

  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Deterministic random source with standardized output (no reliance on
/// implementation-defined distribution algorithms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);
  double normal();                        // standard normal
  Tensor uniform_tensor(std::vector<int> shape, double lo, double hi);
  Tensor normal_tensor(std::vector<int> shape, double stddev);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rgbdtrack::nn
