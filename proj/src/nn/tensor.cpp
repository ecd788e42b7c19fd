#include "rgbdtrack/nn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace rgbdtrack::nn {

namespace {

std::int64_t shape_size(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 4) throw InputError("Tensor: rank must be 1..4");
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw InputError("Tensor: dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(shape_size(shape_)), 0.0);
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  Tensor t;
  t.shape_ = std::move(shape);
  if (shape_size(t.shape_) != static_cast<std::int64_t>(values.size())) {
    throw InputError("Tensor::from: value count does not match shape");
  }
  t.data_ = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::item() const {
  if (size() != 1) throw InputError("Tensor::item: tensor has " + std::to_string(size()) + " elements");
  return data_[0];
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  if (shape_size(shape) != size()) {
    throw InputError("Tensor::reshaped: element count mismatch");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Rng::Rng(std::uint64_t seed) : state_(seed ^ 0x853c49e6748fea9bULL) {
  next_u64();
  next_u64();
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller
  double u1 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(6.28318530717958648 * u2);
  has_spare_ = true;
  return mag * std::cos(6.28318530717958648 * u2);
}

Tensor Rng::uniform_tensor(std::vector<int> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
  return t;
}

Tensor Rng::normal_tensor(std::vector<int> shape, double stddev) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = stddev * normal();
  return t;
}

}  // namespace rgbdtrack::nn
