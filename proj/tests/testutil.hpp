#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rgbdtrack/nn/autograd.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Unique temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() /
           ("rgbdtrack_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
};

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
};

/// Central finite differences against the analytic gradient. loss_fn must
/// rebuild the graph from the leaves' current values on every call.
inline GradCheck gradient_check(const std::function<rgbdtrack::nn::Var()>& loss_fn,
                                const std::vector<std::pair<std::string, rgbdtrack::nn::Var>>& leaves,
                                double h = 1e-5, int max_entries_per_leaf = 32,
                                std::uint64_t seed = 7) {
  using rgbdtrack::nn::Tensor;
  for (auto& [name, leaf] : leaves) leaf->grad = Tensor();
  auto loss = loss_fn();
  rgbdtrack::nn::backward(loss);

  std::vector<std::vector<double>> analytic;
  for (auto& [name, leaf] : leaves) {
    std::vector<double> g(static_cast<std::size_t>(leaf->value.size()), 0.0);
    if (!leaf->grad.empty()) {
      for (std::int64_t i = 0; i < leaf->grad.size(); ++i) g[static_cast<std::size_t>(i)] = leaf->grad[i];
    }
    analytic.push_back(std::move(g));
  }

  GradCheck result;
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    auto& leaf = leaves[k].second;
    const std::int64_t n = leaf->value.size();
    std::vector<std::int64_t> entries;
    if (n <= max_entries_per_leaf) {
      for (std::int64_t i = 0; i < n; ++i) entries.push_back(i);
    } else {
      for (int i = 0; i < max_entries_per_leaf; ++i) {
        entries.push_back(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n)));
      }
    }
    for (std::int64_t idx : entries) {
      const double saved = leaf->value[idx];
      leaf->value[idx] = saved + h;
      const double plus = loss_fn()->value.item();
      leaf->value[idx] = saved - h;
      const double minus = loss_fn()->value.item();
      leaf->value[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[k][static_cast<std::size_t>(idx)];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = leaves[k].first + "[" + std::to_string(idx) + "] analytic=" +
                       std::to_string(a) + " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace testutil
