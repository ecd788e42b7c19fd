#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rgbdtrack/nn/tensor.hpp"

namespace rgbdtrack::nn {

struct Node;
using Var = std::shared_ptr<Node>;

/// One vertex of the eagerly-built computation graph.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use during backward
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;  // pushes this->grad into parents

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

Var make_input(Tensor value, bool requires_grad = false);
Var make_param(Tensor value);
Var constant(Tensor value);

/// Reverse-mode sweep from a scalar root (seeds d(root)/d(root) = 1).
void backward(const Var& root);

// ---- elementwise / arithmetic ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div_elem(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var abs_elem(const Var& a);
Var max_elem(const Var& a, const Var& b);
Var min_elem(const Var& a, const Var& b);
Var add_n(const std::vector<Var>& terms);

// ---- linear algebra (2D) ----
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

// ---- shape ----
Var reshape(const Var& a, std::vector<int> shape);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int start, int len);
Var slice_cols(const Var& a, int start, int len);
Var tokens_to_chw(const Var& tokens, int height, int width);  // [H*W,C] -> [C,H,W]
Var chw_to_tokens(const Var& grid);                           // [C,H,W] -> [H*W,C]

// ---- reductions ----
Var sum_all(const Var& a);   // -> [1]
Var mean_all(const Var& a);  // -> [1]

// ---- row/column broadcasts (2D) ----
Var add_rows(const Var& x, const Var& bias);   // bias [C] or [1,C], added to every row
Var mul_rows(const Var& x, const Var& gain);   // gain [C] or [1,C]
Var row_scale(const Var& x, const Var& s);     // s [L] or [L,1], scales row i by s_i
Var row_shift(const Var& x, const Var& s);     // adds s_i to every element of row i

// ---- normalization / nonlinearity ----
Var softmax_rows(const Var& x);
/// Normalizes each row to zero mean / unit variance (no affine part).
Var norm_rows(const Var& x, double eps = 1e-5);
/// Row normalization followed by per-column affine (transformer layer norm).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
/// Per-channel spatial normalization with per-channel affine, x is [C,H,W].
Var channel_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// ---- spatial ----
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var maxpool2d(const Var& x, int kernel, int stride, int pad);

/// Named trainable tensors with deterministic initialization.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : rng_(seed) {}

  Var zeros(const std::string& name, std::vector<int> shape);
  Var ones(const std::string& name, std::vector<int> shape);
  /// Uniform Xavier/Glorot; fan computed from linear or conv shapes.
  Var xavier(const std::string& name, std::vector<int> shape);
  Var normal(const std::string& name, std::vector<int> shape, double stddev);

  Var get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  const std::map<std::string, Var>& all() const { return params_; }

  void zero_grad();
  /// Copies values from every "src_prefix..." param into "dst_prefix...".
  void copy_prefix(const std::string& src_prefix, const std::string& dst_prefix);

  Rng& rng() { return rng_; }

 private:
  Var insert(const std::string& name, Tensor value);
  std::map<std::string, Var> params_;
  Rng rng_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig cfg);
  void step();
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace rgbdtrack::nn
