#include "rgbdtrack/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/Dense>

namespace rgbdtrack::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap as_mat(const Tensor& t) {
  if (t.ndim() != 2) throw InputError("expected 2D tensor, got " + t.shape_string());
  return ConstMatMap(t.data(), t.rows(), t.cols());
}

MatMap as_mat(Tensor& t) {
  if (t.ndim() != 2) throw InputError("expected 2D tensor, got " + t.shape_string());
  return MatMap(t.data(), t.rows(), t.cols());
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->parents = std::move(parents);
  node->requires_grad = std::any_of(node->parents.begin(), node->parents.end(),
                                    [](const Var& p) { return p->requires_grad; });
  if (node->requires_grad) node->backward_fn = std::move(fn);
  return node;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value)) {
    throw InputError(std::string(op) + ": shape mismatch " + a->value.shape_string() + " vs " +
                     b->value.shape_string());
  }
}

// Flat vector length for 1D-or-column-vector arguments.
std::int64_t vec_len(const Var& v) { return v->value.size(); }

}  // namespace

Var make_input(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

Var make_param(Tensor value) { return make_input(std::move(value), true); }

Var constant(Tensor value) { return make_input(std::move(value), false); }

void backward(const Var& root) {
  if (root->value.size() != 1) throw InputError("backward: root must be scalar");
  if (!root->requires_grad) return;

  // iterative post-order topological sort
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next].get();
      ++next;
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      auto& ga = a->ensure_grad();
      for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (std::int64_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      auto& ga = a->ensure_grad();
      for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (std::int64_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      auto& ga = a->ensure_grad();
      for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * b->value[i];
    }
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (std::int64_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * a->value[i];
    }
  });
}

Var div_elem(const Var& a, const Var& b) {
  check_same_shape(a, b, "div");
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] /= b->value[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      auto& ga = a->ensure_grad();
      for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] / b->value[i];
    }
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (std::int64_t i = 0; i < gb.size(); ++i) {
        gb[i] -= self.grad[i] * a->value[i] / (b->value[i] * b->value[i]);
      }
    }
  });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double s) {
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= s;
  return make_node(std::move(out), {a}, [a, s](Node& self) {
    auto& ga = a->ensure_grad();
    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * s;
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += s;
  return make_node(std::move(out), {a}, [a](Node& self) {
    auto& ga = a->ensure_grad();
    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

Var relu(const Var& a) {
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  return make_node(std::move(out), {a}, [a](Node& self) {
    auto& ga = a->ensure_grad();
    for (std::int64_t i = 0; i < ga.size(); ++i) {
      if (a->value[i] > 0.0) ga[i] += self.grad[i];
    }
  });
}

Var abs_elem(const Var& a) {
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::abs(out[i]);
  return make_node(std::move(out), {a}, [a](Node& self) {
    auto& ga = a->ensure_grad();
    for (std::int64_t i = 0; i < ga.size(); ++i) {
      const double x = a->value[i];
      if (x > 0.0) {
        ga[i] += self.grad[i];
      } else if (x < 0.0) {
        ga[i] -= self.grad[i];
      }
    }
  });
}

Var max_elem(const Var& a, const Var& b) {
  check_same_shape(a, b, "max_elem");
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], b->value[i]);
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::int64_t i = 0; i < self.grad.size(); ++i) {
      const bool from_a = a->value[i] >= b->value[i];
      Var target = from_a ? a : b;
      if (target->requires_grad) target->ensure_grad()[i] += self.grad[i];
    }
  });
}

Var min_elem(const Var& a, const Var& b) {
  check_same_shape(a, b, "min_elem");
  Tensor out = a->value;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], b->value[i]);
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::int64_t i = 0; i < self.grad.size(); ++i) {
      const bool from_a = a->value[i] <= b->value[i];
      Var target = from_a ? a : b;
      if (target->requires_grad) target->ensure_grad()[i] += self.grad[i];
    }
  });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw InputError("add_n: no terms");
  Tensor out = terms[0]->value;
  for (std::size_t k = 1; k < terms.size(); ++k) {
    check_same_shape(terms[0], terms[k], "add_n");
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] += terms[k]->value[i];
  }
  return make_node(std::move(out), terms, [terms](Node& self) {
    for (const auto& t : terms) {
      if (!t->requires_grad) continue;
      auto& g = t->ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.ndim() != 2 || b->value.ndim() != 2 || a->value.cols() != b->value.rows()) {
    throw InputError("matmul: incompatible shapes " + a->value.shape_string() + " x " +
                     b->value.shape_string());
  }
  Tensor out({a->value.rows(), b->value.cols()});
  as_mat(out) = as_mat(a->value) * as_mat(b->value);
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) {
      as_mat(a->ensure_grad()) += as_mat(self.grad) * as_mat(b->value).transpose();
    }
    if (b->requires_grad) {
      as_mat(b->ensure_grad()) += as_mat(a->value).transpose() * as_mat(self.grad);
    }
  });
}

Var transpose(const Var& a) {
  Tensor out({a->value.cols(), a->value.rows()});
  as_mat(out) = as_mat(a->value).transpose();
  return make_node(std::move(out), {a}, [a](Node& self) {
    as_mat(a->ensure_grad()) += as_mat(self.grad).transpose();
  });
}

Var reshape(const Var& a, std::vector<int> shape) {
  Tensor out = a->value.reshaped(std::move(shape));
  return make_node(std::move(out), {a}, [a](Node& self) {
    auto& ga = a->ensure_grad();
    for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_rows: empty");
  const int cols = parts[0]->value.cols();
  int rows = 0;
  for (const auto& p : parts) {
    if (p->value.ndim() != 2 || p->value.cols() != cols) {
      throw InputError("concat_rows: column mismatch");
    }
    rows += p->value.rows();
  }
  Tensor out({rows, cols});
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data(), p->value.data() + p->value.size(), out.data() + offset);
    offset += p->value.size();
  }
  return make_node(std::move(out), parts, [parts](Node& self) {
    std::int64_t offset = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += p->value.size();
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_cols: empty");
  const int rows = parts[0]->value.rows();
  int cols = 0;
  for (const auto& p : parts) {
    if (p->value.ndim() != 2 || p->value.rows() != rows) throw InputError("concat_cols: row mismatch");
    cols += p->value.cols();
  }
  Tensor out({rows, cols});
  int col_offset = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < p->value.cols(); ++c) out.at(r, col_offset + c) = p->value.at(r, c);
    }
    col_offset += p->value.cols();
  }
  return make_node(std::move(out), parts, [parts, rows](Node& self) {
    int col_offset = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < p->value.cols(); ++c) {
            g[static_cast<std::int64_t>(r) * p->value.cols() + c] +=
                self.grad.at(r, col_offset + c);
          }
        }
      }
      col_offset += p->value.cols();
    }
  });
}

Var slice_rows(const Var& a, int start, int len) {
  const int rows = a->value.rows();
  const int cols = a->value.cols();
  if (start < 0 || len <= 0 || start + len > rows) throw InputError("slice_rows: out of range");
  Tensor out({len, cols});
  std::copy(a->value.data() + static_cast<std::int64_t>(start) * cols,
            a->value.data() + static_cast<std::int64_t>(start + len) * cols, out.data());
  return make_node(std::move(out), {a}, [a, start, cols](Node& self) {
    auto& g = a->ensure_grad();
    const std::int64_t base = static_cast<std::int64_t>(start) * cols;
    for (std::int64_t i = 0; i < self.grad.size(); ++i) g[base + i] += self.grad[i];
  });
}

Var slice_cols(const Var& a, int start, int len) {
  const int rows = a->value.rows();
  const int cols = a->value.cols();
  if (start < 0 || len <= 0 || start + len > cols) throw InputError("slice_cols: out of range");
  Tensor out({rows, len});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < len; ++c) out.at(r, c) = a->value.at(r, start + c);
  }
  return make_node(std::move(out), {a}, [a, start, rows, len](Node& self) {
    auto& g = a->ensure_grad();
    const int cols = a->value.cols();
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < len; ++c) {
        g[static_cast<std::int64_t>(r) * cols + start + c] += self.grad.at(r, c);
      }
    }
  });
}

Var tokens_to_chw(const Var& tokens, int height, int width) {
  const int n = tokens->value.rows();
  const int channels = tokens->value.cols();
  if (n != height * width) throw InputError("tokens_to_chw: token count != H*W");
  Tensor out({channels, height, width});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      out[static_cast<std::int64_t>(c) * n + i] = tokens->value.at(i, c);
    }
  }
  return make_node(std::move(out), {tokens}, [tokens, n, channels](Node& self) {
    auto& g = tokens->ensure_grad();
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < channels; ++c) {
        g[static_cast<std::int64_t>(i) * channels + c] += self.grad[static_cast<std::int64_t>(c) * n + i];
      }
    }
  });
}

Var chw_to_tokens(const Var& grid) {
  if (grid->value.ndim() != 3) throw InputError("chw_to_tokens: expected [C,H,W]");
  const int channels = grid->value.dim(0);
  const int n = grid->value.dim(1) * grid->value.dim(2);
  Tensor out({n, channels});
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < n; ++i) {
      out.at(i, c) = grid->value[static_cast<std::int64_t>(c) * n + i];
    }
  }
  return make_node(std::move(out), {grid}, [grid, n, channels](Node& self) {
    auto& g = grid->ensure_grad();
    for (int c = 0; c < channels; ++c) {
      for (int i = 0; i < n; ++i) {
        g[static_cast<std::int64_t>(c) * n + i] += self.grad.at(i, c);
      }
    }
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (std::int64_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  return make_node(Tensor::scalar(s), {a}, [a](Node& self) {
    auto& g = a->ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

Var mean_all(const Var& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a->value.size())); }

Var add_rows(const Var& x, const Var& bias) {
  const int cols = x->value.cols();
  if (vec_len(bias) != cols) throw InputError("add_rows: bias length mismatch");
  Tensor out = x->value;
  const int rows = x->value.rows();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.at(r, c) += bias->value[c];
  }
  return make_node(std::move(out), {x, bias}, [x, bias, rows, cols](Node& self) {
    if (x->requires_grad) {
      auto& gx = x->ensure_grad();
      for (std::int64_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    }
    if (bias->requires_grad) {
      auto& gb = bias->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) gb[c] += self.grad.at(r, c);
      }
    }
  });
}

Var mul_rows(const Var& x, const Var& gain) {
  const int cols = x->value.cols();
  if (vec_len(gain) != cols) throw InputError("mul_rows: gain length mismatch");
  Tensor out = x->value;
  const int rows = x->value.rows();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.at(r, c) *= gain->value[c];
  }
  return make_node(std::move(out), {x, gain}, [x, gain, rows, cols](Node& self) {
    if (x->requires_grad) {
      auto& gx = x->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) gx[static_cast<std::int64_t>(r) * cols + c] += self.grad.at(r, c) * gain->value[c];
      }
    }
    if (gain->requires_grad) {
      auto& gg = gain->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) gg[c] += self.grad.at(r, c) * x->value.at(r, c);
      }
    }
  });
}

Var row_scale(const Var& x, const Var& s) {
  const int rows = x->value.rows();
  const int cols = x->value.cols();
  if (vec_len(s) != rows) throw InputError("row_scale: scale length mismatch");
  Tensor out = x->value;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.at(r, c) *= s->value[r];
  }
  return make_node(std::move(out), {x, s}, [x, s, rows, cols](Node& self) {
    if (x->requires_grad) {
      auto& gx = x->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) gx[static_cast<std::int64_t>(r) * cols + c] += self.grad.at(r, c) * s->value[r];
      }
    }
    if (s->requires_grad) {
      auto& gs = s->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += self.grad.at(r, c) * x->value.at(r, c);
        gs[r] += acc;
      }
    }
  });
}

Var row_shift(const Var& x, const Var& s) {
  const int rows = x->value.rows();
  const int cols = x->value.cols();
  if (vec_len(s) != rows) throw InputError("row_shift: shift length mismatch");
  Tensor out = x->value;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.at(r, c) += s->value[r];
  }
  return make_node(std::move(out), {x, s}, [x, s, rows, cols](Node& self) {
    if (x->requires_grad) {
      auto& gx = x->ensure_grad();
      for (std::int64_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    }
    if (s->requires_grad) {
      auto& gs = s->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += self.grad.at(r, c);
        gs[r] += acc;
      }
    }
  });
}

Var softmax_rows(const Var& x) {
  const int rows = x->value.rows();
  const int cols = x->value.cols();
  Tensor out = x->value;
  for (int r = 0; r < rows; ++r) {
    double mx = -1e300;
    for (int c = 0; c < cols; ++c) mx = std::max(mx, out.at(r, c));
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - mx);
      sum += out.at(r, c);
    }
    for (int c = 0; c < cols; ++c) out.at(r, c) /= sum;
  }
  return make_node(std::move(out), {x}, [x, rows, cols](Node& self) {
    auto& gx = x->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += self.grad.at(r, c) * self.value.at(r, c);
      for (int c = 0; c < cols; ++c) {
        gx[static_cast<std::int64_t>(r) * cols + c] +=
            self.value.at(r, c) * (self.grad.at(r, c) - dot);
      }
    }
  });
}

Var norm_rows(const Var& x, double eps) {
  const int rows = x->value.rows();
  const int cols = x->value.cols();
  Tensor out({rows, cols});
  Tensor inv_sigma({rows});
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += x->value.at(r, c);
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double d = x->value.at(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = inv;
    for (int c = 0; c < cols; ++c) out.at(r, c) = (x->value.at(r, c) - mean) * inv;
  }
  return make_node(std::move(out), {x}, [x, rows, cols, inv_sigma](Node& self) {
    auto& gx = x->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      double g_mean = 0.0, gx_hat = 0.0;
      for (int c = 0; c < cols; ++c) {
        g_mean += self.grad.at(r, c);
        gx_hat += self.grad.at(r, c) * self.value.at(r, c);
      }
      g_mean /= cols;
      gx_hat /= cols;
      for (int c = 0; c < cols; ++c) {
        gx[static_cast<std::int64_t>(r) * cols + c] +=
            inv_sigma[r] * (self.grad.at(r, c) - g_mean - self.value.at(r, c) * gx_hat);
      }
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  return add_rows(mul_rows(norm_rows(x, eps), gamma), beta);
}

Var channel_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  if (x->value.ndim() != 3) throw InputError("channel_norm: expected [C,H,W]");
  const int channels = x->value.dim(0);
  const int spatial = x->value.dim(1) * x->value.dim(2);
  auto flat = reshape(x, {channels, spatial});
  auto normalized = norm_rows(flat, eps);
  auto scaled = row_shift(row_scale(normalized, gamma), beta);
  return reshape(scaled, x->value.shape());
}

namespace {

struct ConvGeom {
  int cin, h, w, cout, kh, kw, stride, pad, ho, wo;
};

ConvGeom conv_geometry(const Tensor& x, const Tensor& weight, int stride, int pad) {
  if (x.ndim() != 3 || weight.ndim() != 4) throw InputError("conv2d: expected x[C,H,W], w[Co,Ci,kh,kw]");
  ConvGeom g;
  g.cin = x.dim(0);
  g.h = x.dim(1);
  g.w = x.dim(2);
  g.cout = weight.dim(0);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  g.stride = stride;
  g.pad = pad;
  if (weight.dim(1) != g.cin) throw InputError("conv2d: channel mismatch");
  if (stride < 1 || pad < 0) throw InputError("conv2d: bad stride/pad");
  g.ho = (g.h + 2 * pad - g.kh) / stride + 1;
  g.wo = (g.w + 2 * pad - g.kw) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw InputError("conv2d: output would be empty");
  return g;
}

Tensor im2col(const Tensor& x, const ConvGeom& g) {
  const int patch = g.cin * g.kh * g.kw;
  const int cells = g.ho * g.wo;
  Tensor col({patch, cells});
  for (int c = 0; c < g.cin; ++c) {
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const int row = (c * g.kh + ki) * g.kw + kj;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ki - g.pad;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kj - g.pad;
            double v = 0.0;
            if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) {
              v = x[(static_cast<std::int64_t>(c) * g.h + iy) * g.w + ix];
            }
            col.at(row, oy * g.wo + ox) = v;
          }
        }
      }
    }
  }
  return col;
}

void col2im_add(const Tensor& col, const ConvGeom& g, Tensor& dx) {
  for (int c = 0; c < g.cin; ++c) {
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const int row = (c * g.kh + ki) * g.kw + kj;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ki - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kj - g.pad;
            if (ix < 0 || ix >= g.w) continue;
            dx[(static_cast<std::int64_t>(c) * g.h + iy) * g.w + ix] += col.at(row, oy * g.wo + ox);
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const ConvGeom g = conv_geometry(x->value, w->value, stride, pad);
  if (vec_len(b) != g.cout) throw InputError("conv2d: bias length mismatch");
  const Tensor col = im2col(x->value, g);
  const int patch = g.cin * g.kh * g.kw;
  const int cells = g.ho * g.wo;
  Tensor out2d({g.cout, cells});
  const Tensor wmat = w->value.reshaped({g.cout, patch});
  as_mat(out2d) = as_mat(wmat) * as_mat(col);
  for (int co = 0; co < g.cout; ++co) {
    for (int i = 0; i < cells; ++i) out2d.at(co, i) += b->value[co];
  }
  return make_node(out2d.reshaped({g.cout, g.ho, g.wo}), {x, w, b}, [x, w, b, g](Node& self) {
    const int patch = g.cin * g.kh * g.kw;
    const int cells = g.ho * g.wo;
    const Tensor dy = self.grad.reshaped({g.cout, cells});
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (int co = 0; co < g.cout; ++co) {
        double acc = 0.0;
        for (int i = 0; i < cells; ++i) acc += dy.at(co, i);
        gb[co] += acc;
      }
    }
    const Tensor col = im2col(x->value, g);  // recomputed to keep graphs slim
    if (w->requires_grad) {
      Tensor dw({g.cout, patch});
      as_mat(dw) = as_mat(dy) * as_mat(col).transpose();
      auto& gw = w->ensure_grad();
      for (std::int64_t i = 0; i < gw.size(); ++i) gw[i] += dw[i];
    }
    if (x->requires_grad) {
      const Tensor wmat = w->value.reshaped({g.cout, patch});
      Tensor dcol({patch, cells});
      as_mat(dcol) = as_mat(wmat).transpose() * as_mat(dy);
      col2im_add(dcol, g, x->ensure_grad());
    }
  });
}

Var maxpool2d(const Var& x, int kernel, int stride, int pad) {
  if (x->value.ndim() != 3) throw InputError("maxpool2d: expected [C,H,W]");
  const int channels = x->value.dim(0);
  const int h = x->value.dim(1);
  const int w = x->value.dim(2);
  const int ho = (h + 2 * pad - kernel) / stride + 1;
  const int wo = (w + 2 * pad - kernel) / stride + 1;
  if (ho <= 0 || wo <= 0) throw InputError("maxpool2d: output would be empty");
  Tensor out({channels, ho, wo});
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(channels) * ho * wo, -1);
  for (int c = 0; c < channels; ++c) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double best = -1e300;
        std::int64_t best_idx = -1;
        for (int ki = 0; ki < kernel; ++ki) {
          const int iy = oy * stride + ki - pad;
          if (iy < 0 || iy >= h) continue;
          for (int kj = 0; kj < kernel; ++kj) {
            const int ix = ox * stride + kj - pad;
            if (ix < 0 || ix >= w) continue;
            const std::int64_t idx = (static_cast<std::int64_t>(c) * h + iy) * w + ix;
            if (x->value[idx] > best) {
              best = x->value[idx];
              best_idx = idx;
            }
          }
        }
        const std::int64_t out_idx = (static_cast<std::int64_t>(c) * ho + oy) * wo + ox;
        out[out_idx] = best_idx >= 0 ? best : 0.0;
        argmax[static_cast<std::size_t>(out_idx)] = best_idx;
      }
    }
  }
  return make_node(std::move(out), {x}, [x, argmax](Node& self) {
    auto& gx = x->ensure_grad();
    for (std::int64_t i = 0; i < self.grad.size(); ++i) {
      if (argmax[static_cast<std::size_t>(i)] >= 0) gx[argmax[static_cast<std::size_t>(i)]] += self.grad[i];
    }
  });
}

Var ParamStore::insert(const std::string& name, Tensor value) {
  if (params_.count(name)) throw InputError("ParamStore: duplicate parameter " + name);
  auto var = make_param(std::move(value));
  params_[name] = var;
  return var;
}

Var ParamStore::zeros(const std::string& name, std::vector<int> shape) {
  return insert(name, Tensor::zeros(std::move(shape)));
}

Var ParamStore::ones(const std::string& name, std::vector<int> shape) {
  return insert(name, Tensor::full(std::move(shape), 1.0));
}

Var ParamStore::xavier(const std::string& name, std::vector<int> shape) {
  double fan_in = 0.0, fan_out = 0.0;
  if (shape.size() == 2) {
    fan_in = shape[0];
    fan_out = shape[1];
  } else if (shape.size() == 4) {
    fan_in = static_cast<double>(shape[1]) * shape[2] * shape[3];
    fan_out = static_cast<double>(shape[0]) * shape[2] * shape[3];
  } else {
    throw InputError("ParamStore::xavier: expected 2D or 4D shape for " + name);
  }
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  return insert(name, rng_.uniform_tensor(std::move(shape), -limit, limit));
}

Var ParamStore::normal(const std::string& name, std::vector<int> shape, double stddev) {
  return insert(name, rng_.normal_tensor(std::move(shape), stddev));
}

Var ParamStore::get(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) throw InputError("ParamStore: unknown parameter " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, var] : params_) var->grad = Tensor();
}

void ParamStore::copy_prefix(const std::string& src_prefix, const std::string& dst_prefix) {
  for (auto& [name, var] : params_) {
    if (name.rfind(src_prefix, 0) != 0) continue;
    const std::string dst_name = dst_prefix + name.substr(src_prefix.size());
    const auto it = params_.find(dst_name);
    if (it == params_.end()) throw InputError("ParamStore::copy_prefix: missing " + dst_name);
    if (!it->second->value.same_shape(var->value)) {
      throw InputError("ParamStore::copy_prefix: shape mismatch for " + dst_name);
    }
    it->second->value = var->value;
  }
}

Adam::Adam(std::vector<Var> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p->value.shape()));
    v_.push_back(Tensor::zeros(p->value.shape()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (p->grad.empty()) continue;  // parameter not touched by this graph
    for (std::int64_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
      v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace rgbdtrack::nn
