#include "s2f/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "s2f/errors.hpp"
#include "s2f/kernels.hpp"

namespace s2f {

Graph::Graph(const ParameterStore* params, bool with_gradients)
    : params_(params), with_gradients_(with_gradients) {}

Var Graph::parameter(ParamId id) {
  if (params_ == nullptr) throw ContractViolation("graph has no parameter store");
  if (auto it = param_nodes_.find(id.index); it != param_nodes_.end()) return it->second;
  Node node;
  node.external = &params_->value(id);
  node.param = id;
  node.requires_grad = with_gradients_;
  nodes_.push_back(std::move(node));
  Var v{static_cast<std::uint32_t>(nodes_.size() - 1)};
  param_nodes_.emplace(id.index, v);
  return v;
}

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::variable(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = with_gradients_;
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  if (with_gradients_) {
    for (Var in : inputs) {
      if (in.valid() && nodes_[in.id].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
    if (node.requires_grad) node.backward = std::move(fn);
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.value;
}

Tensor* Graph::grad_sink(Var v) {
  if (!v.valid()) return nullptr;
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) {
    const Tensor& val = n.external ? *n.external : n.value;
    n.grad = Tensor(val.rows(), val.cols());
  }
  return &n.grad;
}

void Graph::backward(Var loss, GradientSet* param_grads) {
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractViolation("backward needs a 1x1 loss");
  if (!nodes_[loss.id].requires_grad) return;
  for (Node& n : nodes_) n.grad = Tensor();
  grad_sink(loss)->fill(1.0);
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, Var{i});
    if (n.param.valid() && param_grads != nullptr) {
      Tensor& dst = (*param_grads)[n.param];
      kernels::axpy(1.0, n.grad.data(), dst.data(), dst.size());
    }
  }
}

void Graph::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

namespace ag {
namespace {

void require(bool cond, const char* op, const std::string& detail) {
  if (!cond) throw ContractViolation(std::string(op) + ": " + detail);
}

std::string shape(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Fwd, typename Deriv>
Var elementwise(Graph& g, Var a, Fwd fwd, Deriv deriv) {
  const Tensor& x = g.value(a);
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  return g.record(std::move(out), {a}, [a, deriv](Graph& g, Var self) {
    Tensor* ga = g.grad_sink(a);
    if (!ga) return;
    const Tensor& gy = g.gradient(self);
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(self);
    for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += gy[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Graph& g, Var a, Var b, bool trans_a, bool trans_b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  const std::size_t m = trans_a ? av.cols() : av.rows();
  const std::size_t k = trans_a ? av.rows() : av.cols();
  const std::size_t kb = trans_b ? bv.cols() : bv.rows();
  const std::size_t n = trans_b ? bv.rows() : bv.cols();
  require(k == kb, "matmul", shape(av) + " by " + shape(bv));
  Tensor out(m, n);
  kernels::gemm(trans_a, trans_b, m, n, k, av.data(), bv.data(), 0.0, out.data());
  return g.record(std::move(out), {a, b}, [a, b, trans_a, trans_b, m, n, k](Graph& g, Var self) {
    const Tensor& dc = g.gradient(self);
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (Tensor* da = g.grad_sink(a)) {
      if (!trans_a) {
        kernels::gemm(false, !trans_b, m, k, n, dc.data(), bv.data(), 1.0, da->data());
      } else {
        kernels::gemm(trans_b, true, k, m, n, bv.data(), dc.data(), 1.0, da->data());
      }
    }
    if (Tensor* db = g.grad_sink(b)) {
      if (!trans_b) {
        kernels::gemm(!trans_a, false, k, n, m, av.data(), dc.data(), 1.0, db->data());
      } else {
        kernels::gemm(true, trans_a, n, k, m, dc.data(), av.data(), 1.0, db->data());
      }
    }
  });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.same_shape(bv), "add", shape(av) + " vs " + shape(bv));
  Tensor out = av;
  kernels::axpy(1.0, bv.data(), out.data(), out.size());
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& gy = g.gradient(self);
    if (Tensor* ga = g.grad_sink(a)) kernels::axpy(1.0, gy.data(), ga->data(), gy.size());
    if (Tensor* gb = g.grad_sink(b)) kernels::axpy(1.0, gy.data(), gb->data(), gy.size());
  });
}

Var add_row(Graph& g, Var a, Var bias) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(bias);
  require(bv.rows() == 1 && bv.cols() == av.cols(), "add_row", shape(av) + " + " + shape(bv));
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    kernels::axpy(1.0, bv.data(), out.row(r).data(), out.cols());
  }
  return g.record(std::move(out), {a, bias}, [a, bias](Graph& g, Var self) {
    const Tensor& gy = g.gradient(self);
    if (Tensor* ga = g.grad_sink(a)) kernels::axpy(1.0, gy.data(), ga->data(), gy.size());
    if (Tensor* gb = g.grad_sink(bias)) {
      for (std::size_t r = 0; r < gy.rows(); ++r) {
        kernels::axpy(1.0, gy.row(r).data(), gb->data(), gy.cols());
      }
    }
  });
}

Var scale(Graph& g, Var a, double factor) {
  Tensor out = g.value(a);
  kernels::scale(factor, out.data(), out.size());
  return g.record(std::move(out), {a}, [a, factor](Graph& g, Var self) {
    if (Tensor* ga = g.grad_sink(a)) {
      const Tensor& gy = g.gradient(self);
      kernels::axpy(factor, gy.data(), ga->data(), gy.size());
    }
  });
}

Var hadamard(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require(av.same_shape(bv), "hadamard", shape(av) + " vs " + shape(bv));
  Tensor out(av.rows(), av.cols());
  kernels::mul(av.data(), bv.data(), out.data(), out.size());
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, Var self) {
    const Tensor& gy = g.gradient(self);
    if (Tensor* ga = g.grad_sink(a)) {
      const Tensor& bv = g.value(b);
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * bv[i];
    }
    if (Tensor* gb = g.grad_sink(b)) {
      const Tensor& av = g.value(a);
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * av[i];
    }
  });
}

Var sigmoid(Graph& g, Var a) {
  return elementwise(
      g, a, [](double x) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Graph& g, Var a) {
  return elementwise(
      g, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Graph& g, Var a) {
  return elementwise(
      g, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Graph& g, Var a) {
  // tanh approximation
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return elementwise(
      g, a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x))); },
      [](double x, double) {
        const double t = std::tanh(kC * (x + kA * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * x * x);
      });
}

Var softmax_rows(Graph& g, Var a) {
  const Tensor& x = g.value(a);
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      total += o[c];
    }
    for (double& v : o) v /= total;
  }
  return g.record(std::move(out), {a}, [a](Graph& g, Var self) {
    Tensor* ga = g.grad_sink(a);
    if (!ga) return;
    const Tensor& gy = g.gradient(self);
    const Tensor& y = g.value(self);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double inner = kernels::dot(gy.row(r).data(), y.row(r).data(), y.cols());
      for (std::size_t c = 0; c < y.cols(); ++c) (*ga)(r, c) += y(r, c) * (gy(r, c) - inner);
    }
  });
}

Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = g.value(x);
  const Tensor& gv = g.value(gain);
  const Tensor& bv = g.value(bias);
  const std::size_t m = xv.rows();
  const std::size_t c = xv.cols();
  require(gv.rows() == 1 && gv.cols() == c && bv.same_shape(gv), "layer_norm",
          shape(xv) + " with gain " + shape(gv));
  Tensor normed(m, c);
  std::vector<double> inv_std(m);
  Tensor out(m, c);
  for (std::size_t r = 0; r < m; ++r) {
    auto row = xv.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(c);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      normed(r, j) = (row[j] - mean) * inv_std[r];
      out(r, j) = normed(r, j) * gv[j] + bv[j];
    }
  }
  return g.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, normed = std::move(normed), inv_std = std::move(inv_std)](
                      Graph& g, Var self) {
                    const Tensor& gy = g.gradient(self);
                    const Tensor& gv = g.value(gain);
                    const std::size_t m = gy.rows();
                    const std::size_t c = gy.cols();
                    if (Tensor* gg = g.grad_sink(gain)) {
                      for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t j = 0; j < c; ++j) (*gg)[j] += gy(r, j) * normed(r, j);
                    }
                    if (Tensor* gb = g.grad_sink(bias)) {
                      for (std::size_t r = 0; r < m; ++r)
                        kernels::axpy(1.0, gy.row(r).data(), gb->data(), c);
                    }
                    if (Tensor* gx = g.grad_sink(x)) {
                      std::vector<double> dn(c);
                      for (std::size_t r = 0; r < m; ++r) {
                        double mean_dn = 0.0;
                        double mean_dn_n = 0.0;
                        for (std::size_t j = 0; j < c; ++j) {
                          dn[j] = gy(r, j) * gv[j];
                          mean_dn += dn[j];
                          mean_dn_n += dn[j] * normed(r, j);
                        }
                        mean_dn /= static_cast<double>(c);
                        mean_dn_n /= static_cast<double>(c);
                        for (std::size_t j = 0; j < c; ++j) {
                          (*gx)(r, j) += inv_std[r] * (dn[j] - mean_dn - normed(r, j) * mean_dn_n);
                        }
                      }
                    }
                  });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const std::size_t m = g.value(parts[0]).rows();
  std::size_t total = 0;
  for (Var p : parts) {
    require(g.value(p).rows() == m, "concat_cols", "row mismatch");
    total += g.value(p).cols();
  }
  Tensor out(m, total);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    for (std::size_t r = 0; r < m; ++r)
      std::copy(pv.row(r).begin(), pv.row(r).end(), out.row(r).begin() + offset);
    offset += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs](Graph& g, Var self) {
    const Tensor& gy = g.gradient(self);
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t w = g.value(p).cols();
      if (Tensor* gp = g.grad_sink(p)) {
        for (std::size_t r = 0; r < gy.rows(); ++r)
          kernels::axpy(1.0, gy.row(r).data() + offset, gp->row(r).data(), w);
      }
      offset += w;
    }
  });
}

Var concat_rows(Graph& g, std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const std::size_t c = g.value(parts[0]).cols();
  std::size_t total = 0;
  for (Var p : parts) {
    require(g.value(p).cols() == c, "concat_rows", "column mismatch");
    total += g.value(p).rows();
  }
  Tensor out(total, c);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = g.value(p);
    std::copy(pv.values().begin(), pv.values().end(), out.data() + offset * c);
    offset += pv.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs](Graph& g, Var self) {
    const Tensor& gy = g.gradient(self);
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t count = g.value(p).size();
      if (Tensor* gp = g.grad_sink(p)) kernels::axpy(1.0, gy.data() + offset, gp->data(), count);
      offset += count;
    }
  });
}

Var slice_rows(Graph& g, Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = g.value(a);
  require(begin + count <= av.rows(), "slice_rows", "range past " + shape(av));
  Tensor out(count, av.cols());
  std::copy(av.data() + begin * av.cols(), av.data() + (begin + count) * av.cols(), out.data());
  return g.record(std::move(out), {a}, [a, begin](Graph& g, Var self) {
    if (Tensor* ga = g.grad_sink(a)) {
      const Tensor& gy = g.gradient(self);
      kernels::axpy(1.0, gy.data(), ga->data() + begin * ga->cols(), gy.size());
    }
  });
}

Var slice_cols(Graph& g, Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = g.value(a);
  require(begin + count <= av.cols(), "slice_cols", "range past " + shape(av));
  Tensor out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin() + begin, av.row(r).begin() + begin + count, out.row(r).begin());
  }
  return g.record(std::move(out), {a}, [a, begin, count](Graph& g, Var self) {
    if (Tensor* ga = g.grad_sink(a)) {
      const Tensor& gy = g.gradient(self);
      for (std::size_t r = 0; r < gy.rows(); ++r)
        kernels::axpy(1.0, gy.row(r).data(), ga->row(r).data() + begin, count);
    }
  });
}

Var repeat_rows(Graph& g, Var row, std::size_t m) {
  const Tensor& rv = g.value(row);
  require(rv.rows() == 1, "repeat_rows", "expected a row, got " + shape(rv));
  Tensor out(m, rv.cols());
  for (std::size_t r = 0; r < m; ++r) std::copy(rv.data(), rv.data() + rv.cols(), out.row(r).begin());
  return g.record(std::move(out), {row}, [row](Graph& g, Var self) {
    if (Tensor* gr = g.grad_sink(row)) {
      const Tensor& gy = g.gradient(self);
      for (std::size_t r = 0; r < gy.rows(); ++r)
        kernels::axpy(1.0, gy.row(r).data(), gr->data(), gy.cols());
    }
  });
}

Var transpose(Graph& g, Var a) {
  const Tensor& av = g.value(a);
  Tensor out(av.cols(), av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
  return g.record(std::move(out), {a}, [a](Graph& g, Var self) {
    if (Tensor* ga = g.grad_sink(a)) {
      const Tensor& gy = g.gradient(self);
      for (std::size_t r = 0; r < ga->rows(); ++r)
        for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += gy(c, r);
    }
  });
}

Var gather_rows(Graph& g, Var table, std::span<const std::size_t> indices) {
  const Tensor& tv = g.value(table);
  Tensor out(indices.size(), tv.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    require(indices[r] < tv.rows(), "gather_rows", "index out of range");
    std::copy(tv.row(indices[r]).begin(), tv.row(indices[r]).end(), out.row(r).begin());
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return g.record(std::move(out), {table}, [table, idx = std::move(idx)](Graph& g, Var self) {
    if (Tensor* gt = g.grad_sink(table)) {
      const Tensor& gy = g.gradient(self);
      for (std::size_t r = 0; r < idx.size(); ++r)
        kernels::axpy(1.0, gy.row(r).data(), gt->row(idx[r]).data(), gy.cols());
    }
  });
}

Var im2col(Graph& g, Var x, std::size_t kernel) {
  const Tensor& xv = g.value(x);
  require(kernel >= 1, "im2col", "kernel must be positive");
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  const std::ptrdiff_t left = static_cast<std::ptrdiff_t>((kernel - 1) / 2);
  Tensor out(n, kernel * c);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t w = 0; w < kernel; ++w) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(r + w) - left;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
      std::copy(xv.row(src).begin(), xv.row(src).end(), out.row(r).begin() + w * c);
    }
  }
  return g.record(std::move(out), {x}, [x, kernel, left](Graph& g, Var self) {
    Tensor* gx = g.grad_sink(x);
    if (!gx) return;
    const Tensor& gy = g.gradient(self);
    const std::size_t n = gx->rows();
    const std::size_t c = gx->cols();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t w = 0; w < kernel; ++w) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(r + w) - left;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
        kernels::axpy(1.0, gy.row(r).data() + w * c, gx->row(src).data(), c);
      }
    }
  });
}

Var max_rows(Graph& g, Var a) {
  const Tensor& av = g.value(a);
  require(av.rows() >= 1, "max_rows", "empty input");
  Tensor out(1, av.cols());
  std::vector<std::size_t> arg(av.cols(), 0);
  for (std::size_t c = 0; c < av.cols(); ++c) {
    double best = av(0, c);
    for (std::size_t r = 1; r < av.rows(); ++r) {
      if (av(r, c) > best) {
        best = av(r, c);
        arg[c] = r;
      }
    }
    out[c] = best;
  }
  return g.record(std::move(out), {a}, [a, arg = std::move(arg)](Graph& g, Var self) {
    if (Tensor* ga = g.grad_sink(a)) {
      const Tensor& gy = g.gradient(self);
      for (std::size_t c = 0; c < arg.size(); ++c) (*ga)(arg[c], c) += gy[c];
    }
  });
}

Var sum(Graph& g, Var a) {
  const Tensor& av = g.value(a);
  Tensor out(1, 1, kernels::sum(av.data(), av.size()));
  return g.record(std::move(out), {a}, [a](Graph& g, Var self) {
    if (Tensor* ga = g.grad_sink(a)) {
      const double d = g.gradient(self)[0];
      for (double& v : ga->values()) v += d;
    }
  });
}

Var biaffine(Graph& g, Var hs, Var he, Var u, Var v, Var bias) {
  const Tensor& hsv = g.value(hs);
  const Tensor& hev = g.value(he);
  const Tensor& uv = g.value(u);
  const Tensor& vv = g.value(v);
  const std::size_t n = hsv.rows();
  const std::size_t d = hsv.cols();
  require(hev.rows() == n && hev.cols() == d, "biaffine", "head/tail shape mismatch");
  require(uv.cols() == d && uv.rows() % d == 0, "biaffine", "U shape " + shape(uv));
  const std::size_t types = uv.rows() / d;
  require(vv.rows() == types && vv.cols() == d, "biaffine", "V shape " + shape(vv));
  const Tensor* bv = bias.valid() ? &g.value(bias) : nullptr;
  require(!bv || (bv->rows() == types && bv->cols() == 1), "biaffine", "bias shape");

  // projected[k] = hs * U_k^T, so logits_k = projected[k] * he^T.
  std::vector<Tensor> projected(types, Tensor(n, d));
  Tensor out(types * n, n);
  for (std::size_t k = 0; k < types; ++k) {
    const double* uk = uv.data() + k * d * d;
    kernels::gemm(false, true, n, d, d, hsv.data(), uk, 0.0, projected[k].data());
    double* block = out.data() + k * n * n;
    kernels::gemm(false, true, n, n, d, projected[k].data(), hev.data(), 0.0, block);
    for (std::size_t i = 0; i < n; ++i) {
      double lin = kernels::dot(vv.row(k).data(), hsv.row(i).data(), d);
      if (bv) lin += (*bv)[k];
      for (std::size_t j = 0; j < n; ++j) block[i * n + j] += lin;
    }
  }
  return g.record(
      std::move(out), {hs, he, u, v, bias},
      [hs, he, u, v, bias, n, d, types, projected = std::move(projected)](Graph& g, Var self) {
        const Tensor& gy = g.gradient(self);
        const Tensor& hsv = g.value(hs);
        const Tensor& hev = g.value(he);
        const Tensor& uv = g.value(u);
        const Tensor& vv = g.value(v);
        Tensor* ghs = g.grad_sink(hs);
        Tensor* ghe = g.grad_sink(he);
        Tensor* gu = g.grad_sink(u);
        Tensor* gv = g.grad_sink(v);
        Tensor* gb = g.grad_sink(bias);
        Tensor dproj(n, d);
        std::vector<double> row_sums(n);
        for (std::size_t k = 0; k < types; ++k) {
          const double* block = gy.data() + k * n * n;
          const double* uk = uv.data() + k * d * d;
          for (std::size_t i = 0; i < n; ++i) row_sums[i] = kernels::sum(block + i * n, n);
          if (ghs || gu) {
            kernels::gemm(false, false, n, d, n, block, hev.data(), 0.0, dproj.data());
            if (ghs) kernels::gemm(false, false, n, d, d, dproj.data(), uk, 1.0, ghs->data());
            if (gu) {
              kernels::gemm(true, false, d, d, n, dproj.data(), hsv.data(), 1.0,
                            gu->data() + k * d * d);
            }
          }
          if (ghe) {
            kernels::gemm(true, false, n, d, n, block, projected[k].data(), 1.0, ghe->data());
          }
          for (std::size_t i = 0; i < n; ++i) {
            if (ghs) kernels::axpy(row_sums[i], vv.row(k).data(), ghs->row(i).data(), d);
            if (gv) kernels::axpy(row_sums[i], hsv.row(i).data(), gv->row(k).data(), d);
            if (gb) (*gb)[k] += row_sums[i];
          }
        }
      });
}

Var bce_with_logits(Graph& g, Var logits, const Tensor& gold, const Tensor& mask) {
  const Tensor& x = g.value(logits);
  require(x.same_shape(gold) && x.same_shape(mask), "bce_with_logits",
          shape(x) + " vs gold " + shape(gold) + " / mask " + shape(mask));
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double z = x[i];
    total += std::max(z, 0.0) - z * gold[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return g.record(Tensor(1, 1, total), {logits}, [logits, gold, mask](Graph& g, Var self) {
    Tensor* gx = g.grad_sink(logits);
    if (!gx) return;
    const double d = g.gradient(self)[0];
    const Tensor& x = g.value(logits);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (mask[i] == 0.0) continue;
      (*gx)[i] += d * (stable_sigmoid(x[i]) - gold[i]);
    }
  });
}

}  // namespace ag
}  // namespace s2f
