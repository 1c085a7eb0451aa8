#include "radarego/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "radarego/geometry.hpp"
#include "radarego/rng.hpp"

namespace radarego {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

std::int64_t shape_size(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw std::invalid_argument("tensor shape dims must be positive");
    n *= d;
  }
  return n;
}

NodePtr make_node(Shape shape, std::vector<double> data, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

Tensor make_result(Shape shape, std::vector<double> data,
                   std::vector<NodePtr> parents,
                   std::function<void(TensorNode&)> backward_fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  auto n = make_node(std::move(shape), std::move(data), rg);
  if (rg) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_size(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = shape_size(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_size(shape) != static_cast<std::int64_t>(data.size()))
    throw std::invalid_argument("from_data: data length does not match shape");
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::int64_t Tensor::size() const { return node_->size(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

std::span<const double> Tensor::grad() const {
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item: tensor is not scalar");
  return node_->data[0];
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

void Tensor::backward() {
  if (!node_) throw std::invalid_argument("backward: empty tensor");
  if (size() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; graphs can be deep (recurrent chains).
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      TensorNode* p = n->parents[idx].get();
      ++idx;
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Interior grads are scratch space per sweep; only leaves accumulate.
  for (TensorNode* n : order)
    if (n->backward_fn) n->grad.assign(n->data.size(), 0.0);

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto an = a.node(), bn = b.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] + bn->data[i];
  return make_result(an->shape, std::move(out), {an, bn}, [an, bn](TensorNode& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto an = a.node(), bn = b.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] - bn->data[i];
  return make_result(an->shape, std::move(out), {an, bn}, [an, bn](TensorNode& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto an = a.node(), bn = b.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] * bn->data[i];
  return make_result(an->shape, std::move(out), {an, bn}, [an, bn](TensorNode& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        an->grad[i] += n.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i)
        bn->grad[i] += n.grad[i] * an->data[i];
    }
  });
}

Tensor scalar_mul(const Tensor& a, double s) {
  auto an = a.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] * s;
  return make_result(an->shape, std::move(out), {an}, [an, s](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * s;
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw std::invalid_argument("matmul: shape mismatch");
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  auto an = a.node(), bn = b.node();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = an->data[i * k + p];
      for (int j = 0; j < n; ++j) out[i * n + j] += av * bn->data[p * n + j];
    }
  return make_result({m, n}, std::move(out), {an, bn}, [an, bn, m, k, n](TensorNode& nd) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double g = nd.grad[i * n + j];
          for (int p = 0; p < k; ++p) an->grad[i * k + p] += g * bn->data[p * n + j];
        }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double g = nd.grad[i * n + j];
          for (int p = 0; p < k; ++p) bn->grad[p * n + j] += g * an->data[i * k + p];
        }
    }
  });
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.shape().size() != 2 || x.shape().size() != 1 || w.shape()[1] != x.shape()[0])
    throw std::invalid_argument("matvec: shape mismatch");
  const int m = w.shape()[0], n = w.shape()[1];
  auto wn = w.node(), xn = x.node();
  std::vector<double> out(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += wn->data[i * n + j] * xn->data[j];
    out[i] = acc;
  }
  return make_result({m}, std::move(out), {wn, xn}, [wn, xn, m, n](TensorNode& nd) {
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        const double g = nd.grad[i];
        for (int j = 0; j < n; ++j) wn->grad[i * n + j] += g * xn->data[j];
      }
    }
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        const double g = nd.grad[i];
        for (int j = 0; j < n; ++j) xn->grad[j] += g * wn->data[i * n + j];
      }
    }
  });
}

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b) {
  return add(matvec(w, x), b);
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 3 || ws.size() != 4 || bias.shape().size() != 1)
    throw std::invalid_argument("conv2d: expected CHW input, OIHW weight, O bias");
  const int ic = xs[0], ih = xs[1], iw = xs[2];
  const int oc = ws[0], kh = ws[2], kw = ws[3];
  if (ws[1] != ic || bias.shape()[0] != oc)
    throw std::invalid_argument("conv2d: channel mismatch");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
  const int oh = (ih + 2 * pad - kh) / stride + 1;
  const int ow = (iw + 2 * pad - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: kernel exceeds input");

  auto xn = input.node(), wn = weight.node(), bn = bias.node();
  std::vector<double> out(static_cast<std::size_t>(oc) * oh * ow);
  for (int o = 0; o < oc; ++o) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double acc = bn->data[o];
        const int y0 = y * stride - pad, x0 = x * stride - pad;
        for (int c = 0; c < ic; ++c) {
          for (int ky = 0; ky < kh; ++ky) {
            const int sy = y0 + ky;
            if (sy < 0 || sy >= ih) continue;
            const double* xrow = &xn->data[(c * ih + sy) * iw];
            const double* wrow = &wn->data[((o * ic + c) * kh + ky) * kw];
            for (int kx = 0; kx < kw; ++kx) {
              const int sx = x0 + kx;
              if (sx < 0 || sx >= iw) continue;
              acc += xrow[sx] * wrow[kx];
            }
          }
        }
        out[(o * oh + y) * ow + x] = acc;
      }
    }
  }
  return make_result(
      {oc, oh, ow}, std::move(out), {xn, wn, bn},
      [xn, wn, bn, ic, ih, iw, oc, kh, kw, oh, ow, stride, pad](TensorNode& nd) {
        const bool gx = xn->requires_grad, gw = wn->requires_grad, gb = bn->requires_grad;
        if (gx) xn->ensure_grad();
        if (gw) wn->ensure_grad();
        if (gb) bn->ensure_grad();
        for (int o = 0; o < oc; ++o) {
          for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
              const double g = nd.grad[(o * oh + y) * ow + x];
              if (g == 0.0) continue;
              if (gb) bn->grad[o] += g;
              const int y0 = y * stride - pad, x0 = x * stride - pad;
              for (int c = 0; c < ic; ++c) {
                for (int ky = 0; ky < kh; ++ky) {
                  const int sy = y0 + ky;
                  if (sy < 0 || sy >= ih) continue;
                  for (int kx = 0; kx < kw; ++kx) {
                    const int sx = x0 + kx;
                    if (sx < 0 || sx >= iw) continue;
                    const std::size_t xi = (c * ih + sy) * iw + sx;
                    const std::size_t wi = ((o * ic + c) * kh + ky) * kw + kx;
                    if (gx) xn->grad[xi] += g * wn->data[wi];
                    if (gw) wn->grad[wi] += g * xn->data[xi];
                  }
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Nonlinearities

Tensor leaky_relu(const Tensor& a, double slope) {
  auto an = a.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = an->data[i];
    out[i] = v > 0.0 ? v : slope * v;
  }
  return make_result(an->shape, std::move(out), {an}, [an, slope](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * (an->data[i] > 0.0 ? 1.0 : slope);
  });
}

Tensor sigmoid(const Tensor& a) {
  auto an = a.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-an->data[i]));
  auto values = std::make_shared<std::vector<double>>(out);
  return make_result(an->shape, std::move(out), {an}, [an, values](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double y = (*values)[i];
      an->grad[i] += n.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor tanh_op(const Tensor& a) {
  auto an = a.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(an->data[i]);
  auto values = std::make_shared<std::vector<double>>(out);
  return make_result(an->shape, std::move(out), {an}, [an, values](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double y = (*values)[i];
      an->grad[i] += n.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor softmax(const Tensor& a) {
  if (a.shape().size() != 1) throw std::invalid_argument("softmax: rank-1 only");
  auto an = a.node();
  double mx = an->data[0];
  for (double v : an->data) mx = std::max(mx, v);
  std::vector<double> out(an->data.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(an->data[i] - mx);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  auto values = std::make_shared<std::vector<double>>(out);
  return make_result(an->shape, std::move(out), {an}, [an, values](TensorNode& n) {
    an->ensure_grad();
    double dot = 0.0;
    for (std::size_t i = 0; i < n.grad.size(); ++i) dot += n.grad[i] * (*values)[i];
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += (*values)[i] * (n.grad[i] - dot);
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::vector<NodePtr> nodes;
  std::vector<double> out;
  std::vector<int> offsets;
  int total = 0;
  for (const Tensor& t : parts) {
    if (t.shape().size() != 1) throw std::invalid_argument("concat: rank-1 only");
    offsets.push_back(total);
    total += t.shape()[0];
    nodes.push_back(t.node());
    out.insert(out.end(), t.data().begin(), t.data().end());
  }
  auto offs = std::make_shared<std::vector<int>>(std::move(offsets));
  auto parents = nodes;
  return make_result({total}, std::move(out), std::move(parents),
                     [nodes, offs](TensorNode& n) {
                       for (std::size_t k = 0; k < nodes.size(); ++k) {
                         auto& p = nodes[k];
                         if (!p->requires_grad) continue;
                         p->ensure_grad();
                         const int off = (*offs)[k];
                         for (std::size_t i = 0; i < p->data.size(); ++i)
                           p->grad[i] += n.grad[off + i];
                       }
                     });
}

Tensor slice(const Tensor& a, int offset, int length) {
  if (a.shape().size() != 1) throw std::invalid_argument("slice: rank-1 only");
  if (offset < 0 || length <= 0 || offset + length > a.shape()[0])
    throw std::invalid_argument("slice: out of range");
  auto an = a.node();
  std::vector<double> out(an->data.begin() + offset, an->data.begin() + offset + length);
  return make_result({length}, std::move(out), {an}, [an, offset](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[offset + i] += n.grad[i];
  });
}

Tensor reshape(const Tensor& a, Shape new_shape) {
  if (shape_size(new_shape) != a.size())
    throw std::invalid_argument("reshape: element count mismatch");
  auto an = a.node();
  std::vector<double> out(an->data);
  return make_result(std::move(new_shape), std::move(out), {an}, [an](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
  });
}

Tensor flatten(const Tensor& a) {
  return reshape(a, {static_cast<int>(a.size())});
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  auto an = a.node();
  double acc = 0.0;
  for (double v : an->data) acc += v;
  return make_result({1}, {acc}, {an}, [an](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < an->data.size(); ++i) an->grad[i] += n.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  auto an = a.node();
  double acc = 0.0;
  for (double v : an->data) acc += v;
  const double inv = 1.0 / static_cast<double>(an->data.size());
  return make_result({1}, {acc * inv}, {an}, [an, inv](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < an->data.size(); ++i) an->grad[i] += n.grad[0] * inv;
  });
}

// ---------------------------------------------------------------------------

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate in [0,1)");
  if (!training || rate == 0.0) return a;
  auto an = a.node();
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(an->data.size());
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = bernoulli(rng, keep) ? 1.0 / keep : 0.0;
    out[i] = an->data[i] * (*mask)[i];
  }
  return make_result(an->shape, std::move(out), {an}, [an, mask](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * (*mask)[i];
  });
}

Tensor wrap_to_pi(const Tensor& a) {
  auto an = a.node();
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = wrap_angle(an->data[i]);
  return make_result(an->shape, std::move(out), {an}, [an](TensorNode& n) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
  });
}

Tensor detach(const Tensor& a) {
  auto an = a.node();
  return Tensor(make_node(an->shape, an->data, false));
}

}  // namespace radarego
