#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace radarego {

// Minimal reverse-mode automatic differentiation. Tensors are flat
// row-major double arrays with a shape; operations record the graph and
// Tensor::backward() accumulates gradients by reverse topological sweep.
// Everything is single-threaded and deterministic for a fixed seed.

using Shape = std::vector<int>;

namespace detail {
struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized on first accumulation, else empty
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t size() const;
  bool requires_grad() const;

  std::span<const double> data() const;
  /// Direct mutation of the value buffer (initialization, optimizer steps,
  /// finite-difference probes). Never call on a tensor inside a live graph.
  std::span<double> mutable_data();
  std::span<const double> grad() const;
  double item() const;

  /// Reverse sweep from a scalar root. Gradients accumulate; call
  /// zero_grad() on leaves between steps.
  void backward();
  void zero_grad();

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Elementwise, shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n] -> [m,n]
Tensor matvec(const Tensor& w, const Tensor& x);  // [m,n] x [n] -> [m]
/// w [out,in], x [in], b [out] -> [out]
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b);

/// Cross-correlation on CHW input, weight [OC,IC,KH,KW], bias [OC].
/// Output spatial dims: floor((in + 2*pad - k)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad);

Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor softmax(const Tensor& a);  // rank-1

Tensor concat(std::span<const Tensor> parts);  // rank-1 parts
Tensor slice(const Tensor& a, int offset, int length);  // rank-1 view-copy
Tensor reshape(const Tensor& a, Shape new_shape);
Tensor flatten(const Tensor& a);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

/// Inverted dropout; identity when training is false or rate is 0.
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng, bool training);

/// Elementwise wrap to (-pi, pi]. Gradient passes through unchanged.
Tensor wrap_to_pi(const Tensor& a);

/// Same values, cut from the graph.
Tensor detach(const Tensor& a);

}  // namespace radarego
