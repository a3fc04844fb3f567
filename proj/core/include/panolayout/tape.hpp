#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "panolayout/tensor.hpp"

namespace panolayout::nn {

class Tape;

// Handle to a node on a Tape; valid while the tape is alive.
struct Value {
  Tape* tape = nullptr;
  int id = -1;

  bool defined() const { return tape != nullptr; }
  const Tensor& val() const;
  const Tensor& grad() const;
  bool requires_grad() const;
};

// Reverse-mode autodiff tape with eager evaluation. Every op computes its
// output immediately; when gradients are enabled it also registers a closure
// that scatters the output cotangent into its inputs. Creation order is
// topological, so backward() is a single reverse sweep.
//
// A tape lives for one training iteration (or one evaluation): build the
// forward graph(s), call backward() once on a scalar, read the leaf grads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value constant(Tensor v) { return wrap(push(std::move(v), false)); }
  // Differentiable leaf while gradients are enabled, constant otherwise.
  Value leaf(Tensor v) { return wrap(push(std::move(v), grad_enabled_)); }

  void set_grad_enabled(bool e) { grad_enabled_ = e; }
  bool grad_enabled() const { return grad_enabled_; }

  // Folds the sign pattern of every relu/abs into a running hash. Finite
  // differencing is only valid where the loss is differentiable; comparing
  // signatures at the two probe points detects a kink inside the window.
  void set_kink_tracking(bool e) { kink_tracking_ = e; }
  std::uint64_t kink_signature() const { return kink_signature_; }

  // 3x3 conv over [Cin, H, W]: zero padding vertically, circular padding
  // horizontally (equirectangular wrap). w: [Cout, Cin, 3, 3], b: [Cout].
  Value conv2d(Value x, Value w, Value b, int stride);
  // Circular 1-D conv, kernel 3. x: [Cin, W], w: [Cout, Cin, 3], b: [Cout].
  Value conv1d(Value x, Value w, Value b);
  Value relu(Value x);
  Value mean_rows(Value x);                    // [C, H, W] -> [C, W]
  Value upsample_linear(Value x, int factor);  // [C, W] -> [C, W*factor], circular
  Value select_channel(Value x, int c);        // [C, W] -> [W]
  Value mul_const(Value x, Tensor m);          // elementwise, m not differentiated
  Value softplus(Value x);
  Value sigmoid(Value x);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value div(Value a, Value b);
  Value add_scalar(Value x, double c);
  Value mul_scalar(Value x, double c);
  Value abs(Value x);
  Value sqrt(Value x);
  Value roll(Value x, int shift);  // circular shift of the last dim
  Value sum_all(Value x);          // -> [1]
  Value mean_all(Value x);         // -> [1]

  void backward(Value loss);

  const Tensor& value(int id) const { return nodes_[id].value; }
  bool has_grad(int id) const { return nodes_[id].grad_live; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Tensor& grad(int id);  // zeros when untouched
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_live = false;
    std::function<void()> backprop;
  };

  int push(Tensor v, bool requires_grad);
  Value wrap(int id) { return Value{this, id}; }
  Tensor& grad_buf(int id);
  bool wants_grad(Value a) const;
  bool wants_grad(Value a, Value b) const;
  void check_mine(Value v) const;
  void track_signs(const Tensor& t);

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
  bool kink_tracking_ = false;
  std::uint64_t kink_signature_ = 0xcbf29ce484222325ull;
};

}  // namespace panolayout::nn
