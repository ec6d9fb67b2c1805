#pragma once

#include <functional>
#include <string>
#include <vector>

#include "shapetask/tensor.hpp"

namespace shapetask::ad {

// Trainable tensor with a persistent gradient slot.
struct Parameter {
  Parameter(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)), grad(this->value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { std::fill(grad.values().begin(), grad.values().end(), 0.0); }
};

// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode tape. Records ops in topological order during the forward
// pass; backward() sweeps the records in reverse and accumulates exact
// gradients, including into every bound Parameter's grad.
//
// A tape and its tensors are confined to one thread; separate tapes may run
// concurrently.
class Tape {
 public:
  // Leaf holding a value. Gradients are tracked (retrievable via grad()).
  Var constant(Tensor value);
  // Leaf bound to a Parameter; backward() adds into the parameter's grad.
  Var param(Parameter& p);

  // input C_in×H×W, weights C_out×C_in×k×k (k odd, 1 or 3), bias C_out.
  // Cross-correlation, zero padding (k-1)/2, stride 1.
  Var conv2d(Var input, Var weights, Var bias);
  // 2×2 non-overlapping max; ties go to the first position in row-major order.
  Var max_pool2(Var input);
  // Transposed convolution, kernel 2, stride 2: input C_in×H×W with weights
  // C_in×C_out×2×2 paints disjoint 2×2 patches of a C_out×2H×2W output.
  Var up_conv2(Var input, Var weights);
  // Stacks two C×H×W tensors along the channel axis.
  Var concat_channels(Var a, Var b);

  Var relu(Var x);
  Var sigmoid(Var x);
  // Softmax across the class axis of an L×H×W tensor, per pixel,
  // stabilized by max subtraction.
  Var softmax_channel(Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scale(Var x, double factor);
  Var add_scalar(Var x, double addend);
  // log(max(x, floor)); zero gradient inside the clamped region.
  Var log_clamped(Var x, double floor);

  Var sum(Var x);
  Var mean(Var x);
  // C×H×W -> C, summing over the spatial axes.
  Var sum_spatial(Var x);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss. Accumulates into node grads and into
  // each bound Parameter's grad (repeated calls keep accumulating there).
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, int)> backprop;  // null for leaves
    Parameter* bound = nullptr;
  };

  int push(Tensor value, std::function<void(Tape&, int)> backprop);
  Node& node(Var v) { return nodes_[v.id]; }
  const Node& cnode(Var v) const { return nodes_[v.id]; }
  void require_same_shape(Var a, Var b, const char* op) const;

  std::vector<Node> nodes_;
};

// fn builds a scalar loss on a tape from one input leaf.
using ScalarFn = std::function<Var(Tape&, Var)>;

// Compares the tape gradient of fn at `point` against central finite
// differences with step eps. Returns the max over coordinates of
// |analytic - numeric| / max(1, |analytic|).
double grad_check(const ScalarFn& fn, const Tensor& point, double eps);

}  // namespace shapetask::ad
