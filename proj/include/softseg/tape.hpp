#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "softseg/tensor.hpp"

namespace softseg {

// Reverse-mode autodiff over NCHW tensors. Each op appends a node holding
// its forward value; backward() walks the nodes in reverse order.
class Tape {
 public:
  using Var = std::size_t;

  // Leaf that never receives a gradient (inputs).
  Var constant(Tensor value);
  // Leaf whose gradient is accumulated (parameters).
  Var variable(Tensor value);

  // Same-padded, stride-1 convolution. x: [B,Ci,H,W], w: [Co,Ci,K,K] (K odd), b: [Co].
  Var conv2d(Var x, Var w, Var b);
  Var relu(Var x);
  // 2x2 average pooling, stride 2. H and W must be even.
  Var avg_pool2(Var x);
  // 2x nearest-neighbour upsampling.
  Var upsample2(Var x);
  // Concatenate along the channel axis.
  Var concat_channels(Var a, Var b);
  Var sigmoid(Var x);

  const Tensor& value(Var v) const { return nodes_.at(v).value; }
  // Empty before backward() or for nodes that need no gradient.
  std::span<const double> grad(Var v) const { return nodes_.at(v).grad; }

  // Seeds d(loss)/d(output) and propagates to every variable.
  void backward(Var output, std::span<const double> seed);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

 private:
  enum class Op { leaf, conv2d, relu, avg_pool2, upsample2, concat, sigmoid };

  struct Node {
    Op op = Op::leaf;
    Var a = 0, b = 0, c = 0;
    Tensor value;
    std::vector<double> grad;
    bool needs_grad = false;
  };

  Var push(Node node);
  void backward_node(const Node& node);

  std::vector<Node> nodes_;
};

}  // namespace softseg
