#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "contactdyn/num/params.hpp"
#include "contactdyn/num/tensor.hpp"

namespace contactdyn::num {

//! Handle to a node recorded on a Graph.
struct Var {
  std::uint32_t id = UINT32_MAX;
  std::uint64_t generation = 0;
  bool valid() const { return id != UINT32_MAX; }
};

//! Define-by-run reverse-mode tape.
//!
//! Every op evaluates eagerly and appends a node, so the recorded order is
//! already topological. Leading axes are batch axes; the only broadcasting
//! supported is a [B, C] operand over the middle axis of a [B, L, C] tensor.
//! Each op output is checked for NaN/Inf.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  //! Constant leaf (never receives gradient).
  Var input(Tensor value);
  //! Leaf bound to parameter `index` of `params`, read by reference.
  Var param(const ParameterSet& params, std::size_t index);
  Var param(const ParameterSet& params, std::string_view name);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }

  // x [..., in] * w [in, out] + b [out]
  Var affine(Var x, Var w, Var b);
  // x [B, L, Cin], w [k, Cin, Cout], b [Cout]; zero "same" padding, odd k.
  Var conv1d(Var x, Var w, Var b, std::size_t stride = 1);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  // y [B, C] broadcast over the L axis of x [B, L, C]
  Var add_bcast(Var x, Var y);
  Var mul_bcast(Var x, Var y);
  Var scale(Var x, double c);
  Var sigmoid(Var x);
  Var silu(Var x);
  Var softplus(Var x);
  // [B, N, F] -> [B, F]; ties go to the lowest point index.
  Var max_points(Var x);
  // along the last axis
  Var concat(std::span<const Var> xs);
  Var concat(std::initializer_list<Var> xs) { return concat(std::span<const Var>(xs.begin(), xs.size())); }
  // normalizes over the last axis, no affine parameters
  Var layer_norm(Var x, double eps = 1e-5);
  // selects slices along axis 0 or 1
  Var gather(Var x, std::size_t axis, std::vector<std::size_t> indices);
  Var reshape(Var x, Shape shape);
  // identity forward, blocks gradient
  Var detach(Var x);

  Var sum(Var x);
  Var mean(Var x);
  //! Mean over all elements of (pred - target)^2.
  Var mse(Var pred, Var target);
  //! Mean binary cross-entropy; probabilities are clamped to [clamp, 1 - clamp].
  Var bce(Var prob, Var target, double clamp = 1e-7);

  //! Accumulates d(output)/d(param) into `params.grad(i)` for every parameter leaf.
  //! `output` must be a scalar recorded on the current tape.
  void backward(Var output, ParameterSet& params);

  //! Drops all nodes; Vars from before the reset become stale.
  void reset();
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool needs_grad = false;
    const ParameterSet* params = nullptr;
    std::size_t param_index = 0;
    std::function<void(const Tensor& grad_out)> backward;
    const char* op = "";
  };

  const Node& node(Var v) const;
  const Tensor& val(std::uint32_t id) const;
  Tensor& grad_of(std::uint32_t id);
  bool needs(std::uint32_t id) const { return nodes_[id].needs_grad; }
  Var push(const char* op, Tensor value, bool needs_grad, std::function<void(const Tensor&)> bw);
  Var elementwise(const char* op, Var x, double (*f)(double), double (*df)(double, double));

  std::deque<Node> nodes_;  // stable references while the tape grows
  std::uint64_t generation_ = 1;
};

}  // namespace contactdyn::num
