#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "latentflow/params.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor2& value() const;
};

/// Reverse-mode tape over a fixed operation vocabulary. Values are computed
/// eagerly; when recording, each op also stores a closure that pushes the
/// output gradient back to its parents.
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t self)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(Tensor2 value);
  /// Leaf bound to a parameter group. Repeated requests for the same group
  /// return the same node.
  Var parameter(const PredictorParams& params, std::size_t group);
  Var parameter(const PredictorParams& params, std::string_view name);

  const Tensor2& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient accumulated at a node by the last `backward`; zero-filled
  /// when nothing reached it.
  Tensor2 gradient(Var v) const;

  /// Used by op implementations.
  Var emit(Tensor2 value, std::initializer_list<std::size_t> parents, Backward backward);
  Var emit(Tensor2 value, const std::vector<std::size_t>& parents, Backward backward);
  Tensor2& grad(std::size_t id);

 private:
  friend Gradients backward(Graph& tape, Var loss);

  struct Node {
    Tensor2 value;
    Tensor2 grad;
    Backward backward;
    bool requires_grad = false;
    std::ptrdiff_t param_group = -1;
  };

  bool record_;
  std::deque<Node> nodes_;  // stable references across emit
  const PredictorParams* params_ = nullptr;
  std::map<std::size_t, std::size_t> param_nodes_;
  bool has_run_backward_ = false;
};

/// Runs reverse accumulation from a 1x1 loss node and returns gradients in
/// the flat layout of the parameters bound to the graph. Throws StateError
/// when the graph recorded nothing.
Gradients backward(Graph& tape, Var loss);

// Operation vocabulary. All ops throw ShapeError on incompatible operands.
Var matmul(Var a, Var b);
Var add_row(Var x, Var row);  ///< x + row broadcast over rows
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var x, double s);
Var add_scalar(Var x, double s);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var concat_rows(Var top, Var bottom);
Var layer_norm(Var x, double eps = 1e-5);
Var gelu(Var x);
Var sum(Var x);
Var mean_abs(Var x);
Var mean_square(Var x);
Var row_diff(Var x);  ///< x[l+1] - x[l], (n-1) x m

/// Multi-head softmax attention where query row l sees key rows
/// [l - half_width, l + half_width] clipped to the key range. Heads split
/// the columns evenly; scores are scaled by 1/sqrt(head_dim).
Var banded_attention(Var q, Var k, Var v, std::size_t heads, std::size_t half_width);

}  // namespace latentflow
