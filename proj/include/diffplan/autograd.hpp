#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "diffplan/tensor.hpp"

namespace diffplan::grad {

/// A trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;

  explicit Parameter(Tensor init = {})
      : value(std::move(init)), grad(value.shape()), adam_m(value.shape()), adam_v(value.shape()) {}
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the tape is
/// topologically sorted by construction and backward is a single reverse sweep.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  /// With track_gradients == false parameters act as constants, so no
  /// backward closures are kept (inference).
  explicit Graph(bool track_gradients = true) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward() adds into parameter.grad.
  Var parameter(Parameter& p);

  /// Appends a computed node. `backward` reads grad(self) and accumulates into
  /// the inputs' grads; it is skipped when no input requires a gradient.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  const Tensor& value(Var v) const { return value(v.id); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }
  /// Gradient buffer of a node, zero-initialised on first access.
  Tensor& grad(std::size_t id);
  Tensor& grad(Var v) { return grad(v.id); }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Parameter* param = nullptr;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool track_ = true;
};

inline const Tensor& Var::value() const { return graph->value(id); }

// ---- primitives -----------------------------------------------------------
// Matrix-valued ops interpret tensors through Tensor::mat(): the last axis is
// the column axis and all leading axes are flattened into rows.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a (n x m) + bias (m) broadcast over rows.
Var add_bias(Var a, Var bias);
/// x (n x in) * W (in x out) + b (out).
Var linear(Var x, Var w, Var b);
Var gelu(Var x);
Var softmax(Var x);
/// Row-wise normalisation with affine gain and bias of length cols.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-8);
Var reshape(Var x, Shape shape);
/// x (B*L x d) + p (L x d) added to every group of L rows.
Var add_tiled(Var x, Var p);
/// x (B x d) -> (B*L x d), each row repeated L times.
Var repeat_rows(Var x, std::size_t times);
/// x (B*L x d) -> (B x d), mean over each group of L rows.
Var group_mean(Var x, std::size_t group);
Var sum(Var x);
Var mean(Var x);
/// Mean of squared differences over all entries.
Var mse(Var a, Var b);

/// Scaled dot-product attention with per-head splitting. q is (B*Lq x d),
/// k and v are (B*Lk x d); each sample attends only within its own rows.
Var attention(Var q, Var k, Var v, std::size_t batch, std::size_t heads);

struct AttentionWeights {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
};

/// Projections + attention + output projection. Queries come from
/// `q_tokens`, keys and values from `kv_tokens`.
Var multi_head_cross_attention(Var q_tokens, Var kv_tokens, const AttentionWeights& w, std::size_t batch,
                               std::size_t heads);

}  // namespace diffplan::grad
