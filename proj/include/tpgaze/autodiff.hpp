#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tpgaze/dual.hpp"
#include "tpgaze/errors.hpp"
#include "tpgaze/tensor.hpp"

namespace tpgaze {

/// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so parents
/// always precede children and a single reverse sweep visits each node once.
///
/// A tape is confined to one thread. Nodes whose inputs do not require
/// gradients store no backward closure.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Var leaf(Tensor<T> value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Appends an op result. `fn` is kept only if some parent needs a gradient.
  Var record(Tensor<T> value, std::initializer_list<Var> parents, BackwardFn fn) {
    bool needs = false;
    for (Var p : parents) needs = needs || node(p).requires_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<T>& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of the last backward() loss w.r.t. `v`; zeros if untouched.
  Tensor<T> grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.empty()) return Tensor<T>(n.value.shape());
    return n.grad;
  }

  /// Adds `g` into the gradient buffer of `v` if it requires one.
  void accumulate(Var v, Tensor<T> g) {
    Node& n = node(v);
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
      n.grad = std::move(g);
      return;
    }
    auto dst = n.grad.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  void backward(Var loss) {
    const Node& l = node(loss);
    if (l.value.size() != 1) {
      throw ContractError("backward: loss must be a scalar, got shape " +
                          shape_str(l.value.shape()));
    }
    for (Node& n : nodes_) n.grad = Tensor<T>();
    if (!l.requires_grad) return;
    node(loss).grad = Tensor<T>(l.value.shape(), T(1));
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || n.grad.empty()) continue;
      // Closures only write to parent buffers, which never alias n.grad.
      n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Node& node(Var v) {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw ContractError("tape: invalid variable id " + std::to_string(v.id));
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const { return const_cast<Tape*>(this)->node(v); }

  std::vector<Node> nodes_;
};

namespace ops {

// All spatial ops take batched NCHW tensors.

/// Valid cross-correlation; the input must already be padded.
template <class T>
Var conv2d(Tape<T>& tape, Var input, Var weight, Var bias, int stride);

/// Surrounds each map with a frame of `width` taken from `border`.
///
/// `border` is flat with C*((H+2w)(W+2w) - H*W) entries in canonical order:
/// channel-major, then a row-major scan of the padded frame skipping the
/// interior. The frame is shared across the batch, so its gradient is summed
/// over samples.
template <class T>
Var pad_with_prompt(Tape<T>& tape, Var input, Var border, int width);

/// Conventional zero padding.
template <class T>
Var pad_zero(Tape<T>& tape, Var input, int width);

/// Reverses the last axis.
template <class T>
Var flip_horizontal(Tape<T>& tape, Var input);

template <class T>
Var relu(Tape<T>& tape, Var input);

/// [N,C,H,W] -> [N,C]
template <class T>
Var global_avg_pool(Tape<T>& tape, Var input);

/// [N,in] x weight[out,in] + bias[out] -> [N,out]
template <class T>
Var linear(Tape<T>& tape, Var input, Var weight, Var bias);

template <class T>
Var add(Tape<T>& tape, Var a, Var b);
template <class T>
Var sub(Tape<T>& tape, Var a, Var b);
/// Elementwise product of equal shapes.
template <class T>
Var mul(Tape<T>& tape, Var a, Var b);
template <class T>
Var scalar_mul(Tape<T>& tape, Var a, double s);
/// |x| with subgradient 0 at exactly zero.
template <class T>
Var abs(Tape<T>& tape, Var a);
/// Sum of all elements, shape [1].
template <class T>
Var sum(Tape<T>& tape, Var a);
/// Mean of all elements, shape [1].
template <class T>
Var mean(Tape<T>& tape, Var a);

/// Frame size C*((H+2w)(W+2w) - H*W).
std::size_t border_count(int channels, int height, int width, int pad);

}  // namespace ops
}  // namespace tpgaze
