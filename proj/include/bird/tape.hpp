#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bird/tensor.hpp"

namespace bird {

// Reverse-mode tape over dense tensors. Nodes are appended in evaluation
// order (so creation order is a topological order) and backward() walks them
// once in reverse. One tape per training step; not thread-safe.
template <typename T>
class TapeT {
 public:
  using Id = int32_t;

  enum class Op : uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kScale,
    kRelu,
    kSilu,
    kTanh,
    kExp,
    kAbs,
    kSmoothAbs,
    kConv2d,
    kAreaDown,
    kNearestUp,
    kBilinearUp,
    kDct2,
    kIdct2,
    kConcatCh,
    kAddChannelVec,
    kSum,
    kMean,
    kDiffH,
    kDiffV,
    kSubScalarBcast,
  };

  TapeT() { nodes_.reserve(128); }

  Id leaf(TensorT<T> v, bool requires_grad);
  Id constant(TensorT<T> v) { return leaf(std::move(v), false); }
  Id scalar_const(T v) { return constant(TensorT<T>::scalar(v)); }

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id div(Id a, Id b);
  Id scale(Id x, T s);
  Id relu(Id x);
  Id silu(Id x);
  Id tanh_fn(Id x);
  Id exp_fn(Id x);
  Id abs_fn(Id x);
  Id smooth_abs(Id x, T eps);
  Id conv2d(Id x, Id w, Id b, int stride, int pad);
  Id area_down(Id x, int factor);
  Id nearest_up(Id x, int factor);
  Id bilinear_up(Id x, int factor);
  Id dct2(Id x);
  Id idct2(Id x);
  Id concat_ch(Id a, Id b);
  Id add_channel_vec(Id x, Id v);
  Id sum(Id x);
  Id mean(Id x);
  Id diff_h(Id x);
  Id diff_v(Id x);
  // x - s broadcast over x; s must be a scalar node.
  Id sub_scalar_bcast(Id x, Id s);

  // Same values, no gradient, no edge back to x.
  Id detach(Id x);

  // Populates grads of every requires_grad ancestor of a scalar loss.
  // Calling again without reset_grads() is an error.
  void backward(Id loss);
  void reset_grads();

  const TensorT<T>& value(Id id) const { return node(id).value; }
  const TensorT<T>& grad(Id id) const;
  TensorT<T> grad_or_zeros(Id id) const;
  bool requires_grad(Id id) const { return node(id).needs_grad; }
  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }
  bool backward_called() const { return backward_called_; }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::array<Id, 3> parents{-1, -1, -1};
    TensorT<T> value;
    TensorT<T> grad;  // empty until touched by backward
    bool needs_grad = false;
    int i0 = 0, i1 = 0;  // stride/pad or factor
    T s0 = T(0);         // scale factor or eps
  };

  const Node& node(Id id) const;
  Node& node(Id id);
  Id push(Node n);
  Id unary(Op op, Id x, TensorT<T> value, T s0 = T(0), int i0 = 0);
  Id binary(Op op, Id a, Id b, TensorT<T> value);
  void ensure_grad(Id id);
  void backward_node(Id id);

  std::vector<Node> nodes_;
  bool backward_called_ = false;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

}  // namespace bird
