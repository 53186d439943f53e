#include "bird/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "bird/kernels.hpp"
#include "bird/mathops.hpp"

namespace bird {

template <typename T>
const typename TapeT<T>::Node& TapeT<T>::node(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw std::invalid_argument("invalid tape id");
  return nodes_[static_cast<size_t>(id)];
}

template <typename T>
typename TapeT<T>::Node& TapeT<T>::node(Id id) {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw std::invalid_argument("invalid tape id");
  return nodes_[static_cast<size_t>(id)];
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::leaf(TensorT<T> v, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(v);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::unary(Op op, Id x, TensorT<T> value, T s0,
                                      int i0) {
  Node n;
  n.op = op;
  n.parents[0] = x;
  n.value = std::move(value);
  n.needs_grad = node(x).needs_grad;
  n.s0 = s0;
  n.i0 = i0;
  return push(std::move(n));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::binary(Op op, Id a, Id b, TensorT<T> value) {
  Node n;
  n.op = op;
  n.parents[0] = a;
  n.parents[1] = b;
  n.value = std::move(value);
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  return push(std::move(n));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::add(Id a, Id b) {
  return binary(Op::kAdd, a, b, ops::ew_add(value(a), value(b)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::sub(Id a, Id b) {
  return binary(Op::kSub, a, b, ops::ew_sub(value(a), value(b)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::mul(Id a, Id b) {
  return binary(Op::kMul, a, b, ops::ew_mul(value(a), value(b)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::div(Id a, Id b) {
  return binary(Op::kDiv, a, b, ops::ew_div(value(a), value(b)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::scale(Id x, T s) {
  return unary(Op::kScale, x, ops::ew_scale(value(x), s), s);
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::relu(Id x) {
  return unary(Op::kRelu, x, ops::relu_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::silu(Id x) {
  return unary(Op::kSilu, x, ops::silu_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::tanh_fn(Id x) {
  return unary(Op::kTanh, x, ops::tanh_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::exp_fn(Id x) {
  return unary(Op::kExp, x, ops::exp_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::abs_fn(Id x) {
  return unary(Op::kAbs, x, ops::abs_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::smooth_abs(Id x, T eps) {
  return unary(Op::kSmoothAbs, x, ops::smooth_abs_fw(value(x), eps), eps);
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::conv2d(Id x, Id w, Id b, int stride, int pad) {
  Node n;
  n.op = Op::kConv2d;
  n.parents = {x, w, b};
  n.value = ops::conv2d_fw(value(x), value(w), value(b), stride, pad);
  n.needs_grad =
      node(x).needs_grad || node(w).needs_grad || node(b).needs_grad;
  n.i0 = stride;
  n.i1 = pad;
  return push(std::move(n));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::area_down(Id x, int factor) {
  return unary(Op::kAreaDown, x, ops::area_down_fw(value(x), factor), T(0),
               factor);
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::nearest_up(Id x, int factor) {
  return unary(Op::kNearestUp, x, ops::nearest_up_fw(value(x), factor), T(0),
               factor);
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::bilinear_up(Id x, int factor) {
  return unary(Op::kBilinearUp, x, ops::bilinear_up_fw(value(x), factor), T(0),
               factor);
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::dct2(Id x) {
  return unary(Op::kDct2, x, ops::dct2_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::idct2(Id x) {
  return unary(Op::kIdct2, x, ops::idct2_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::concat_ch(Id a, Id b) {
  return binary(Op::kConcatCh, a, b, ops::concat_ch_fw(value(a), value(b)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::add_channel_vec(Id x, Id v) {
  return binary(Op::kAddChannelVec, x, v,
                ops::add_channel_vec_fw(value(x), value(v)));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::sum(Id x) {
  const T s = ops::sum_fw(value(x));
  if (!std::isfinite(static_cast<double>(s)))
    throw std::runtime_error("sum: non-finite value on tape");
  return unary(Op::kSum, x, TensorT<T>::scalar(s));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::mean(Id x) {
  const T s = ops::mean_fw(value(x));
  if (!std::isfinite(static_cast<double>(s)))
    throw std::runtime_error("mean: non-finite value on tape");
  return unary(Op::kMean, x, TensorT<T>::scalar(s));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::diff_h(Id x) {
  return unary(Op::kDiffH, x, ops::diff_h_fw(value(x)));
}
template <typename T>
typename TapeT<T>::Id TapeT<T>::diff_v(Id x) {
  return unary(Op::kDiffV, x, ops::diff_v_fw(value(x)));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::sub_scalar_bcast(Id x, Id s) {
  check(value(s).numel() == 1, "sub_scalar_bcast: s must be scalar");
  const T sv = value(s).item();
  TensorT<T> out(value(x).shape);
  const TensorT<T>& xt = value(x);
  for (int64_t i = 0; i < xt.numel(); ++i) out[i] = xt[i] - sv;
  return binary(Op::kSubScalarBcast, x, s, std::move(out));
}

template <typename T>
typename TapeT<T>::Id TapeT<T>::detach(Id x) {
  return leaf(value(x), false);
}

template <typename T>
const TensorT<T>& TapeT<T>::grad(Id id) const {
  const Node& n = node(id);
  check(!n.grad.data.empty(), "node has no gradient");
  return n.grad;
}

template <typename T>
TensorT<T> TapeT<T>::grad_or_zeros(Id id) const {
  const Node& n = node(id);
  if (n.grad.data.empty()) return TensorT<T>::zeros(n.value.shape);
  return n.grad;
}

template <typename T>
void TapeT<T>::ensure_grad(Id id) {
  Node& n = node(id);
  if (n.grad.data.empty()) n.grad = TensorT<T>::zeros(n.value.shape);
}

template <typename T>
void TapeT<T>::backward(Id loss) {
  const Node& ln = node(loss);
  if (ln.value.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  if (!ln.needs_grad)
    throw std::runtime_error("backward: loss is detached from all inputs");
  if (backward_called_)
    throw std::runtime_error("backward: grads already populated; reset first");
  if (!std::isfinite(static_cast<double>(ln.value.item())))
    throw std::runtime_error("backward: loss is not finite");
  ensure_grad(loss);
  node(loss).grad[0] = T(1);
  for (Id id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (n.op == Op::kLeaf || !n.needs_grad || n.grad.data.empty()) continue;
    backward_node(id);
  }
  backward_called_ = true;
}

template <typename T>
void TapeT<T>::reset_grads() {
  for (Node& n : nodes_) n.grad = TensorT<T>();
  backward_called_ = false;
}

namespace {
template <typename T>
void axpy(const TensorT<T>& src, T a, TensorT<T>* dst) {
  for (int64_t i = 0; i < src.numel(); ++i) (*dst)[i] += a * src[i];
}
}  // namespace

template <typename T>
void TapeT<T>::backward_node(Id id) {
  Node& n = node(id);
  const TensorT<T>& g = n.grad;
  const Id pa = n.parents[0], pb = n.parents[1], pc = n.parents[2];
  const bool need_a = pa >= 0 && node(pa).needs_grad;
  const bool need_b = pb >= 0 && node(pb).needs_grad;
  const bool need_c = pc >= 0 && node(pc).needs_grad;
  if (!need_a && !need_b && !need_c) return;
  if (need_a) ensure_grad(pa);
  if (need_b) ensure_grad(pb);
  if (need_c) ensure_grad(pc);

  switch (n.op) {
    case Op::kAdd: {
      if (need_a) axpy(g, T(1), &node(pa).grad);
      if (need_b) axpy(g, T(1), &node(pb).grad);
      break;
    }
    case Op::kSub: {
      if (need_a) axpy(g, T(1), &node(pa).grad);
      if (need_b) axpy(g, T(-1), &node(pb).grad);
      break;
    }
    case Op::kMul: {
      if (need_a) {
        const TensorT<T>& bv = node(pb).value;
        TensorT<T>& ga = node(pa).grad;
        for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
      }
      if (need_b) {
        const TensorT<T>& av = node(pa).value;
        TensorT<T>& gb = node(pb).grad;
        for (int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
      }
      break;
    }
    case Op::kDiv: {
      const TensorT<T>& av = node(pa).value;
      const TensorT<T>& bv = node(pb).value;
      if (need_a) {
        TensorT<T>& ga = node(pa).grad;
        for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] / bv[i];
      }
      if (need_b) {
        TensorT<T>& gb = node(pb).grad;
        for (int64_t i = 0; i < g.numel(); ++i)
          gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
      }
      break;
    }
    case Op::kScale: {
      if (need_a) axpy(g, n.s0, &node(pa).grad);
      break;
    }
    case Op::kRelu: {
      // relu'(0) = 0 by convention.
      const TensorT<T>& xv = node(pa).value;
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < g.numel(); ++i)
        if (xv[i] > T(0)) ga[i] += g[i];
      break;
    }
    case Op::kSilu: {
      const TensorT<T>& xv = node(pa).value;
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < g.numel(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-xv[i]));
        ga[i] += g[i] * s * (T(1) + xv[i] * (T(1) - s));
      }
      break;
    }
    case Op::kTanh: {
      const TensorT<T>& yv = n.value;
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < g.numel(); ++i)
        ga[i] += g[i] * (T(1) - yv[i] * yv[i]);
      break;
    }
    case Op::kExp: {
      const TensorT<T>& yv = n.value;
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * yv[i];
      break;
    }
    case Op::kAbs: {
      // abs'(0) = 0, mirroring the relu convention.
      const TensorT<T>& xv = node(pa).value;
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < g.numel(); ++i) {
        if (xv[i] > T(0))
          ga[i] += g[i];
        else if (xv[i] < T(0))
          ga[i] -= g[i];
      }
      break;
    }
    case Op::kSmoothAbs: {
      const TensorT<T>& xv = node(pa).value;
      const T eps = n.s0;
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < g.numel(); ++i)
        ga[i] += g[i] * xv[i] / std::sqrt(xv[i] * xv[i] + eps * eps);
      break;
    }
    case Op::kConv2d: {
      const TensorT<T>& xv = node(pa).value;
      const TensorT<T>& wv = node(pb).value;
      const int cin = xv.dim(0), h = xv.dim(1), w_in = xv.dim(2);
      const int cout = wv.dim(0), k = wv.dim(2);
      const int ho = n.value.dim(1), wo = n.value.dim(2);
      if (need_a)
        kernels::conv2d_backward_input(g.ptr(), cout, ho, wo, wv.ptr(), cin, k,
                                       n.i0, n.i1, node(pa).grad.ptr(), h,
                                       w_in);
      if (need_b)
        kernels::conv2d_backward_weights(g.ptr(), cout, ho, wo, xv.ptr(), cin,
                                         h, w_in, k, n.i0, n.i1,
                                         node(pb).grad.ptr());
      if (need_c)
        kernels::conv2d_backward_bias(g.ptr(), cout, ho, wo,
                                      node(pc).grad.ptr());
      break;
    }
    case Op::kAreaDown: {
      const int f = n.i0;
      const TensorT<T>& xv = node(pa).value;
      int c, h, w;
      ops::chw_dims(xv.shape, &c, &h, &w);
      const int ho = h / f, wo = w / f;
      const T inv = T(1) / static_cast<T>(f * f);
      TensorT<T>& ga = node(pa).grad;
      for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox) {
            const T gv = g[(static_cast<int64_t>(ch) * ho + oy) * wo + ox] * inv;
            for (int dy = 0; dy < f; ++dy)
              for (int dx = 0; dx < f; ++dx)
                ga[(static_cast<int64_t>(ch) * h + oy * f + dy) * w +
                   ox * f + dx] += gv;
          }
      break;
    }
    case Op::kNearestUp: {
      const int f = n.i0;
      const TensorT<T>& xv = node(pa).value;
      int c, h, w;
      ops::chw_dims(xv.shape, &c, &h, &w);
      const int ho = h * f, wo = w * f;
      TensorT<T>& ga = node(pa).grad;
      for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox)
            ga[(static_cast<int64_t>(ch) * h + oy / f) * w + ox / f] +=
                g[(static_cast<int64_t>(ch) * ho + oy) * wo + ox];
      break;
    }
    case Op::kBilinearUp: {
      const int f = n.i0;
      const TensorT<T>& xv = node(pa).value;
      int c, h, w;
      ops::chw_dims(xv.shape, &c, &h, &w);
      const int ho = h * f, wo = w * f;
      TensorT<T>& ga = node(pa).grad;
      for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < ho; ++oy) {
          const double sy = (oy + 0.5) / f - 0.5;
          const double fy = std::floor(sy);
          const double wy = sy - fy;
          int y0 = static_cast<int>(fy), y1 = y0 + 1;
          y0 = std::min(std::max(y0, 0), h - 1);
          y1 = std::min(std::max(y1, 0), h - 1);
          for (int ox = 0; ox < wo; ++ox) {
            const double sx = (ox + 0.5) / f - 0.5;
            const double fx = std::floor(sx);
            const double wx = sx - fx;
            int x0 = static_cast<int>(fx), x1 = x0 + 1;
            x0 = std::min(std::max(x0, 0), w - 1);
            x1 = std::min(std::max(x1, 0), w - 1);
            const T gv = g[(static_cast<int64_t>(ch) * ho + oy) * wo + ox];
            ga[(static_cast<int64_t>(ch) * h + y0) * w + x0] +=
                gv * static_cast<T>((1.0 - wy) * (1.0 - wx));
            ga[(static_cast<int64_t>(ch) * h + y0) * w + x1] +=
                gv * static_cast<T>((1.0 - wy) * wx);
            ga[(static_cast<int64_t>(ch) * h + y1) * w + x0] +=
                gv * static_cast<T>(wy * (1.0 - wx));
            ga[(static_cast<int64_t>(ch) * h + y1) * w + x1] +=
                gv * static_cast<T>(wy * wx);
          }
        }
      }
      break;
    }
    case Op::kDct2: {
      // Orthonormal transform: gradient is the inverse transform of g.
      const TensorT<T> gx = ops::idct2_fw(g);
      axpy(gx, T(1), &node(pa).grad);
      break;
    }
    case Op::kIdct2: {
      const TensorT<T> gx = ops::dct2_fw(g);
      axpy(gx, T(1), &node(pa).grad);
      break;
    }
    case Op::kConcatCh: {
      const int64_t na = node(pa).value.numel();
      if (need_a) {
        TensorT<T>& ga = node(pa).grad;
        for (int64_t i = 0; i < na; ++i) ga[i] += g[i];
      }
      if (need_b) {
        TensorT<T>& gb = node(pb).grad;
        for (int64_t i = 0; i < node(pb).value.numel(); ++i)
          gb[i] += g[na + i];
      }
      break;
    }
    case Op::kAddChannelVec: {
      if (need_a) axpy(g, T(1), &node(pa).grad);
      if (need_b) {
        const TensorT<T>& xv = node(pa).value;
        const int64_t hw = static_cast<int64_t>(xv.dim(1)) * xv.dim(2);
        TensorT<T>& gv = node(pb).grad;
        for (int c = 0; c < xv.dim(0); ++c)
          for (int64_t i = 0; i < hw; ++i) gv[c] += g[c * hw + i];
      }
      break;
    }
    case Op::kSum: {
      const T gv = g[0];
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += gv;
      break;
    }
    case Op::kMean: {
      const T gv = g[0] / static_cast<T>(node(pa).value.numel());
      TensorT<T>& ga = node(pa).grad;
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += gv;
      break;
    }
    case Op::kDiffH: {
      const TensorT<T>& xv = node(pa).value;
      int c, h, w;
      ops::chw_dims(xv.shape, &c, &h, &w);
      TensorT<T>& ga = node(pa).grad;
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
          for (int i = 0; i < w - 1; ++i) {
            const T gv = g[(static_cast<int64_t>(ch) * h + y) * (w - 1) + i];
            ga[(static_cast<int64_t>(ch) * h + y) * w + i + 1] += gv;
            ga[(static_cast<int64_t>(ch) * h + y) * w + i] -= gv;
          }
      break;
    }
    case Op::kDiffV: {
      const TensorT<T>& xv = node(pa).value;
      int c, h, w;
      ops::chw_dims(xv.shape, &c, &h, &w);
      TensorT<T>& ga = node(pa).grad;
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h - 1; ++y)
          for (int i = 0; i < w; ++i) {
            const T gv = g[(static_cast<int64_t>(ch) * (h - 1) + y) * w + i];
            ga[(static_cast<int64_t>(ch) * h + y + 1) * w + i] += gv;
            ga[(static_cast<int64_t>(ch) * h + y) * w + i] -= gv;
          }
      break;
    }
    case Op::kSubScalarBcast: {
      if (need_a) axpy(g, T(1), &node(pa).grad);
      if (need_b) {
        T acc = T(0);
        for (int64_t i = 0; i < g.numel(); ++i) acc += g[i];
        node(pb).grad[0] -= acc;
      }
      break;
    }
    case Op::kLeaf:
      break;
  }
}

template class TapeT<float>;
template class TapeT<double>;

}  // namespace bird
