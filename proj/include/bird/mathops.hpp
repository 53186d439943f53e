#pragma once

#include "bird/kernels.hpp"
#include "bird/tensor.hpp"

// Raw (non-recorded) forward math. The tape calls these for its forward
// values and the no-grad sampling paths call them directly, so a graded and
// an ungraded evaluation of the same expression are bit-identical.
namespace bird::ops {

template <typename T>
TensorT<T> ew_add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> ew_sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> ew_mul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> ew_div(const TensorT<T>& a, const TensorT<T>& b);
template <typename T>
TensorT<T> ew_scale(const TensorT<T>& x, T s);
template <typename T>
TensorT<T> relu_fw(const TensorT<T>& x);
template <typename T>
TensorT<T> silu_fw(const TensorT<T>& x);
template <typename T>
TensorT<T> tanh_fw(const TensorT<T>& x);
template <typename T>
TensorT<T> exp_fw(const TensorT<T>& x);
template <typename T>
TensorT<T> abs_fw(const TensorT<T>& x);
// sqrt(x^2 + eps^2) - eps: smooth |x| that is exactly 0 at 0.
template <typename T>
TensorT<T> smooth_abs_fw(const TensorT<T>& x, T eps);

// x: [C,H,W], w: [Co,C,k,k], b: [Co].
template <typename T>
TensorT<T> conv2d_fw(const TensorT<T>& x, const TensorT<T>& w,
                     const TensorT<T>& b, int stride, int pad);

template <typename T>
TensorT<T> area_down_fw(const TensorT<T>& x, int factor);
template <typename T>
TensorT<T> nearest_up_fw(const TensorT<T>& x, int factor);
// Half-pixel centers (align_corners=false), edge-clamped.
template <typename T>
TensorT<T> bilinear_up_fw(const TensorT<T>& x, int factor);

// Orthonormal type-II 2-D DCT per channel; idct2 is its transpose/inverse.
template <typename T>
TensorT<T> dct2_fw(const TensorT<T>& x);
template <typename T>
TensorT<T> idct2_fw(const TensorT<T>& x);
// N x N orthonormal DCT-II basis, row k = basis vector for frequency k.
template <typename T>
TensorT<T> dct_basis(int n);

template <typename T>
TensorT<T> concat_ch_fw(const TensorT<T>& a, const TensorT<T>& b);
// x: [C,H,W] plus per-channel vector v: [C].
template <typename T>
TensorT<T> add_channel_vec_fw(const TensorT<T>& x, const TensorT<T>& v);

template <typename T>
T sum_fw(const TensorT<T>& x);
template <typename T>
T mean_fw(const TensorT<T>& x);

// Forward differences along width / height; output one shorter on that axis.
template <typename T>
TensorT<T> diff_h_fw(const TensorT<T>& x);
template <typename T>
TensorT<T> diff_v_fw(const TensorT<T>& x);

// Interprets rank-2 tensors as [1,H,W]; returns {C,H,W}.
void chw_dims(const std::vector<int>& shape, int* c, int* h, int* w);

}  // namespace bird::ops
