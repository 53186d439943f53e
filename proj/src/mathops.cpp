#include "bird/mathops.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace bird::ops {

void chw_dims(const std::vector<int>& shape, int* c, int* h, int* w) {
  if (shape.size() == 2) {
    *c = 1;
    *h = shape[0];
    *w = shape[1];
  } else if (shape.size() == 3) {
    *c = shape[0];
    *h = shape[1];
    *w = shape[2];
  } else {
    throw std::invalid_argument("expected [H,W] or [C,H,W], got " +
                                shape_str(shape));
  }
}

namespace {
template <typename T, typename F>
TensorT<T> map2(const TensorT<T>& a, const TensorT<T>& b, F f,
                const char* name) {
  check(a.same_shape(b), std::string(name) + ": shape mismatch " +
                             shape_str(a.shape) + " vs " + shape_str(b.shape));
  TensorT<T> out(a.shape);
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename T, typename F>
TensorT<T> map1(const TensorT<T>& x, F f) {
  TensorT<T> out(x.shape);
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
  return out;
}
}  // namespace

template <typename T>
TensorT<T> ew_add(const TensorT<T>& a, const TensorT<T>& b) {
  return map2(a, b, [](T x, T y) { return x + y; }, "add");
}
template <typename T>
TensorT<T> ew_sub(const TensorT<T>& a, const TensorT<T>& b) {
  return map2(a, b, [](T x, T y) { return x - y; }, "sub");
}
template <typename T>
TensorT<T> ew_mul(const TensorT<T>& a, const TensorT<T>& b) {
  return map2(a, b, [](T x, T y) { return x * y; }, "mul");
}
template <typename T>
TensorT<T> ew_div(const TensorT<T>& a, const TensorT<T>& b) {
  return map2(a, b, [](T x, T y) { return x / y; }, "div");
}
template <typename T>
TensorT<T> ew_scale(const TensorT<T>& x, T s) {
  return map1(x, [s](T v) { return s * v; });
}
template <typename T>
TensorT<T> relu_fw(const TensorT<T>& x) {
  return map1(x, [](T v) { return v > T(0) ? v : T(0); });
}
template <typename T>
TensorT<T> silu_fw(const TensorT<T>& x) {
  return map1(x, [](T v) {
    const T s = T(1) / (T(1) + std::exp(-v));
    return v * s;
  });
}
template <typename T>
TensorT<T> tanh_fw(const TensorT<T>& x) {
  return map1(x, [](T v) { return std::tanh(v); });
}
template <typename T>
TensorT<T> exp_fw(const TensorT<T>& x) {
  return map1(x, [](T v) { return std::exp(v); });
}
template <typename T>
TensorT<T> abs_fw(const TensorT<T>& x) {
  return map1(x, [](T v) { return v < T(0) ? -v : v; });
}
template <typename T>
TensorT<T> smooth_abs_fw(const TensorT<T>& x, T eps) {
  return map1(x, [eps](T v) { return std::sqrt(v * v + eps * eps) - eps; });
}

template <typename T>
TensorT<T> conv2d_fw(const TensorT<T>& x, const TensorT<T>& w,
                     const TensorT<T>& b, int stride, int pad) {
  check(x.rank() == 3, "conv2d: input must be [C,H,W]");
  check(w.rank() == 4, "conv2d: weights must be [Co,Ci,k,k]");
  const int cin = x.dim(0), h = x.dim(1), win = x.dim(2);
  const int cout = w.dim(0), k = w.dim(2);
  check(w.dim(1) == cin, "conv2d: channel mismatch");
  check(w.dim(3) == k && k % 2 == 1, "conv2d: kernel must be square and odd");
  check(b.rank() == 1 && b.dim(0) == cout, "conv2d: bias must be [Co]");
  check(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const int hn = h + 2 * pad - k;
  const int wn = win + 2 * pad - k;
  check(hn >= 0 && wn >= 0 && hn % stride == 0 && wn % stride == 0,
        "conv2d: non-integral output size");
  const int ho = hn / stride + 1;
  const int wo = wn / stride + 1;
  TensorT<T> out({cout, ho, wo});
  kernels::conv2d_forward(x.ptr(), cin, h, win, w.ptr(), cout, k, b.ptr(),
                          stride, pad, out.ptr(), ho, wo);
  return out;
}

template <typename T>
TensorT<T> area_down_fw(const TensorT<T>& x, int factor) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  check(factor >= 1, "area_down: factor must be >= 1");
  check(h % factor == 0 && w % factor == 0,
        "area_down: dims not divisible by factor");
  const int ho = h / factor, wo = w / factor;
  TensorT<T> out({c, ho, wo});
  const T inv = T(1) / static_cast<T>(factor * factor);
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.ptr() + static_cast<size_t>(ch) * h * w;
    T* oc = out.ptr() + static_cast<size_t>(ch) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        T acc = T(0);
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            acc += xc[static_cast<size_t>(oy * factor + dy) * w + ox * factor + dx];
        oc[static_cast<size_t>(oy) * wo + ox] = acc * inv;
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> nearest_up_fw(const TensorT<T>& x, int factor) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  check(factor >= 1, "nearest_up: factor must be >= 1");
  const int ho = h * factor, wo = w * factor;
  TensorT<T> out({c, ho, wo});
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.ptr() + static_cast<size_t>(ch) * h * w;
    T* oc = out.ptr() + static_cast<size_t>(ch) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      const T* xrow = xc + static_cast<size_t>(oy / factor) * w;
      for (int ox = 0; ox < wo; ++ox)
        oc[static_cast<size_t>(oy) * wo + ox] = xrow[ox / factor];
    }
  }
  return out;
}

namespace {
struct LerpIdx {
  int i0, i1;
  double w1;  // weight of i1; weight of i0 is 1-w1
};
inline LerpIdx half_pixel(int o, int factor, int n) {
  const double src = (o + 0.5) / factor - 0.5;
  const double fl = std::floor(src);
  LerpIdx r;
  r.w1 = src - fl;
  int i0 = static_cast<int>(fl);
  int i1 = i0 + 1;
  if (i0 < 0) i0 = 0;
  if (i1 < 0) i1 = 0;
  if (i0 > n - 1) i0 = n - 1;
  if (i1 > n - 1) i1 = n - 1;
  r.i0 = i0;
  r.i1 = i1;
  return r;
}
}  // namespace

template <typename T>
TensorT<T> bilinear_up_fw(const TensorT<T>& x, int factor) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  check(factor >= 1, "bilinear_up: factor must be >= 1");
  const int ho = h * factor, wo = w * factor;
  TensorT<T> out({c, ho, wo});
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.ptr() + static_cast<size_t>(ch) * h * w;
    T* oc = out.ptr() + static_cast<size_t>(ch) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      const LerpIdx ry = half_pixel(oy, factor, h);
      for (int ox = 0; ox < wo; ++ox) {
        const LerpIdx rx = half_pixel(ox, factor, w);
        const double v00 = xc[static_cast<size_t>(ry.i0) * w + rx.i0];
        const double v01 = xc[static_cast<size_t>(ry.i0) * w + rx.i1];
        const double v10 = xc[static_cast<size_t>(ry.i1) * w + rx.i0];
        const double v11 = xc[static_cast<size_t>(ry.i1) * w + rx.i1];
        const double top = v00 * (1.0 - rx.w1) + v01 * rx.w1;
        const double bot = v10 * (1.0 - rx.w1) + v11 * rx.w1;
        oc[static_cast<size_t>(oy) * wo + ox] =
            static_cast<T>(top * (1.0 - ry.w1) + bot * ry.w1);
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> dct_basis(int n) {
  static std::map<int, TensorT<double>> cache;
  static std::mutex mu;
  TensorT<double> basis;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
      TensorT<double> b({n, n});
      const double pi = 3.14159265358979323846;
      for (int k = 0; k < n; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int j = 0; j < n; ++j)
          b[static_cast<int64_t>(k) * n + j] =
              s * std::cos(pi * (2.0 * j + 1.0) * k / (2.0 * n));
      }
      it = cache.emplace(n, std::move(b)).first;
    }
    basis = it->second;
  }
  return basis.template cast<T>();
}

template <typename T>
TensorT<T> dct2_fw(const TensorT<T>& x) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  const TensorT<T> bh = dct_basis<T>(h);
  const TensorT<T> bw = dct_basis<T>(w);
  TensorT<T> out(x.shape);
  TensorT<T> tmp({h, w});
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.ptr() + static_cast<size_t>(ch) * h * w;
    T* oc = out.ptr() + static_cast<size_t>(ch) * h * w;
    kernels::matmul_nn(bh.ptr(), h, h, xc, w, tmp.ptr());
    kernels::matmul_nt(tmp.ptr(), h, w, bw.ptr(), w, oc);
  }
  return out;
}

template <typename T>
TensorT<T> idct2_fw(const TensorT<T>& x) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  const TensorT<T> bh = dct_basis<T>(h);
  const TensorT<T> bw = dct_basis<T>(w);
  TensorT<T> out(x.shape);
  TensorT<T> tmp({h, w});
  for (int ch = 0; ch < c; ++ch) {
    const T* xc = x.ptr() + static_cast<size_t>(ch) * h * w;
    T* oc = out.ptr() + static_cast<size_t>(ch) * h * w;
    kernels::matmul_tn(bh.ptr(), h, h, xc, w, tmp.ptr());
    kernels::matmul_nn(tmp.ptr(), h, w, bw.ptr(), w, oc);
  }
  return out;
}

template <typename T>
TensorT<T> concat_ch_fw(const TensorT<T>& a, const TensorT<T>& b) {
  check(a.rank() == 3 && b.rank() == 3, "concat_ch: inputs must be [C,H,W]");
  check(a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2),
        "concat_ch: spatial dims must match");
  TensorT<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(),
            out.data.begin() + static_cast<int64_t>(a.numel()));
  return out;
}

template <typename T>
TensorT<T> add_channel_vec_fw(const TensorT<T>& x, const TensorT<T>& v) {
  check(x.rank() == 3, "add_channel_vec: x must be [C,H,W]");
  check(v.rank() == 1 && v.dim(0) == x.dim(0),
        "add_channel_vec: v must be [C]");
  TensorT<T> out(x.shape);
  const int64_t hw = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  for (int c = 0; c < x.dim(0); ++c) {
    const T add = v[c];
    const T* xc = x.ptr() + c * hw;
    T* oc = out.ptr() + c * hw;
    for (int64_t i = 0; i < hw; ++i) oc[i] = xc[i] + add;
  }
  return out;
}

template <typename T>
T sum_fw(const TensorT<T>& x) {
  T acc = T(0);
  for (int64_t i = 0; i < x.numel(); ++i) acc += x[i];
  return acc;
}

template <typename T>
T mean_fw(const TensorT<T>& x) {
  check(x.numel() > 0, "mean of empty tensor");
  return sum_fw(x) / static_cast<T>(x.numel());
}

template <typename T>
TensorT<T> diff_h_fw(const TensorT<T>& x) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  check(w >= 2, "diff_h: width must be >= 2");
  TensorT<T> out({c, h, w - 1});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y) {
      const T* row = x.ptr() + (static_cast<size_t>(ch) * h + y) * w;
      T* orow = out.ptr() + (static_cast<size_t>(ch) * h + y) * (w - 1);
      for (int i = 0; i < w - 1; ++i) orow[i] = row[i + 1] - row[i];
    }
  return out;
}

template <typename T>
TensorT<T> diff_v_fw(const TensorT<T>& x) {
  int c, h, w;
  chw_dims(x.shape, &c, &h, &w);
  check(h >= 2, "diff_v: height must be >= 2");
  TensorT<T> out({c, h - 1, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h - 1; ++y) {
      const T* r0 = x.ptr() + (static_cast<size_t>(ch) * h + y) * w;
      const T* r1 = r0 + w;
      T* orow = out.ptr() + (static_cast<size_t>(ch) * (h - 1) + y) * w;
      for (int i = 0; i < w; ++i) orow[i] = r1[i] - r0[i];
    }
  return out;
}

#define BIRD_INSTANTIATE(T)                                                  \
  template TensorT<T> ew_add<T>(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> ew_sub<T>(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> ew_mul<T>(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> ew_div<T>(const TensorT<T>&, const TensorT<T>&);       \
  template TensorT<T> ew_scale<T>(const TensorT<T>&, T);                     \
  template TensorT<T> relu_fw<T>(const TensorT<T>&);                         \
  template TensorT<T> silu_fw<T>(const TensorT<T>&);                         \
  template TensorT<T> tanh_fw<T>(const TensorT<T>&);                         \
  template TensorT<T> exp_fw<T>(const TensorT<T>&);                          \
  template TensorT<T> abs_fw<T>(const TensorT<T>&);                          \
  template TensorT<T> smooth_abs_fw<T>(const TensorT<T>&, T);                \
  template TensorT<T> conv2d_fw<T>(const TensorT<T>&, const TensorT<T>&,     \
                                   const TensorT<T>&, int, int);             \
  template TensorT<T> area_down_fw<T>(const TensorT<T>&, int);               \
  template TensorT<T> nearest_up_fw<T>(const TensorT<T>&, int);              \
  template TensorT<T> bilinear_up_fw<T>(const TensorT<T>&, int);             \
  template TensorT<T> dct_basis<T>(int);                                     \
  template TensorT<T> dct2_fw<T>(const TensorT<T>&);                         \
  template TensorT<T> idct2_fw<T>(const TensorT<T>&);                        \
  template TensorT<T> concat_ch_fw<T>(const TensorT<T>&, const TensorT<T>&); \
  template TensorT<T> add_channel_vec_fw<T>(const TensorT<T>&,               \
                                            const TensorT<T>&);              \
  template T sum_fw<T>(const TensorT<T>&);                                   \
  template T mean_fw<T>(const TensorT<T>&);                                  \
  template TensorT<T> diff_h_fw<T>(const TensorT<T>&);                       \
  template TensorT<T> diff_v_fw<T>(const TensorT<T>&);

BIRD_INSTANTIATE(float)
BIRD_INSTANTIATE(double)
#undef BIRD_INSTANTIATE

}  // namespace bird::ops
