#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "bird/rng.hpp"

namespace bird {

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Dense row-major tensor. Float for training, double for gradient
// verification; everything numeric in the project is built on this.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), fill);
  }

  static int64_t count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      check(d > 0, "tensor dims must be positive");
      n *= d;
    }
    return n;
  }

  static TensorT zeros(std::vector<int> s) { return TensorT(std::move(s)); }
  static TensorT full(std::vector<int> s, T v) {
    return TensorT(std::move(s), v);
  }
  static TensorT from(std::vector<int> s, std::vector<T> d) {
    TensorT t;
    t.shape = std::move(s);
    check(static_cast<int64_t>(d.size()) == count(t.shape),
          "data length must equal product of shape");
    t.data = std::move(d);
    return t;
  }
  static TensorT scalar(T v) { return full({1}, v); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  T item() const {
    check(numel() == 1, "item() requires a scalar tensor");
    return data[0];
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
TensorT<T> random_normal(std::vector<int> shape, Rng& rng, double mean = 0.0,
                         double stddev = 1.0) {
  TensorT<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(mean + stddev * rng.normal());
  return t;
}

template <typename T>
TensorT<T> random_uniform(std::vector<int> shape, Rng& rng, double lo = 0.0,
                          double hi = 1.0) {
  TensorT<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline std::string shape_str(const std::vector<int>& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

}  // namespace bird
