#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bird/tape.hpp"
#include "bird/tensor.hpp"

namespace bird {

// Conditional noise predictor eps(x_t, t | y): four 3x3 convs with silu,
// LR conditioning by channel concatenation (y upsampled nearest to x_t's
// size), sinusoidal timestep embedding added after the input projection.
struct DenoiserConfig {
  int hidden_width = 16;
  int in_channels = 2;  // x_t plus upsampled y
  int scale = 4;        // LR -> HR upsampling factor
};

template <typename T>
struct DenoiserParamsT {
  DenoiserConfig cfg;
  TensorT<T> w_in, b_in;
  TensorT<T> w_h1, b_h1;
  TensorT<T> w_h2, b_h2;
  TensorT<T> w_out, b_out;

  std::vector<std::pair<std::string, TensorT<T>*>> named() {
    return {{"w_in", &w_in},   {"b_in", &b_in},   {"w_h1", &w_h1},
            {"b_h1", &b_h1},   {"w_h2", &w_h2},   {"b_h2", &b_h2},
            {"w_out", &w_out}, {"b_out", &b_out}};
  }
  std::vector<std::pair<std::string, const TensorT<T>*>> named() const {
    return {{"w_in", &w_in},   {"b_in", &b_in},   {"w_h1", &w_h1},
            {"b_h1", &b_h1},   {"w_h2", &w_h2},   {"b_h2", &b_h2},
            {"w_out", &w_out}, {"b_out", &b_out}};
  }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : named()) n += t->numel();
    return n;
  }

  template <typename U>
  DenoiserParamsT<U> cast() const {
    DenoiserParamsT<U> out;
    out.cfg = cfg;
    out.w_in = w_in.template cast<U>();
    out.b_in = b_in.template cast<U>();
    out.w_h1 = w_h1.template cast<U>();
    out.b_h1 = b_h1.template cast<U>();
    out.w_h2 = w_h2.template cast<U>();
    out.b_h2 = b_h2.template cast<U>();
    out.w_out = w_out.template cast<U>();
    out.b_out = b_out.template cast<U>();
    return out;
  }
};

using DenoiserParams = DenoiserParamsT<float>;

// Frozen snapshot used as the reference model; never receives gradients.
template <typename T>
struct ReferenceParamsT {
  DenoiserParamsT<T> params;
};
using ReferenceParams = ReferenceParamsT<float>;

// Weights ~ Normal(0, 1/fan_in), biases zero, drawn in a fixed order.
DenoiserParams init_params(uint64_t seed, const DenoiserConfig& cfg = {});

// [sin(t*w_i), cos(t*w_i)], w_i = 10000^(-2i/dim). dim must be even.
template <typename T>
TensorT<T> timestep_embedding(int t, int dim);

// Tape handles of the eight parameter tensors.
template <typename T>
struct DenoiserNodeIds {
  using Id = typename TapeT<T>::Id;
  Id w_in, b_in, w_h1, b_h1, w_h2, b_h2, w_out, b_out;
};

template <typename T>
DenoiserNodeIds<T> register_params(TapeT<T>& tape,
                                   const DenoiserParamsT<T>& params,
                                   bool requires_grad);

// Graded forward; x_t and y_up are tape nodes, y_up already at x_t's size.
template <typename T>
typename TapeT<T>::Id denoiser_forward_tape(TapeT<T>& tape,
                                            const DenoiserNodeIds<T>& ids,
                                            const DenoiserConfig& cfg,
                                            typename TapeT<T>::Id x_t,
                                            typename TapeT<T>::Id y_up, int t);

// No-grad forward on raw tensors; bit-identical to the tape version.
template <typename T>
TensorT<T> denoiser_forward_nograd(const DenoiserParamsT<T>& params,
                                   const TensorT<T>& x_t,
                                   const TensorT<T>& y_up, int t);

// Upsamples the LR conditioning once (nearest) to x_t's spatial size.
template <typename T>
TensorT<T> upsample_condition(const TensorT<T>& y_lr, int scale);

template <typename T>
ReferenceParamsT<T> snapshot_reference(const DenoiserParamsT<T>& params) {
  return ReferenceParamsT<T>{params};
}

template <typename T>
TensorT<T> predict_reference(const ReferenceParamsT<T>& ref,
                             const TensorT<T>& x_t, const TensorT<T>& y_up,
                             int t) {
  return denoiser_forward_nograd(ref.params, x_t, y_up, t);
}

}  // namespace bird
