#include "bird/denoiser.hpp"

#include <cmath>

#include "bird/mathops.hpp"
#include "bird/rng.hpp"

namespace bird {

namespace {
Tensor init_conv_weight(std::vector<int> shape, Rng& rng) {
  const int fan_in = shape[1] * shape[2] * shape[3];
  return random_normal<float>(std::move(shape), rng, 0.0,
                              1.0 / std::sqrt(static_cast<double>(fan_in)));
}
}  // namespace

DenoiserParams init_params(uint64_t seed, const DenoiserConfig& cfg) {
  check(cfg.hidden_width >= 2 && cfg.hidden_width % 2 == 0,
        "init_params: hidden_width must be even (it doubles as embed dim)");
  Rng rng(derive_seed(seed, 0x64656e6f, 0));  // "deno"
  const int hw = cfg.hidden_width;
  DenoiserParams p;
  p.cfg = cfg;
  p.w_in = init_conv_weight({hw, cfg.in_channels, 3, 3}, rng);
  p.b_in = Tensor::zeros({hw});
  p.w_h1 = init_conv_weight({hw, hw, 3, 3}, rng);
  p.b_h1 = Tensor::zeros({hw});
  p.w_h2 = init_conv_weight({hw, hw, 3, 3}, rng);
  p.b_h2 = Tensor::zeros({hw});
  p.w_out = init_conv_weight({1, hw, 3, 3}, rng);
  p.b_out = Tensor::zeros({1});
  return p;
}

template <typename T>
TensorT<T> timestep_embedding(int t, int dim) {
  check(dim >= 2 && dim % 2 == 0, "timestep_embedding: dim must be even");
  TensorT<T> emb({dim});
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double omega = std::pow(10000.0, -2.0 * i / dim);
    emb[i] = static_cast<T>(std::sin(t * omega));
    emb[half + i] = static_cast<T>(std::cos(t * omega));
  }
  return emb;
}

template <typename T>
DenoiserNodeIds<T> register_params(TapeT<T>& tape,
                                   const DenoiserParamsT<T>& params,
                                   bool requires_grad) {
  DenoiserNodeIds<T> ids;
  ids.w_in = tape.leaf(params.w_in, requires_grad);
  ids.b_in = tape.leaf(params.b_in, requires_grad);
  ids.w_h1 = tape.leaf(params.w_h1, requires_grad);
  ids.b_h1 = tape.leaf(params.b_h1, requires_grad);
  ids.w_h2 = tape.leaf(params.w_h2, requires_grad);
  ids.b_h2 = tape.leaf(params.b_h2, requires_grad);
  ids.w_out = tape.leaf(params.w_out, requires_grad);
  ids.b_out = tape.leaf(params.b_out, requires_grad);
  return ids;
}

template <typename T>
typename TapeT<T>::Id denoiser_forward_tape(TapeT<T>& tape,
                                            const DenoiserNodeIds<T>& ids,
                                            const DenoiserConfig& cfg,
                                            typename TapeT<T>::Id x_t,
                                            typename TapeT<T>::Id y_up,
                                            int t) {
  check(tape.value(x_t).shape == tape.value(y_up).shape,
        "denoiser: x_t and upsampled y must have matching shapes");
  auto input = tape.concat_ch(x_t, y_up);
  auto h0 = tape.conv2d(input, ids.w_in, ids.b_in, 1, 1);
  auto emb = tape.constant(timestep_embedding<T>(t, cfg.hidden_width));
  auto a0 = tape.silu(tape.add_channel_vec(h0, emb));
  auto a1 = tape.silu(tape.conv2d(a0, ids.w_h1, ids.b_h1, 1, 1));
  auto a2 = tape.silu(tape.conv2d(a1, ids.w_h2, ids.b_h2, 1, 1));
  return tape.conv2d(a2, ids.w_out, ids.b_out, 1, 1);
}

template <typename T>
TensorT<T> denoiser_forward_nograd(const DenoiserParamsT<T>& params,
                                   const TensorT<T>& x_t,
                                   const TensorT<T>& y_up, int t) {
  check(x_t.shape == y_up.shape,
        "denoiser: x_t and upsampled y must have matching shapes");
  const DenoiserConfig& cfg = params.cfg;
  TensorT<T> input = ops::concat_ch_fw(x_t, y_up);
  TensorT<T> h0 = ops::conv2d_fw(input, params.w_in, params.b_in, 1, 1);
  TensorT<T> emb = timestep_embedding<T>(t, cfg.hidden_width);
  TensorT<T> a0 = ops::silu_fw(ops::add_channel_vec_fw(h0, emb));
  TensorT<T> a1 =
      ops::silu_fw(ops::conv2d_fw(a0, params.w_h1, params.b_h1, 1, 1));
  TensorT<T> a2 =
      ops::silu_fw(ops::conv2d_fw(a1, params.w_h2, params.b_h2, 1, 1));
  return ops::conv2d_fw(a2, params.w_out, params.b_out, 1, 1);
}

template <typename T>
TensorT<T> upsample_condition(const TensorT<T>& y_lr, int scale) {
  return ops::nearest_up_fw(y_lr, scale);
}

template TensorT<float> timestep_embedding<float>(int, int);
template TensorT<double> timestep_embedding<double>(int, int);
template DenoiserNodeIds<float> register_params<float>(
    TapeT<float>&, const DenoiserParamsT<float>&, bool);
template DenoiserNodeIds<double> register_params<double>(
    TapeT<double>&, const DenoiserParamsT<double>&, bool);
template TapeT<float>::Id denoiser_forward_tape<float>(
    TapeT<float>&, const DenoiserNodeIds<float>&, const DenoiserConfig&,
    TapeT<float>::Id, TapeT<float>::Id, int);
template TapeT<double>::Id denoiser_forward_tape<double>(
    TapeT<double>&, const DenoiserNodeIds<double>&, const DenoiserConfig&,
    TapeT<double>::Id, TapeT<double>::Id, int);
template TensorT<float> denoiser_forward_nograd<float>(
    const DenoiserParamsT<float>&, const TensorT<float>&,
    const TensorT<float>&, int);
template TensorT<double> denoiser_forward_nograd<double>(
    const DenoiserParamsT<double>&, const TensorT<double>&,
    const TensorT<double>&, int);
template TensorT<float> upsample_condition<float>(const TensorT<float>&, int);
template TensorT<double> upsample_condition<double>(const TensorT<double>&,
                                                    int);

}  // namespace bird
