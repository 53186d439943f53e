#include "bird/features.hpp"

#include <cmath>

#include "bird/mathops.hpp"
#include "bird/rng.hpp"

namespace bird {

FrozenFeatures make_frozen_features(uint64_t seed) {
  Rng rng(derive_seed(seed, 0x66656174, 0));  // "feat"
  FrozenFeatures f;
  f.seed = seed;
  f.w1 = random_normal<float>({8, 1, 3, 3}, rng, 0.0, 1.0 / std::sqrt(9.0));
  f.b1 = Tensor::zeros({8});
  f.w2 = random_normal<float>({16, 8, 3, 3}, rng, 0.0, 1.0 / std::sqrt(72.0));
  f.b2 = Tensor::zeros({16});
  return f;
}

// Each stage halves the resolution with a 2x2 average pool after a stride-1
// conv (a strided 3x3 conv with pad 1 has no integral output size for even
// inputs under the conv contract).
template <typename T>
typename TapeT<T>::Id extract_tape(TapeT<T>& tape, const FrozenFeaturesT<T>& f,
                                   typename TapeT<T>::Id x) {
  const auto& xv = tape.value(x);
  check(xv.rank() == 3 && xv.dim(1) % 4 == 0 && xv.dim(2) % 4 == 0,
        "extract: H and W must be divisible by 4");
  auto w1 = tape.constant(f.w1);
  auto b1 = tape.constant(f.b1);
  auto w2 = tape.constant(f.w2);
  auto b2 = tape.constant(f.b2);
  auto h1 = tape.area_down(tape.silu(tape.conv2d(x, w1, b1, 1, 1)), 2);
  return tape.area_down(tape.conv2d(h1, w2, b2, 1, 1), 2);
}

template <typename T>
TensorT<T> extract_nograd(const FrozenFeaturesT<T>& f, const TensorT<T>& x) {
  check(x.rank() == 3 && x.dim(1) % 4 == 0 && x.dim(2) % 4 == 0,
        "extract: H and W must be divisible by 4");
  TensorT<T> h1 =
      ops::area_down_fw(ops::silu_fw(ops::conv2d_fw(x, f.w1, f.b1, 1, 1)), 2);
  return ops::area_down_fw(ops::conv2d_fw(h1, f.w2, f.b2, 1, 1), 2);
}

template <typename T>
typename TapeT<T>::Id sem_align_loss(TapeT<T>& tape,
                                     const FrozenFeaturesT<T>& f,
                                     typename TapeT<T>::Id x_hat,
                                     const TensorT<T>& x_ref) {
  check(tape.value(x_hat).shape == x_ref.shape,
        "sem_align_loss: shape mismatch");
  auto fh = extract_tape(tape, f, x_hat);
  auto fr = tape.constant(extract_nograd(f, x_ref));
  auto d = tape.sub(fh, fr);
  return tape.mean(tape.mul(d, d));
}

template <typename T>
typename TapeT<T>::Id struct_loss_tape(TapeT<T>& tape,
                                       const FrozenFeaturesT<T>& f,
                                       typename TapeT<T>::Id x_hat,
                                       const TensorT<T>& x0, T feat_weight) {
  check(tape.value(x_hat).shape == x0.shape, "struct_loss: shape mismatch");
  auto x0_id = tape.constant(x0);
  auto pixel = tape.mean(tape.abs_fn(tape.sub(x_hat, x0_id)));
  auto fh = extract_tape(tape, f, x_hat);
  auto f0 = tape.constant(extract_nograd(f, x0));
  auto d = tape.sub(fh, f0);
  auto feat = tape.mean(tape.mul(d, d));
  return tape.add(pixel, tape.scale(feat, feat_weight));
}

template <typename T>
T struct_loss_value(const FrozenFeaturesT<T>& f, const TensorT<T>& x_hat,
                    const TensorT<T>& x0, T feat_weight) {
  TapeT<T> tape;
  auto x_id = tape.constant(x_hat);
  return tape.value(struct_loss_tape(tape, f, x_id, x0, feat_weight)).item();
}

#define BIRD_INST_FEATURES(T)                                                \
  template TapeT<T>::Id extract_tape<T>(TapeT<T>&, const FrozenFeaturesT<T>&,\
                                        TapeT<T>::Id);                       \
  template TensorT<T> extract_nograd<T>(const FrozenFeaturesT<T>&,           \
                                        const TensorT<T>&);                  \
  template TapeT<T>::Id sem_align_loss<T>(TapeT<T>&,                         \
                                          const FrozenFeaturesT<T>&,         \
                                          TapeT<T>::Id, const TensorT<T>&);  \
  template TapeT<T>::Id struct_loss_tape<T>(TapeT<T>&,                       \
                                            const FrozenFeaturesT<T>&,       \
                                            TapeT<T>::Id, const TensorT<T>&, \
                                            T);                              \
  template T struct_loss_value<T>(const FrozenFeaturesT<T>&,                 \
                                  const TensorT<T>&, const TensorT<T>&, T);

BIRD_INST_FEATURES(float)
BIRD_INST_FEATURES(double)
#undef BIRD_INST_FEATURES

}  // namespace bird
