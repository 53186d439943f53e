#include "bird/rewards.hpp"

#include <stdexcept>

#include "bird/mathops.hpp"

namespace bird {

RewardFn make_reward(RewardKind kind) {
  RewardFn fn;
  fn.kind = kind;
  return fn;
}

RewardKind reward_kind_from_string(const std::string& s) {
  if (s == "band_energy") return RewardKind::band_energy;
  if (s == "tv_target") return RewardKind::tv_target;
  throw std::invalid_argument("unknown reward kind: " + s);
}

std::string to_string(RewardKind kind) {
  return kind == RewardKind::band_energy ? "band_energy" : "tv_target";
}

namespace {

// 0/1 mask over DCT coefficients with normalized index sum >= rho.
template <typename T>
TensorT<T> band_mask(const std::vector<int>& shape, double rho) {
  int c, h, w;
  ops::chw_dims(shape, &c, &h, &w);
  check(h >= 2 || w >= 2, "band_energy: image too small");
  TensorT<T> mask({c, h, w});
  const double denom = h + w - 2;
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        mask[(static_cast<int64_t>(ch) * h + i) * w + j] =
            (i + j) / denom >= rho ? T(1) : T(0);
  return mask;
}

}  // namespace

template <typename T>
typename TapeT<T>::Id reward_tape(TapeT<T>& tape, typename TapeT<T>::Id x,
                                  const RewardFn& fn) {
  const auto& xv = tape.value(x);
  check(xv.numel() > 0, "reward: empty image");
  if (fn.kind == RewardKind::band_energy) {
    auto m = tape.mean(x);
    auto xm = tape.sub_scalar_bcast(x, m);
    auto coef = tape.dct2(xm);
    auto energy = tape.mul(coef, coef);
    auto mask = tape.constant(band_mask<T>(xv.shape, fn.rho));
    auto num = tape.sum(tape.mul(energy, mask));
    auto den = tape.add(tape.sum(energy), tape.scalar_const(T(1e-8)));
    auto share = tape.div(num, den);
    return tape.tanh_fn(tape.scale(share, static_cast<T>(fn.slope)));
  }
  // tv_target
  auto dh = tape.smooth_abs(tape.diff_h(x), static_cast<T>(fn.tv_eps));
  auto dv = tape.smooth_abs(tape.diff_v(x), static_cast<T>(fn.tv_eps));
  auto tv = tape.scale(tape.add(tape.sum(dh), tape.sum(dv)),
                       T(1) / static_cast<T>(xv.numel()));
  auto z = tape.scale(tape.sub(tv, tape.scalar_const(static_cast<T>(fn.target_tv))),
                      T(1) / static_cast<T>(fn.tv_scale));
  return tape.exp_fn(tape.scale(tape.mul(z, z), T(-1)));
}

template <typename T>
T reward_value(const TensorT<T>& x, const RewardFn& fn) {
  TapeT<T> tape;
  return tape.value(reward_tape(tape, tape.constant(x), fn)).item();
}

template <typename T>
typename TapeT<T>::Id pair_loss(TapeT<T>& tape, const TensorT<T>& x0_clean,
                                typename TapeT<T>::Id x0_hat,
                                const RewardFn& fn) {
  check(x0_clean.shape == tape.value(x0_hat).shape,
        "pair_loss: shape mismatch");
  const T r_clean = reward_value(x0_clean, fn);
  auto r_hat = reward_tape(tape, x0_hat, fn);
  return tape.relu(tape.sub(tape.scalar_const(r_clean), r_hat));
}

template <typename T>
typename TapeT<T>::Id unpair_loss(TapeT<T>& tape, typename TapeT<T>::Id x0_hat,
                                  const RewardFn& fn, T tau) {
  auto r_hat = reward_tape(tape, x0_hat, fn);
  return tape.relu(tape.sub(tape.scalar_const(tau), r_hat));
}

#define BIRD_INST_REWARDS(T)                                               \
  template TapeT<T>::Id reward_tape<T>(TapeT<T>&, TapeT<T>::Id,            \
                                       const RewardFn&);                   \
  template T reward_value<T>(const TensorT<T>&, const RewardFn&);          \
  template TapeT<T>::Id pair_loss<T>(TapeT<T>&, const TensorT<T>&,         \
                                     TapeT<T>::Id, const RewardFn&);       \
  template TapeT<T>::Id unpair_loss<T>(TapeT<T>&, TapeT<T>::Id,            \
                                       const RewardFn&, T);

BIRD_INST_REWARDS(float)
BIRD_INST_REWARDS(double)
#undef BIRD_INST_REWARDS

}  // namespace bird
