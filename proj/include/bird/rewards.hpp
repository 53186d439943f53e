#pragma once

#include "bird/tape.hpp"
#include "bird/tensor.hpp"

namespace bird {

// Differentiable no-reference quality proxies, output always in [0,1].
//
// band_energy: share of (mean-removed) DCT energy in coefficients with
// normalized index sum >= rho, squashed by tanh(slope * share). Sharp,
// textured images score high; blurred ones low.
//
// tv_target: exp(-((TV(x) - target_tv) / tv_scale)^2) where TV is the mean
// smoothed absolute forward difference. Peaks when the total variation of x
// matches the target.
enum class RewardKind { band_energy, tv_target };

struct RewardFn {
  RewardKind kind = RewardKind::band_energy;
  double rho = 0.25;     // band threshold on u = (i+j)/(H+W-2)
  double slope = 10.0;   // tanh saturation slope
  double target_tv = 0.12;
  double tv_scale = 0.08;
  double tv_eps = 0.03;  // smoothing width of |.| inside TV
};

RewardFn make_reward(RewardKind kind);
RewardKind reward_kind_from_string(const std::string& s);
std::string to_string(RewardKind kind);

// Reward of a tape node; the result node is differentiable w.r.t. x.
template <typename T>
typename TapeT<T>::Id reward_tape(TapeT<T>& tape, typename TapeT<T>::Id x,
                                  const RewardFn& fn);

// Reward of a raw tensor (no gradients); same arithmetic as reward_tape.
template <typename T>
T reward_value(const TensorT<T>& x, const RewardFn& fn);

// Preference function phi: ReLU hinge (phi(v) = max(v, 0)).
//
// pair loss, Algorithm line "Relative reward": phi(r(x0) - r(x0_hat)) with
// gradient flowing only through r(x0_hat). Zero whenever the prediction's
// reward reaches the clean image's reward, so there is no pressure to
// overshoot the reference (the reward-hacking guard).
template <typename T>
typename TapeT<T>::Id pair_loss(TapeT<T>& tape, const TensorT<T>& x0_clean,
                                typename TapeT<T>::Id x0_hat,
                                const RewardFn& fn);

// Unpaired reward loss: phi(tau - r(x0_hat)); minimizing it raises the
// reward toward the margin tau.
template <typename T>
typename TapeT<T>::Id unpair_loss(TapeT<T>& tape,
                                  typename TapeT<T>::Id x0_hat,
                                  const RewardFn& fn, T tau);

}  // namespace bird
