#pragma once

#include <cstdint>

#include "bird/tape.hpp"
#include "bird/tensor.hpp"

namespace bird {

// Frozen random feature extractor f: two stride-2 3x3 convs (widths 8 and
// 16) with silu between, weights drawn once from a seed and never updated.
// Output shape (16, H/4, W/4). Stands in for a pretrained semantic backbone:
// random projections still define a usable alignment metric.
template <typename T>
struct FrozenFeaturesT {
  uint64_t seed = 0;
  TensorT<T> w1, b1;  // [8,1,3,3]
  TensorT<T> w2, b2;  // [16,8,3,3]

  template <typename U>
  FrozenFeaturesT<U> cast() const {
    FrozenFeaturesT<U> out;
    out.seed = seed;
    out.w1 = w1.template cast<U>();
    out.b1 = b1.template cast<U>();
    out.w2 = w2.template cast<U>();
    out.b2 = b2.template cast<U>();
    return out;
  }
};
using FrozenFeatures = FrozenFeaturesT<float>;

FrozenFeatures make_frozen_features(uint64_t seed);

// Differentiable w.r.t. x only; the weights enter the tape as constants.
template <typename T>
typename TapeT<T>::Id extract_tape(TapeT<T>& tape,
                                   const FrozenFeaturesT<T>& f,
                                   typename TapeT<T>::Id x);

template <typename T>
TensorT<T> extract_nograd(const FrozenFeaturesT<T>& f, const TensorT<T>& x);

// Semantic alignment, mean over feature elements of (f(x_hat)-f(x_ref))^2;
// x_ref is the (frozen) reference output and contributes no gradient.
template <typename T>
typename TapeT<T>::Id sem_align_loss(TapeT<T>& tape,
                                     const FrozenFeaturesT<T>& f,
                                     typename TapeT<T>::Id x_hat,
                                     const TensorT<T>& x_ref);

// Distortion D(x_hat, x0) = mean|x_hat - x0| +
// feat_weight * mean((f(x_hat)-f(x0))^2). x0 carries no gradient.
template <typename T>
typename TapeT<T>::Id struct_loss_tape(TapeT<T>& tape,
                                       const FrozenFeaturesT<T>& f,
                                       typename TapeT<T>::Id x_hat,
                                       const TensorT<T>& x0,
                                       T feat_weight = T(0.5));

template <typename T>
T struct_loss_value(const FrozenFeaturesT<T>& f, const TensorT<T>& x_hat,
                    const TensorT<T>& x0, T feat_weight = T(0.5));

}  // namespace bird
