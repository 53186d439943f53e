#pragma once

#include <cstdint>
#include <vector>

#include "bird/denoiser.hpp"
#include "bird/rng.hpp"
#include "bird/schedule.hpp"
#include "bird/tape.hpp"
#include "bird/tensor.hpp"

namespace bird {

// x_t = alpha_t x0 + sigma_t eps (vp), plus beta_t * y_up for the shift
// variant (y_up required there, ignored otherwise).
template <typename T>
TensorT<T> add_noise(const TensorT<T>& x0, int t, const TensorT<T>& eps,
                     const NoiseSchedule& sched,
                     const TensorT<T>* y_up = nullptr);

// Closed-form single-step prediction: (x_t - sigma_t eps_hat) / alpha_t,
// shift variant additionally subtracts beta_t * y_up. Requires alpha_t > 0.
template <typename T>
TensorT<T> predict_x0(const TensorT<T>& x_t, int t, const TensorT<T>& eps_hat,
                      const NoiseSchedule& sched,
                      const TensorT<T>* y_up = nullptr);

// Deterministic reverse update x_{t-1} = alpha_{t-1} predict_x0(...) +
// sigma_{t-1} eps_hat (+ beta_{t-1} y_up). `churn` in [0,1) trades part of
// the eps_hat term for fresh noise; 0 (the default) is fully deterministic.
template <typename T>
TensorT<T> reverse_step(const TensorT<T>& x_t, int t,
                        const TensorT<T>& eps_hat, const NoiseSchedule& sched,
                        const TensorT<T>* y_up = nullptr, double churn = 0.0,
                        Rng* rng = nullptr);

// Tape versions of the two closed forms, for the graded last step.
template <typename T>
typename TapeT<T>::Id add_noise_tape(TapeT<T>& tape, typename TapeT<T>::Id x0,
                                     int t, typename TapeT<T>::Id eps,
                                     const NoiseSchedule& sched,
                                     typename TapeT<T>::Id y_up = -1);
template <typename T>
typename TapeT<T>::Id predict_x0_tape(TapeT<T>& tape,
                                      typename TapeT<T>::Id x_t, int t,
                                      typename TapeT<T>::Id eps_hat,
                                      const NoiseSchedule& sched,
                                      typename TapeT<T>::Id y_up = -1);

template <typename T>
struct DiffusionStateT {
  TensorT<T> x;
  int t = 0;
  TensorT<T> x0_pred;  // empty when not recorded
};

template <typename T>
struct SampleTraceT {
  std::vector<DiffusionStateT<T>> states;  // strictly decreasing t
  int stop_grad_boundary = 1;              // gradients flow only below this t
};
using SampleTrace = SampleTraceT<float>;

// Full no-grad reverse chain (vp: from pure noise x_T; shift: from
// y_up + sigma_{T-1} eps at t = T-1, where the LR upsample stands in for
// the clean estimate). Deterministic in (params, y_lr, eps_seed).
template <typename T>
TensorT<T> sample_full(const DenoiserParamsT<T>& params,
                       const TensorT<T>& y_lr, const NoiseSchedule& sched,
                       uint64_t eps_seed, SampleTraceT<T>* trace = nullptr);

// How the pre-boundary chain of sample_with_last_step_grad is evaluated.
// NoGradChain is the production path; OnTapeDetached builds the chain with
// recorded ops and cuts it with detach() at the boundary, which lets tests
// verify the stop-gradient contract against the tape machinery itself.
enum class ChainMode { NoGradChain, OnTapeDetached };

template <typename T>
struct LastStepSampleT {
  typename TapeT<T>::Id x0_final = -1;  // graded prediction node
  TensorT<T> x0_chain;                  // chain output entering the boundary
  SampleTraceT<T> trace;
};

// Algorithm: run the reverse chain to x0 with gradients off, re-noise the
// detached x0 to t=1 with fresh eps, then predict x0 once more with
// gradients enabled through this single call.
template <typename T>
LastStepSampleT<T> sample_with_last_step_grad(
    TapeT<T>& tape, const DenoiserNodeIds<T>& ids,
    const DenoiserParamsT<T>& params, const TensorT<T>& y_lr,
    const NoiseSchedule& sched, uint64_t eps_seed, bool want_trace = false,
    ChainMode mode = ChainMode::NoGradChain,
    const DenoiserNodeIds<T>* chain_ids = nullptr);

// The same rollout fully no-grad (chain, boundary re-noise, final predict);
// used for the frozen reference model with shared seeds.
template <typename T>
TensorT<T> reference_rollout(const DenoiserParamsT<T>& params,
                             const TensorT<T>& y_lr,
                             const NoiseSchedule& sched, uint64_t eps_seed);

}  // namespace bird
