#include "bird/diffusion.hpp"

#include <cmath>

#include "bird/mathops.hpp"

namespace bird {

namespace {
constexpr uint64_t kTagInitNoise = 0x78545f;  // chain start noise
constexpr uint64_t kTagLastEps = 0x653100;    // fresh eps at the boundary

template <typename T>
struct Coeffs {
  T alpha, sigma, beta, inv_alpha;
};

template <typename T>
Coeffs<T> coeffs_at(const NoiseSchedule& sched, int t) {
  check(t >= 0 && t <= sched.steps, "diffusion: t out of range");
  Coeffs<T> c;
  c.alpha = static_cast<T>(sched.alpha[t]);
  c.sigma = static_cast<T>(sched.sigma[t]);
  c.beta = sched.variant == NoiseSchedule::Variant::shift
               ? static_cast<T>(sched.beta[t])
               : T(0);
  c.inv_alpha = c.alpha == T(0) ? T(0) : T(1) / c.alpha;
  return c;
}

bool is_shift(const NoiseSchedule& s) {
  return s.variant == NoiseSchedule::Variant::shift;
}

template <typename T>
const TensorT<T>& require_y(const TensorT<T>* y_up, const char* who) {
  check(y_up != nullptr,
        std::string(who) + ": shift schedule requires the upsampled LR");
  return *y_up;
}
}  // namespace

template <typename T>
TensorT<T> add_noise(const TensorT<T>& x0, int t, const TensorT<T>& eps,
                     const NoiseSchedule& sched, const TensorT<T>* y_up) {
  check(x0.same_shape(eps), "add_noise: eps shape must match x0");
  const auto c = coeffs_at<T>(sched, t);
  TensorT<T> out = ops::ew_add(ops::ew_scale(x0, c.alpha),
                               ops::ew_scale(eps, c.sigma));
  if (is_shift(sched))
    out = ops::ew_add(out, ops::ew_scale(require_y(y_up, "add_noise"), c.beta));
  return out;
}

template <typename T>
TensorT<T> predict_x0(const TensorT<T>& x_t, int t, const TensorT<T>& eps_hat,
                      const NoiseSchedule& sched, const TensorT<T>* y_up) {
  check(x_t.same_shape(eps_hat), "predict_x0: eps shape must match x_t");
  const auto c = coeffs_at<T>(sched, t);
  if (t == 0) return x_t;  // alpha=1, sigma=0: the state is the clean image
  check(sched.alpha[t] > 0.0,
        "predict_x0: alpha_t = 0; schedule not invertible at this t");
  TensorT<T> num = ops::ew_sub(x_t, ops::ew_scale(eps_hat, c.sigma));
  if (is_shift(sched))
    num = ops::ew_sub(num,
                      ops::ew_scale(require_y(y_up, "predict_x0"), c.beta));
  return ops::ew_scale(num, c.inv_alpha);
}

template <typename T>
TensorT<T> reverse_step(const TensorT<T>& x_t, int t,
                        const TensorT<T>& eps_hat, const NoiseSchedule& sched,
                        const TensorT<T>* y_up, double churn, Rng* rng) {
  check(t >= 1, "reverse_step: t must be >= 1");
  TensorT<T> x0_hat = predict_x0(x_t, t, eps_hat, sched, y_up);
  const auto c = coeffs_at<T>(sched, t - 1);
  T dir_scale = c.sigma;
  TensorT<T> out = ops::ew_scale(x0_hat, c.alpha);
  if (churn > 0.0) {
    check(rng != nullptr && churn < 1.0, "reverse_step: bad churn setup");
    dir_scale = static_cast<T>(c.sigma * std::sqrt(1.0 - churn * churn));
    TensorT<T> zeta = random_normal<T>(x_t.shape, *rng);
    out = ops::ew_add(out,
                      ops::ew_scale(zeta, static_cast<T>(c.sigma * churn)));
  }
  out = ops::ew_add(out, ops::ew_scale(eps_hat, dir_scale));
  if (is_shift(sched))
    out = ops::ew_add(out,
                      ops::ew_scale(require_y(y_up, "reverse_step"), c.beta));
  return out;
}

template <typename T>
typename TapeT<T>::Id add_noise_tape(TapeT<T>& tape, typename TapeT<T>::Id x0,
                                     int t, typename TapeT<T>::Id eps,
                                     const NoiseSchedule& sched,
                                     typename TapeT<T>::Id y_up) {
  const auto c = coeffs_at<T>(sched, t);
  auto out = tape.add(tape.scale(x0, c.alpha), tape.scale(eps, c.sigma));
  if (is_shift(sched)) {
    check(y_up >= 0, "add_noise_tape: shift schedule requires y_up");
    out = tape.add(out, tape.scale(y_up, c.beta));
  }
  return out;
}

template <typename T>
typename TapeT<T>::Id predict_x0_tape(TapeT<T>& tape,
                                      typename TapeT<T>::Id x_t, int t,
                                      typename TapeT<T>::Id eps_hat,
                                      const NoiseSchedule& sched,
                                      typename TapeT<T>::Id y_up) {
  if (t == 0) return x_t;
  check(sched.alpha[t] > 0.0, "predict_x0_tape: alpha_t = 0");
  const auto c = coeffs_at<T>(sched, t);
  auto num = tape.sub(x_t, tape.scale(eps_hat, c.sigma));
  if (is_shift(sched)) {
    check(y_up >= 0, "predict_x0_tape: shift schedule requires y_up");
    num = tape.sub(num, tape.scale(y_up, c.beta));
  }
  return tape.scale(num, c.inv_alpha);
}

namespace {

// Chain start state and its timestep: pure noise at t=T for vp, LR upsample
// plus kappa-scaled noise at t=T-1 for the shift variant.
template <typename T>
std::pair<TensorT<T>, int> chain_start(const TensorT<T>& y_up,
                                       const NoiseSchedule& sched,
                                       uint64_t eps_seed) {
  Rng rng(derive_seed(eps_seed, kTagInitNoise, 0));
  if (!is_shift(sched)) {
    return {random_normal<T>(y_up.shape, rng), sched.steps};
  }
  const int t0 = sched.steps - 1;
  check(t0 >= 1, "shift sampling needs T >= 2");
  TensorT<T> eps = random_normal<T>(y_up.shape, rng);
  TensorT<T> x = ops::ew_add(
      y_up, ops::ew_scale(eps, static_cast<T>(sched.sigma[t0])));
  return {std::move(x), t0};
}

}  // namespace

template <typename T>
TensorT<T> sample_full(const DenoiserParamsT<T>& params,
                       const TensorT<T>& y_lr, const NoiseSchedule& sched,
                       uint64_t eps_seed, SampleTraceT<T>* trace) {
  const TensorT<T> y_up = upsample_condition(y_lr, params.cfg.scale);
  auto [x, t_start] = chain_start(y_up, sched, eps_seed);
  const TensorT<T>* y_ptr = is_shift(sched) ? &y_up : nullptr;
  if (trace) {
    trace->states.clear();
    trace->states.push_back({x, t_start, TensorT<T>()});
  }
  for (int t = t_start; t >= 1; --t) {
    const TensorT<T> eps_hat = denoiser_forward_nograd(params, x, y_up, t);
    TensorT<T> x0_hat = predict_x0(x, t, eps_hat, sched, y_ptr);
    const auto c = coeffs_at<T>(sched, t - 1);
    TensorT<T> next = ops::ew_add(ops::ew_scale(x0_hat, c.alpha),
                                  ops::ew_scale(eps_hat, c.sigma));
    if (is_shift(sched)) next = ops::ew_add(next, ops::ew_scale(y_up, c.beta));
    x = std::move(next);
    if (trace) trace->states.push_back({x, t - 1, std::move(x0_hat)});
  }
  return x;
}

template <typename T>
LastStepSampleT<T> sample_with_last_step_grad(
    TapeT<T>& tape, const DenoiserNodeIds<T>& ids,
    const DenoiserParamsT<T>& params, const TensorT<T>& y_lr,
    const NoiseSchedule& sched, uint64_t eps_seed, bool want_trace,
    ChainMode mode, const DenoiserNodeIds<T>* chain_ids) {
  LastStepSampleT<T> out;
  out.trace.stop_grad_boundary = 1;
  const TensorT<T> y_up = upsample_condition(y_lr, params.cfg.scale);

  Rng eps1_rng(derive_seed(eps_seed, kTagLastEps, 0));
  const TensorT<T> eps1 = random_normal<T>(y_up.shape, eps1_rng);

  typename TapeT<T>::Id x1_id = -1;
  typename TapeT<T>::Id y_up_id = -1;
  if (mode == ChainMode::NoGradChain) {
    SampleTraceT<T> trace;
    out.x0_chain =
        sample_full(params, y_lr, sched, eps_seed, want_trace ? &trace : nullptr);
    if (want_trace) out.trace.states = std::move(trace.states);
    // Line "x_1 = alpha_1 stop_grad(x0) + sigma_1 eps": the chain output
    // enters the tape as a constant, which is exactly the detached value.
    TensorT<T> x1 = ops::ew_add(ops::ew_scale(out.x0_chain,
                                              static_cast<T>(sched.alpha[1])),
                                ops::ew_scale(eps1,
                                              static_cast<T>(sched.sigma[1])));
    if (is_shift(sched))
      x1 = ops::ew_add(x1, ops::ew_scale(y_up, static_cast<T>(sched.beta[1])));
    x1_id = tape.constant(std::move(x1));
    y_up_id = tape.constant(y_up);
  } else {
    // Chain recorded on the tape (optionally with a separate parameter set),
    // then cut with detach() at the boundary.
    const DenoiserNodeIds<T>& cids = chain_ids ? *chain_ids : ids;
    y_up_id = tape.constant(y_up);
    auto [x_start, t_start] = chain_start(y_up, sched, eps_seed);
    auto x_id = tape.constant(std::move(x_start));
    const auto y_for_sched = is_shift(sched) ? y_up_id : -1;
    if (want_trace)
      out.trace.states.push_back({tape.value(x_id), t_start, TensorT<T>()});
    for (int t = t_start; t >= 1; --t) {
      auto eps_hat = denoiser_forward_tape(tape, cids, params.cfg, x_id,
                                           y_up_id, t);
      auto x0_hat = predict_x0_tape(tape, x_id, t, eps_hat, sched, y_for_sched);
      const auto c = coeffs_at<T>(sched, t - 1);
      auto next = tape.add(tape.scale(x0_hat, c.alpha),
                           tape.scale(eps_hat, c.sigma));
      if (is_shift(sched)) next = tape.add(next, tape.scale(y_up_id, c.beta));
      x_id = next;
      if (want_trace)
        out.trace.states.push_back({tape.value(x_id), t - 1,
                                    tape.value(x0_hat)});
    }
    out.x0_chain = tape.value(x_id);
    auto detached = tape.detach(x_id);
    auto eps1_id = tape.constant(eps1);
    x1_id = add_noise_tape(tape, detached, 1, eps1_id, sched, y_for_sched);
  }

  const auto y_for_sched = is_shift(sched) ? y_up_id : -1;
  auto eps_hat1 =
      denoiser_forward_tape(tape, ids, params.cfg, x1_id, y_up_id, 1);
  out.x0_final = predict_x0_tape(tape, x1_id, 1, eps_hat1, sched, y_for_sched);
  return out;
}

template <typename T>
TensorT<T> reference_rollout(const DenoiserParamsT<T>& params,
                             const TensorT<T>& y_lr,
                             const NoiseSchedule& sched, uint64_t eps_seed) {
  const TensorT<T> y_up = upsample_condition(y_lr, params.cfg.scale);
  const TensorT<T> x0_chain = sample_full(params, y_lr, sched, eps_seed);
  Rng eps1_rng(derive_seed(eps_seed, kTagLastEps, 0));
  const TensorT<T> eps1 = random_normal<T>(y_up.shape, eps1_rng);
  TensorT<T> x1 =
      ops::ew_add(ops::ew_scale(x0_chain, static_cast<T>(sched.alpha[1])),
                  ops::ew_scale(eps1, static_cast<T>(sched.sigma[1])));
  if (is_shift(sched))
    x1 = ops::ew_add(x1, ops::ew_scale(y_up, static_cast<T>(sched.beta[1])));
  const TensorT<T> eps_hat = denoiser_forward_nograd(params, x1, y_up, 1);
  const TensorT<T>* y_ptr = is_shift(sched) ? &y_up : nullptr;
  return predict_x0(x1, 1, eps_hat, sched, y_ptr);
}

#define BIRD_INST_DIFFUSION(T)                                                \
  template TensorT<T> add_noise<T>(const TensorT<T>&, int, const TensorT<T>&, \
                                   const NoiseSchedule&, const TensorT<T>*);  \
  template TensorT<T> predict_x0<T>(const TensorT<T>&, int,                   \
                                    const TensorT<T>&, const NoiseSchedule&,  \
                                    const TensorT<T>*);                       \
  template TensorT<T> reverse_step<T>(const TensorT<T>&, int,                 \
                                      const TensorT<T>&,                      \
                                      const NoiseSchedule&, const TensorT<T>*,\
                                      double, Rng*);                          \
  template TapeT<T>::Id add_noise_tape<T>(TapeT<T>&, TapeT<T>::Id, int,       \
                                          TapeT<T>::Id, const NoiseSchedule&, \
                                          TapeT<T>::Id);                      \
  template TapeT<T>::Id predict_x0_tape<T>(TapeT<T>&, TapeT<T>::Id, int,      \
                                           TapeT<T>::Id,                      \
                                           const NoiseSchedule&,              \
                                           TapeT<T>::Id);                     \
  template TensorT<T> sample_full<T>(const DenoiserParamsT<T>&,               \
                                     const TensorT<T>&, const NoiseSchedule&, \
                                     uint64_t, SampleTraceT<T>*);             \
  template LastStepSampleT<T> sample_with_last_step_grad<T>(                  \
      TapeT<T>&, const DenoiserNodeIds<T>&, const DenoiserParamsT<T>&,        \
      const TensorT<T>&, const NoiseSchedule&, uint64_t, bool, ChainMode,     \
      const DenoiserNodeIds<T>*);                                             \
  template TensorT<T> reference_rollout<T>(const DenoiserParamsT<T>&,         \
                                           const TensorT<T>&,                 \
                                           const NoiseSchedule&, uint64_t);

BIRD_INST_DIFFUSION(float)
BIRD_INST_DIFFUSION(double)
#undef BIRD_INST_DIFFUSION

}  // namespace bird
