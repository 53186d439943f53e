#pragma once

#include <vector>

namespace bird {

// Per-timestep noising coefficients, index 0..T. t=0 is the clean image,
// t=T maximal noise.
//
// vp:    x_t = alpha[t] * x0 + sigma[t] * eps, alpha^2 + sigma^2 = 1.
// shift: x_t = alpha[t] * x0 + beta[t] * up(y) + sigma[t] * eps,
//        alpha + beta = 1 (interpolation toward the LR conditioning signal).
struct NoiseSchedule {
  enum class Variant { vp, shift };
  Variant variant = Variant::vp;
  int steps = 0;  // T
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<double> beta;  // shift variant only
  double kappa = 0.0;        // shift noise scale
};

// Cosine cumulative schedule: abar(t) = f(t)/f(0),
// f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2), s = 0.008, then squashed to
// abar_min + (1 - abar_min) * abar so alpha stays bounded away from zero
// (the raw formula gives alpha_T ~ 1e-17, which makes the closed-form
// x0 prediction as well as reverse sampling numerically meaningless in
// 32-bit). alpha = sqrt(abar), sigma = sqrt(1 - abar); endpoint (1, 0) at
// t=0 is exact.
NoiseSchedule make_vp_schedule(int steps, double abar_min = 4e-3);

// Linear interpolation ramps: alpha = 1 - t/T, beta = t/T,
// sigma = kappa * sqrt(t/T).
NoiseSchedule make_shift_schedule(int steps, double kappa);

// Throws on any violated schedule invariant.
void validate_schedule(const NoiseSchedule& s);

// Distortion-perception weight lambda(t) = (t/T)^gamma: 0 at t=0, 1 at t=T,
// nondecreasing in t.
struct WeightSchedule {
  double gamma = 8.0;
  int steps = 16;
};

double lambda_weight(int t, const WeightSchedule& ws);

}  // namespace bird
