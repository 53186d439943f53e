#include "bird/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "bird/tensor.hpp"

namespace bird {

namespace {
constexpr double kPi = 3.14159265358979323846;

double cosine_f(double t, double steps) {
  const double s = 0.008;
  const double a = std::cos(((t / steps + s) / (1.0 + s)) * kPi / 2.0);
  return a * a;
}
}  // namespace

NoiseSchedule make_vp_schedule(int steps, double abar_min) {
  check(steps >= 1, "make_vp_schedule: T must be >= 1");
  check(abar_min > 0.0 && abar_min < 1.0, "make_vp_schedule: bad abar_min");
  NoiseSchedule s;
  s.variant = NoiseSchedule::Variant::vp;
  s.steps = steps;
  s.alpha.resize(steps + 1);
  s.sigma.resize(steps + 1);
  const double f0 = cosine_f(0.0, steps);
  s.alpha[0] = 1.0;
  s.sigma[0] = 0.0;
  for (int t = 1; t <= steps; ++t) {
    const double raw = cosine_f(t, steps) / f0;
    const double abar = abar_min + (1.0 - abar_min) * raw;
    s.alpha[t] = std::sqrt(abar);
    s.sigma[t] = std::sqrt(1.0 - abar);
  }
  validate_schedule(s);
  return s;
}

NoiseSchedule make_shift_schedule(int steps, double kappa) {
  check(steps >= 1, "make_shift_schedule: T must be >= 1");
  check(kappa > 0.0, "make_shift_schedule: kappa must be > 0");
  NoiseSchedule s;
  s.variant = NoiseSchedule::Variant::shift;
  s.steps = steps;
  s.kappa = kappa;
  s.alpha.resize(steps + 1);
  s.beta.resize(steps + 1);
  s.sigma.resize(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    const double frac = static_cast<double>(t) / steps;
    s.alpha[t] = 1.0 - frac;
    s.beta[t] = frac;
    s.sigma[t] = kappa * std::sqrt(frac);
  }
  validate_schedule(s);
  return s;
}

void validate_schedule(const NoiseSchedule& s) {
  check(s.steps >= 1, "schedule: T must be >= 1");
  check(static_cast<int>(s.alpha.size()) == s.steps + 1 &&
            static_cast<int>(s.sigma.size()) == s.steps + 1,
        "schedule: coefficient arrays must have T+1 entries");
  check(s.alpha[0] == 1.0 && s.sigma[0] == 0.0,
        "schedule: t=0 endpoint must be (1, 0)");
  for (int t = 1; t <= s.steps; ++t) {
    check(s.alpha[t] < s.alpha[t - 1], "schedule: alpha must be strictly decreasing");
    check(s.sigma[t] > s.sigma[t - 1], "schedule: sigma must be strictly increasing");
  }
  if (s.variant == NoiseSchedule::Variant::vp) {
    for (int t = 0; t <= s.steps; ++t) {
      const double vp = s.alpha[t] * s.alpha[t] + s.sigma[t] * s.sigma[t];
      check(std::fabs(vp - 1.0) < 1e-6, "schedule: alpha^2 + sigma^2 != 1");
    }
  } else {
    check(static_cast<int>(s.beta.size()) == s.steps + 1,
          "schedule: shift variant needs beta");
    for (int t = 0; t <= s.steps; ++t)
      check(std::fabs(s.alpha[t] + s.beta[t] - 1.0) < 1e-6,
            "schedule: alpha + beta != 1");
  }
}

double lambda_weight(int t, const WeightSchedule& ws) {
  check(ws.gamma > 0.0, "lambda_weight: gamma must be > 0");
  check(ws.steps >= 1, "lambda_weight: T must be >= 1");
  check(t >= 0 && t <= ws.steps, "lambda_weight: t out of range");
  if (t == 0) return 0.0;
  if (t == ws.steps) return 1.0;
  return std::pow(static_cast<double>(t) / ws.steps, ws.gamma);
}

}  // namespace bird
