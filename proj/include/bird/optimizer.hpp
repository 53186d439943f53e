#pragma once

#include <cstdint>
#include <vector>

#include "bird/denoiser.hpp"
#include "bird/tensor.hpp"

namespace bird {

// Adam moments aligned with DenoiserParams::named() order.
struct AdamState {
  std::vector<Tensor> m, v;
  int64_t step = 0;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam update. Grads must be finite and ordered
// like params.named(); moments are allocated on first use.
void adam_update(DenoiserParams& params, const std::vector<Tensor>& grads,
                 AdamState& state, const AdamConfig& cfg);

}  // namespace bird
