#pragma once

#include <string>
#include <vector>

#include "bird/denoiser.hpp"
#include "bird/features.hpp"
#include "bird/image.hpp"
#include "bird/rewards.hpp"
#include "bird/schedule.hpp"

namespace bird {

// 10*log10(1/MSE) on [0,1] images, capped at 99.0 (returned exactly for
// identical inputs).
double psnr(const Image& a, const Image& b);

// Single-scale SSIM, 8x8 sliding box windows with stride 1, K1=0.01,
// K2=0.03, L=1, biased (1/N) window moments.
double ssim(const Image& a, const Image& b);

struct EvalRow {
  double psnr = 0, ssim = 0, struct_loss = 0, reward = 0;
};
struct EvalStats {
  double mean = 0, stddev = 0;
};
struct EvalReport {
  std::string label;
  std::vector<EvalRow> rows;  // one per eval image
  EvalStats psnr, ssim, struct_loss, reward;

  void write_csv(const std::string& path) const;
  std::string summary_line() const;
};

// Full reverse-samples every LR image (no grad), then scores against the
// hidden HR (psnr/ssim/struct_loss) plus the no-reference reward.
// Deterministic in (params, pairs, eval_seed): per-image noise seeds are
// derived from eval_seed and the image index.
EvalReport evaluate(const DenoiserParams& params,
                    const std::vector<Image>& eval_lr,
                    const std::vector<Image>& eval_hr,
                    const NoiseSchedule& sched, const RewardFn& reward_fn,
                    const FrozenFeatures& feats, uint64_t eval_seed,
                    const std::string& label);

}  // namespace bird
