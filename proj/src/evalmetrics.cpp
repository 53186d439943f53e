#include "bird/evalmetrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "bird/diffusion.hpp"
#include "bird/io.hpp"

namespace bird {

double psnr(const Image& a, const Image& b) {
  check(a.channels == b.channels && a.height == b.height && a.width == b.width,
        "psnr: shape mismatch");
  check(a.numel() > 0, "psnr: empty image");
  double mse = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a.pixels[static_cast<size_t>(i)]) -
                     b.pixels[static_cast<size_t>(i)];
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  check(a.channels == b.channels && a.height == b.height && a.width == b.width,
        "ssim: shape mismatch");
  constexpr int kWin = 8;
  check(a.height >= kWin && a.width >= kWin, "ssim: image smaller than window");
  constexpr double c1 = 0.01 * 0.01;  // (K1*L)^2
  constexpr double c2 = 0.03 * 0.03;  // (K2*L)^2
  constexpr double inv_n = 1.0 / (kWin * kWin);
  double total = 0.0;
  int64_t count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y + kWin <= a.height; ++y) {
      for (int x = 0; x + kWin <= a.width; ++x) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = 0; dy < kWin; ++dy)
          for (int dx = 0; dx < kWin; ++dx) {
            const double va = a.at(c, y + dy, x + dx);
            const double vb = b.at(c, y + dy, x + dx);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        const double mu_a = sa * inv_n;
        const double mu_b = sb * inv_n;
        const double var_a = saa * inv_n - mu_a * mu_a;
        const double var_b = sbb * inv_n - mu_b * mu_b;
        const double cov = sab * inv_n - mu_a * mu_b;
        const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
        const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
        total += num / den;
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

namespace {
EvalStats stats_of(const std::vector<double>& v) {
  EvalStats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double acc = 0;
  for (double x : v) acc += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1))
                          : 0.0;
  return s;
}
}  // namespace

void EvalReport::write_csv(const std::string& path) const {
  std::ostringstream out;
  out << "index,psnr,ssim,struct_loss,reward\n";
  char buf[160];
  for (size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i,
                  rows[i].psnr, rows[i].ssim, rows[i].struct_loss,
                  rows[i].reward);
    out << buf;
  }
  write_text_file_atomic(path, out.str());
}

std::string EvalReport::summary_line() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-24s n=%zu  psnr %.3f±%.3f  ssim %.4f±%.4f  "
                "struct %.5f±%.5f  reward %.4f±%.4f",
                label.c_str(), rows.size(), psnr.mean, psnr.stddev, ssim.mean,
                ssim.stddev, struct_loss.mean, struct_loss.stddev, reward.mean,
                reward.stddev);
  return std::string(buf);
}

EvalReport evaluate(const DenoiserParams& params,
                    const std::vector<Image>& eval_lr,
                    const std::vector<Image>& eval_hr,
                    const NoiseSchedule& sched, const RewardFn& reward_fn,
                    const FrozenFeatures& feats, uint64_t eval_seed,
                    const std::string& label) {
  check(!eval_lr.empty(), "evaluate: empty eval set");
  check(eval_lr.size() == eval_hr.size(), "evaluate: lr/hr size mismatch");
  const int n = static_cast<int>(eval_lr.size());
  EvalReport report;
  report.label = label;
  report.rows.resize(static_cast<size_t>(n));
  // Per-image work is independent; rows land at their own index so the
  // aggregation below is order-fixed. Exceptions may not escape the
  // parallel region; the first one is stashed and rethrown after it.
  std::exception_ptr first_error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < n; ++i) {
    try {
      const Tensor lr = eval_lr[static_cast<size_t>(i)].to_tensor();
      Tensor sr = sample_full(
          params, lr, sched,
          derive_seed(eval_seed, 0x6576616c, static_cast<uint64_t>(i)));
      Image sr_img = Image::from_tensor(sr);
      clamp01(sr_img);
      const Image& hr = eval_hr[static_cast<size_t>(i)];
      EvalRow row;
      row.psnr = psnr(sr_img, hr);
      // Raw SSIM can dip below zero on anticorrelated content (untrained
      // models); report rows keep the documented [0,1] range.
      row.ssim = std::max(0.0, ssim(sr_img, hr));
      row.struct_loss =
          struct_loss_value(feats, sr_img.to_tensor(), hr.to_tensor());
      row.reward = reward_value(sr_img.to_tensor(), reward_fn);
      report.rows[static_cast<size_t>(i)] = row;
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  std::vector<double> col(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = report.rows[static_cast<size_t>(i)].psnr;
  report.psnr = stats_of(col);
  for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = report.rows[static_cast<size_t>(i)].ssim;
  report.ssim = stats_of(col);
  for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = report.rows[static_cast<size_t>(i)].struct_loss;
  report.struct_loss = stats_of(col);
  for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = report.rows[static_cast<size_t>(i)].reward;
  report.reward = stats_of(col);
  return report;
}

}  // namespace bird
