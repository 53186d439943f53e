#include <doctest.h>

#include <cmath>

#include "bird/degrade.hpp"
#include "bird/evalmetrics.hpp"
#include "bird/rng.hpp"
#include "bird/trainer.hpp"

using namespace bird;

namespace {
// Second SSIM written independently (flat loops, no shared helpers).
double ssim_oracle(const Image& a, const Image& b) {
  const double c1 = 0.0001, c2 = 0.0009;
  double total = 0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c)
    for (int y = 0; y + 8 <= a.height; ++y)
      for (int x = 0; x + 8 <= a.width; ++x) {
        double ma = 0, mb = 0;
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) {
            ma += a.at(c, y + i, x + j);
            mb += b.at(c, y + i, x + j);
          }
        ma /= 64.0;
        mb /= 64.0;
        double va = 0, vb = 0, cov = 0;
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) {
            const double da = a.at(c, y + i, x + j) - ma;
            const double db = b.at(c, y + i, x + j) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
          }
        va /= 64.0;
        vb /= 64.0;
        cov /= 64.0;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

Image random_image(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(1, h, w);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}
}  // namespace

TEST_SUITE_BEGIN("evalmetrics");

TEST_CASE("psnr: cap, formula, symmetry") {
  const Image a = random_image(16, 16, 1);
  CHECK(psnr(a, a) == 99.0);

  // Constant difference 0.1 -> MSE 0.01 -> 20 dB.
  Image b(1, 16, 16, 0.2f);
  Image c(1, 16, 16, 0.3f);
  CHECK(psnr(b, c) == doctest::Approx(20.0).epsilon(1e-5));

  const Image d = random_image(16, 16, 2);
  CHECK(psnr(a, d) == doctest::Approx(psnr(d, a)).epsilon(1e-12));
}

TEST_CASE("ssim: identity, non-identity, oracle agreement") {
  const Image a = random_image(20, 24, 3);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  Image inv = a;
  for (float& p : inv.pixels) p = 1.0f - p;
  CHECK(ssim(a, inv) < 1.0);

  const Image b = random_image(20, 24, 4);
  CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-9));

  // Structured pair as a second oracle point.
  const auto corpus = gen_corpus(2, 32, 9);
  const Image blur = gaussian_blur(corpus[0], 1.5);
  CHECK(ssim(corpus[0], blur) ==
        doctest::Approx(ssim_oracle(corpus[0], blur)).epsilon(1e-9));

  CHECK_THROWS(ssim(Image(1, 4, 4, 0.5f), Image(1, 4, 4, 0.5f)));
}

TEST_CASE("evaluate: determinism, row count, metric sanity") {
  TrainingConfig cfg;
  cfg.hr_size = 16;
  cfg.scale = 4;
  cfg.hidden_width = 8;
  cfg.T = 4;
  cfg.corpus_a_n = 4;
  cfg.corpus_b_n = 4;
  cfg.eval_n = 3;
  cfg.batch_k = 2;
  TrainData train_data;
  EvalData eval_data;
  build_datasets(cfg, &train_data, &eval_data);

  DenoiserConfig dcfg;
  dcfg.hidden_width = 8;
  dcfg.scale = 4;
  const DenoiserParams params = init_params(3, dcfg);
  const FrozenFeatures feats = make_frozen_features(4);
  const NoiseSchedule sched = cfg.make_schedule();
  const RewardFn fn = cfg.make_reward_fn();

  const EvalReport r1 = evaluate(params, eval_data.lr, eval_data.hr, sched, fn,
                                 feats, 42, "init");
  const EvalReport r2 = evaluate(params, eval_data.lr, eval_data.hr, sched, fn,
                                 feats, 42, "init");
  REQUIRE(r1.rows.size() == 3);
  for (size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r1.rows[i].psnr == r2.rows[i].psnr);
    CHECK(r1.rows[i].ssim == r2.rows[i].ssim);
    CHECK(r1.rows[i].struct_loss == r2.rows[i].struct_loss);
    CHECK(r1.rows[i].reward == r2.rows[i].reward);
    CHECK(r1.rows[i].psnr >= 0.0);
    CHECK(r1.rows[i].ssim <= 1.0);
    CHECK(r1.rows[i].ssim >= 0.0);
    CHECK(r1.rows[i].reward >= 0.0);
    CHECK(r1.rows[i].reward <= 1.0);
  }
  CHECK_THROWS(evaluate(params, {}, {}, sched, fn, feats, 1, "x"));
}

TEST_SUITE_END();
