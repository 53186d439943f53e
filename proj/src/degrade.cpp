#include "bird/degrade.hpp"

#include <algorithm>
#include <cmath>

#include "bird/mathops.hpp"
#include "bird/rng.hpp"

namespace bird {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr uint64_t kTagCorpus = 0x636f7270;  // "corp"
constexpr uint64_t kTagBatch = 0x62617463;   // "batc"

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void paint_grating(Image& img, Rng& rng) {
  const int n = rng.uniform_int(1, 2);
  std::vector<float> acc(img.pixels.size(), 0.0f);
  for (int g = 0; g < n; ++g) {
    const double fx = rng.uniform(0.5, 5.0);
    const double fy = rng.uniform(0.5, 5.0);
    const double amp = rng.uniform(0.15, 0.4);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        acc[static_cast<size_t>(y) * img.width + x] += static_cast<float>(
            amp * std::sin(2.0 * kPi * (fx * x + fy * y) / img.width + phase));
  }
  for (size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = 0.5f + acc[i] / static_cast<float>(n);
}

bool point_in_polygon(double px, double py, const std::vector<double>& vx,
                      const std::vector<double>& vy) {
  bool inside = false;
  const size_t n = vx.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((vy[i] > py) != (vy[j] > py) &&
        px < (vx[j] - vx[i]) * (py - vy[i]) / (vy[j] - vy[i]) + vx[i])
      inside = !inside;
  }
  return inside;
}

void paint_polygons(Image& img, Rng& rng) {
  const float bg = static_cast<float>(rng.uniform(0.15, 0.45));
  std::fill(img.pixels.begin(), img.pixels.end(), bg);
  const int npoly = rng.uniform_int(1, 3);
  for (int p = 0; p < npoly; ++p) {
    const int nv = rng.uniform_int(3, 6);
    std::vector<double> vx(nv), vy(nv);
    for (int i = 0; i < nv; ++i) {
      vx[i] = rng.uniform(0.0, img.width);
      vy[i] = rng.uniform(0.0, img.height);
    }
    const float fill = static_cast<float>(rng.uniform(0.55, 0.95));
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (point_in_polygon(x + 0.5, y + 0.5, vx, vy))
          img.at(0, y, x) = fill;
  }
}

void paint_lowpass_noise(Image& img, Rng& rng) {
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  const double sigma = rng.uniform(1.0, 3.0);
  img = gaussian_blur(img, sigma);
  float mn = img.pixels[0], mx = img.pixels[0];
  for (float p : img.pixels) {
    mn = std::min(mn, p);
    mx = std::max(mx, p);
  }
  const float lo = static_cast<float>(rng.uniform(0.1, 0.3));
  const float hi = static_cast<float>(rng.uniform(0.7, 0.9));
  if (mx - mn < 1e-12f) {
    std::fill(img.pixels.begin(), img.pixels.end(), 0.5f);
    return;
  }
  for (float& p : img.pixels) p = lo + (hi - lo) * (p - mn) / (mx - mn);
}

std::vector<double> gaussian_kernel_1d(double sigma, int* radius) {
  *radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * *radius + 1);
  double sum = 0.0;
  for (int i = -*radius; i <= *radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + *radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Image area_downsample(const Image& img, int factor) {
  Tensor t = ops::area_down_fw(img.to_tensor(), factor);
  return Image::from_tensor(t);
}

// Zeroes the block-DCT coefficients with index sum i+j >= cutoff,
// cutoff = ceil((1-strength)*(2b-1)); strength 0 keeps everything. Blocks
// are 8x8; when the image is smaller the block shrinks to the largest
// common divisor of the dims not above 8.
void block_dct_compress(Image& img, double strength) {
  if (strength <= 0.0) return;
  int b = std::min({8, img.height, img.width});
  while (b > 1 && (img.height % b != 0 || img.width % b != 0)) --b;
  const int max_sum = 2 * b - 1;
  const int cutoff = clampi(
      static_cast<int>(std::ceil((1.0 - strength) * max_sum)), 0, max_sum);
  for (int c = 0; c < img.channels; ++c) {
    for (int by = 0; by < img.height; by += b) {
      for (int bx = 0; bx < img.width; bx += b) {
        Tensor block({1, b, b});
        for (int y = 0; y < b; ++y)
          for (int x = 0; x < b; ++x)
            block[static_cast<int64_t>(y) * b + x] = img.at(c, by + y, bx + x);
        Tensor coef = ops::dct2_fw(block);
        for (int i = 0; i < b; ++i)
          for (int j = 0; j < b; ++j)
            if (i + j >= cutoff) coef[static_cast<int64_t>(i) * b + j] = 0.0f;
        Tensor back = ops::idct2_fw(coef);
        for (int y = 0; y < b; ++y)
          for (int x = 0; x < b; ++x)
            img.at(c, by + y, bx + x) = back[static_cast<int64_t>(y) * b + x];
      }
    }
  }
}

}  // namespace

DegradationConfig default_family_a(uint64_t seed) {
  DegradationConfig cfg;
  cfg.family = Family::A_synthetic;
  cfg.blur_sigma_lo = 0.6;
  cfg.blur_sigma_hi = 1.6;
  cfg.noise_std_lo = 0.005;
  cfg.noise_std_hi = 0.03;
  cfg.scale = 4;
  cfg.compression_strength = 0.0;
  cfg.seed = seed;
  return cfg;
}

DegradationConfig default_family_b(uint64_t seed) {
  DegradationConfig cfg;
  cfg.family = Family::B_reallike;
  cfg.blur_sigma_lo = 0.8;
  cfg.blur_sigma_hi = 2.2;
  cfg.noise_std_lo = 0.01;
  cfg.noise_std_hi = 0.05;
  cfg.scale = 4;
  cfg.compression_strength = 0.5;
  cfg.seed = seed;
  return cfg;
}

std::vector<Image> gen_corpus(int n, int size, uint64_t seed) {
  check(n >= 1, "gen_corpus: n must be >= 1");
  check(size >= 8 && size % 8 == 0, "gen_corpus: size must be a multiple of 8");
  std::vector<Image> corpus(static_cast<size_t>(n));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, kTagCorpus, static_cast<uint64_t>(i)));
    Image img(1, size, size);
    switch (rng.uniform_int(0, 2)) {
      case 0: paint_grating(img, rng); break;
      case 1: paint_polygons(img, rng); break;
      default: paint_lowpass_noise(img, rng); break;
    }
    clamp01(img);
    corpus[static_cast<size_t>(i)] = std::move(img);
  }
  return corpus;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  int radius = 0;
  const std::vector<double> k = gaussian_kernel_1d(sigma, &radius);
  Image tmp(img.channels, img.height, img.width);
  Image out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * img.at(c, y, clampi(x + i, 0, img.width - 1));
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * tmp.at(c, clampi(y + i, 0, img.height - 1), x);
        out.at(c, y, x) = static_cast<float>(acc);
      }
  }
  return out;
}

Image anisotropic_blur(const Image& img, double sigma_major,
                       double sigma_minor, double theta) {
  if (sigma_major <= 0.0) return img;
  sigma_minor = std::max(sigma_minor, 1e-3);
  const int radius =
      std::max(1, static_cast<int>(std::ceil(3.0 * sigma_major)));
  const int ksize = 2 * radius + 1;
  std::vector<double> kern(static_cast<size_t>(ksize) * ksize);
  const double ct = std::cos(theta), st = std::sin(theta);
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const double u = ct * dx + st * dy;    // along major axis
      const double v = -st * dx + ct * dy;   // along minor axis
      const double e = 0.5 * (u * u / (sigma_major * sigma_major) +
                              v * v / (sigma_minor * sigma_minor));
      const double w = std::exp(-e);
      kern[static_cast<size_t>(dy + radius) * ksize + dx + radius] = w;
      sum += w;
    }
  for (double& w : kern) w /= sum;

  Image out(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx)
            acc += kern[static_cast<size_t>(dy + radius) * ksize + dx + radius] *
                   img.at(c, clampi(y + dy, 0, img.height - 1),
                          clampi(x + dx, 0, img.width - 1));
        out.at(c, y, x) = static_cast<float>(acc);
      }
  return out;
}

Image degrade(const Image& hr, const DegradationConfig& cfg) {
  check(hr.height % cfg.scale == 0 && hr.width % cfg.scale == 0,
        "degrade: HR dims must be divisible by scale");
  Rng rng(derive_seed(cfg.seed, 0xde67ade, 0));
  Image work;
  if (cfg.family == Family::A_synthetic) {
    const double sigma = rng.uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi);
    work = gaussian_blur(hr, sigma);
    work = area_downsample(work, cfg.scale);
    const double noise_std = rng.uniform(cfg.noise_std_lo, cfg.noise_std_hi);
    if (noise_std > 0.0)
      for (float& p : work.pixels)
        p += static_cast<float>(noise_std * rng.normal());
    // 6-bit quantization.
    for (float& p : work.pixels) {
      const float c = p < 0.0f ? 0.0f : (p > 1.0f ? 1.0f : p);
      p = std::round(c * 63.0f) / 63.0f;
    }
  } else {
    const double sigma_major = rng.uniform(cfg.blur_sigma_lo, cfg.blur_sigma_hi);
    const double ratio = rng.uniform(1.0, 3.0);
    const double theta = rng.uniform(0.0, kPi);
    work = anisotropic_blur(hr, sigma_major, sigma_major / ratio, theta);
    work = area_downsample(work, cfg.scale);
    const double noise_std = rng.uniform(cfg.noise_std_lo, cfg.noise_std_hi);
    if (noise_std > 0.0)
      for (float& p : work.pixels)
        p += static_cast<float>(noise_std * rng.normal() *
                                std::sqrt(std::max(p, 0.0f)));
    if (cfg.compression_strength > 0.0)
      block_dct_compress(work, cfg.compression_strength);
  }
  clamp01(work);
  return work;
}

namespace {
std::vector<int> draw_indices(int pool, int k, Rng& rng) {
  check(k >= 1 && k <= pool, "batch: need 1 <= k <= corpus size");
  std::vector<int> idx(static_cast<size_t>(pool));
  for (int i = 0; i < pool; ++i) idx[static_cast<size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    const int j = rng.uniform_int(i, pool - 1);
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(k));
  return idx;
}
}  // namespace

PairedBatch make_paired_batch(const std::vector<Image>& corpus,
                              const DegradationConfig& cfg, int k,
                              uint64_t seed) {
  check(!corpus.empty(), "make_paired_batch: empty corpus");
  Rng rng(derive_seed(seed, kTagBatch, 0));
  const std::vector<int> idx =
      draw_indices(static_cast<int>(corpus.size()), k, rng);
  PairedBatch batch;
  batch.items.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    DegradationConfig item_cfg = cfg;
    item_cfg.seed = derive_seed(seed, kTagBatch, 1 + static_cast<uint64_t>(i));
    const Image& hr = corpus[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    batch.items.push_back({hr, degrade(hr, item_cfg)});
  }
  return batch;
}

UnpairedBatch make_unpaired_batch(const std::vector<Image>& lr_pool, int k,
                                  uint64_t seed) {
  check(!lr_pool.empty(), "make_unpaired_batch: empty pool");
  Rng rng(derive_seed(seed, kTagBatch, 2));
  const std::vector<int> idx =
      draw_indices(static_cast<int>(lr_pool.size()), k, rng);
  UnpairedBatch batch;
  batch.lr.reserve(static_cast<size_t>(k));
  for (int i : idx) batch.lr.push_back(lr_pool[static_cast<size_t>(i)]);
  return batch;
}

}  // namespace bird
