#pragma once

#include <cstdint>
#include <vector>

#include "bird/image.hpp"

namespace bird {

enum class Family { A_synthetic, B_reallike };

struct DegradationConfig {
  Family family = Family::A_synthetic;
  double blur_sigma_lo = 0.6, blur_sigma_hi = 1.6;
  double noise_std_lo = 0.005, noise_std_hi = 0.03;
  int scale = 4;
  double compression_strength = 0.0;  // fraction of 8x8 DCT bands zeroed
  uint64_t seed = 0;
};

DegradationConfig default_family_a(uint64_t seed);
DegradationConfig default_family_b(uint64_t seed);

// Procedural HR corpus: seeded mixture of sinusoid gratings, filled random
// polygons and low-pass filtered noise textures. Deterministic in seed.
std::vector<Image> gen_corpus(int n, int size, uint64_t seed);

// Family A: isotropic Gaussian blur -> area downsample -> additive Gaussian
// noise -> 6-bit quantization.
// Family B: anisotropic Gaussian blur (axis ratio up to 3:1, random
// orientation) -> area downsample -> signal-dependent noise (std
// proportional to sqrt(pixel)) -> block-DCT compression proxy.
// Output clamped to [0,1] either way.
Image degrade(const Image& hr, const DegradationConfig& cfg);

// Blur helpers (replicated edges). sigma == 0 is the identity.
Image gaussian_blur(const Image& img, double sigma);
Image anisotropic_blur(const Image& img, double sigma_major,
                       double sigma_minor, double theta);

struct PairedItem {
  Image hr;
  Image lr;
};
struct PairedBatch {
  std::vector<PairedItem> items;
};
// Carries LR images only; the trainer never sees an HR for these.
struct UnpairedBatch {
  std::vector<Image> lr;
};

// Draws k items without replacement and degrades each with a per-item seed.
PairedBatch make_paired_batch(const std::vector<Image>& corpus,
                              const DegradationConfig& cfg, int k,
                              uint64_t seed);
UnpairedBatch make_unpaired_batch(const std::vector<Image>& lr_pool, int k,
                                  uint64_t seed);

}  // namespace bird
