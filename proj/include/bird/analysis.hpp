#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bird/image.hpp"

namespace bird {

// Frequency bands over normalized DCT index sum u = (i+j)/(H+W-2):
// low u < 1/6, mid 1/6 <= u < 1/2, high u >= 1/2. The three masks
// partition the coefficients exactly.
enum class Band { low, mid, high };

// 8-bit LBP code of a 3x3 patch (row-major, 9 values). Bit i is set iff
// neighbor_i >= center; neighbors clockwise from top-left, bit 0 = top-left.
int lbp_code(const float patch[9]);

// Normalized 256-bin histogram of LBP codes over all interior pixels of the
// first channel; bins sum to 1.
std::array<double, 256> lbp_histogram(const Image& img);

// Cosine similarity of the band-masked DCT coefficient vectors of two
// equal-size images (callers upsample LR first); 0 if either masked vector
// is all-zero.
double band_cosine(const Image& lr_up, const Image& hr, Band band);

// Fraction of total (mean-removed) DCT energy inside one band.
double band_energy_fraction(const Image& img, Band band);

// Bilinear upsampling helper for building LR/HR analysis pairs.
Image upsample_bilinear(const Image& img, int factor);

struct KdeCurve {
  std::vector<double> grid;     // 256 ascending points
  std::vector<double> density;  // nonnegative
  double bandwidth = 0;
  double trapezoid_integral() const;
};

// Gaussian-kernel density on a 256-point grid spanning data +/- 4
// bandwidths. bandwidth <= 0 selects Silverman's 1.06 * sd * n^(-1/5)
// (falling back to 0.01 when the sample variance is zero).
KdeCurve kde(const std::vector<double>& values, double bandwidth = 0.0);

// Mean-centered projection onto the top two principal directions (power
// iteration, 50 iterations, tolerance 1e-8). Degenerate second direction
// yields zero second coordinates. Sign convention: the largest-magnitude
// component of each direction is positive.
std::vector<std::array<double, 2>> pca_project(
    const std::vector<std::vector<double>>& features);

// Corpus-level LBP separation: L1 distance between family mean histograms
// vs. the mean within-family split-half distance over n_boot seeded splits.
struct LbpSeparation {
  double inter = 0;
  double within = 0;
};
LbpSeparation lbp_family_separation(const std::vector<Image>& corpus_a,
                                    const std::vector<Image>& corpus_b,
                                    uint64_t seed, int n_boot = 20);

// Per-band cosine similarities of (upsampled LR, HR) pairs.
std::vector<double> band_cosines_for_pairs(const std::vector<Image>& lr,
                                           const std::vector<Image>& hr,
                                           int scale, Band band);

}  // namespace bird
