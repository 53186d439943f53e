#include <doctest.h>

#include <cmath>

#include "bird/analysis.hpp"
#include "bird/degrade.hpp"
#include "bird/io.hpp"
#include "bird/rng.hpp"

using namespace bird;

TEST_SUITE_BEGIN("analysis");

TEST_CASE("lbp code conventions") {
  float uniform[9];
  std::fill(uniform, uniform + 9, 0.5f);
  CHECK(lbp_code(uniform) == 255);  // ties set the bit

  float peak[9] = {1, 2, 3, 4, 9, 6, 7, 8, 5};
  CHECK(lbp_code(peak) == 0);  // center strictly above all neighbors

  // Hand enumeration for [[1,2,3],[4,5,6],[7,8,9]], center 5, clockwise from
  // top-left: neighbors 1,2,3,6,9,8,7,4 -> >=5 at bits 3,4,5,6.
  float ramp[9] = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(lbp_code(ramp) == 8 + 16 + 32 + 64);
}

TEST_CASE("lbp histogram: uniform mass, normalization, golden checksum") {
  const Image flat(1, 8, 8, 0.3f);
  const auto hist = lbp_histogram(flat);
  CHECK(hist[255] == doctest::Approx(1.0));
  double sum = 0;
  for (double h : hist) sum += h;
  CHECK(std::fabs(sum - 1.0) < 1e-9);

  const auto corpus = gen_corpus(1, 32, 17);
  const auto textured = lbp_histogram(corpus[0]);
  double sum2 = 0;
  for (double h : textured) sum2 += h;
  CHECK(std::fabs(sum2 - 1.0) < 1e-9);
  std::vector<float> as_floats(textured.begin(), textured.end());
  CHECK(crc32_of_floats(as_floats) == 0x213264bau);  // pinned golden

  CHECK_THROWS(lbp_histogram(Image(1, 2, 2, 0.1f)));
}

TEST_CASE("band masks partition the spectrum exactly") {
  const auto corpus = gen_corpus(3, 32, 23);
  for (const Image& img : corpus) {
    const double low = band_energy_fraction(img, Band::low);
    const double mid = band_energy_fraction(img, Band::mid);
    const double high = band_energy_fraction(img, Band::high);
    CHECK(low + mid + high == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("band cosine: identity, negation, scale invariance") {
  const auto corpus = gen_corpus(2, 32, 29);
  const Image& img = corpus[0];
  for (Band band : {Band::low, Band::mid, Band::high}) {
    CHECK(band_cosine(img, img, band) == doctest::Approx(1.0).epsilon(1e-9));
    Image neg = img;
    for (float& p : neg.pixels) p = -p;
    CHECK(band_cosine(neg, img, band) == doctest::Approx(-1.0).epsilon(1e-9));
    Image scaled = img;
    for (float& p : scaled.pixels) p *= 3.0f;
    CHECK(band_cosine(scaled, img, band) ==
          doctest::Approx(band_cosine(img, img, band)).epsilon(1e-6));
  }
  CHECK(band_cosine(Image(1, 32, 32, 0.0f), img, Band::high) == 0.0);
}

TEST_CASE("blur hurts high-band similarity more than low-band") {
  const auto corpus = gen_corpus(20, 32, 31);
  double high_drop = 0, low_drop = 0;
  for (const Image& img : corpus) {
    const Image blurred = gaussian_blur(img, 1.0);
    high_drop += 1.0 - band_cosine(blurred, img, Band::high);
    low_drop += 1.0 - band_cosine(blurred, img, Band::low);
  }
  CHECK(high_drop > low_drop);
}

TEST_CASE("kde: single-kernel peak, normalization, Silverman bandwidth") {
  const KdeCurve single = kde({0.37});
  CHECK(single.bandwidth == doctest::Approx(0.01));  // zero-variance fallback
  double peak = 0;
  for (double d : single.density) peak = std::max(peak, d);
  CHECK(peak == doctest::Approx(1.0 / (0.01 * std::sqrt(2.0 * M_PI)))
                    .epsilon(1e-3));
  CHECK(single.trapezoid_integral() == doctest::Approx(1.0).epsilon(1e-3));

  Rng rng(5);
  std::vector<double> sample(100);
  for (double& v : sample) v = rng.normal();
  const KdeCurve curve = kde(sample);
  // Hand formula: 1.06 * sd * n^(-1/5) with the n-1 variance estimate.
  double mean = 0;
  for (double v : sample) mean += v;
  mean /= 100.0;
  double var = 0;
  for (double v : sample) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / 99.0);
  CHECK(curve.bandwidth ==
        doctest::Approx(1.06 * sd * std::pow(100.0, -0.2)).epsilon(1e-12));
  CHECK(curve.trapezoid_integral() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(curve.grid.size() == 256);
  CHECK_THROWS(kde({}));
}

TEST_CASE("pca: collinear points, variance ordering, 3-point oracle") {
  // Points on a line keep a ~zero second coordinate.
  std::vector<std::vector<double>> line;
  for (int i = 0; i < 5; ++i)
    line.push_back({1.0 * i, 2.0 * i, -0.5 * i});
  const auto proj_line = pca_project(line);
  for (const auto& p : proj_line) CHECK(std::fabs(p[1]) < 1e-6);

  // Known 2-D case: covariance diag(8, 0.5) after centering -> first
  // component along x. Points chosen so the eigenvectors are the axes.
  std::vector<std::vector<double>> pts = {
      {2.0, 0.5}, {-2.0, -0.5}, {2.0, -0.5}, {-2.0, 0.5}};
  const auto proj = pca_project(pts);
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(std::fabs(proj[i][0]) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::fabs(proj[i][1]) == doctest::Approx(0.5).epsilon(1e-6));
  }
  // Variance along the first projected coordinate dominates.
  double v0 = 0, v1 = 0;
  for (const auto& p : proj) {
    v0 += p[0] * p[0];
    v1 += p[1] * p[1];
  }
  CHECK(v0 > v1);
  CHECK_THROWS(pca_project({{1.0, 2.0}, {3.0, 4.0}}));
}

TEST_CASE("family A and family B LR corpora separate under LBP") {
  // Both families degrade the same HR images so the statistic isolates the
  // degradation signature rather than content differences.
  const int n = 64;
  const auto corpus = gen_corpus(n, 32, 0);
  std::vector<Image> lr_a, lr_b;
  for (int i = 0; i < n; ++i) {
    DegradationConfig ca = default_family_a(0);
    ca.seed = derive_seed(0, 0xAA, static_cast<uint64_t>(i));
    lr_a.push_back(degrade(corpus[static_cast<size_t>(i)], ca));
    DegradationConfig cb = default_family_b(0);
    cb.seed = derive_seed(0, 0xBB, static_cast<uint64_t>(i));
    lr_b.push_back(degrade(corpus[static_cast<size_t>(i)], cb));
  }
  const LbpSeparation sep = lbp_family_separation(lr_a, lr_b, 0);
  CHECK(sep.inter > sep.within);

  // The family gap is also visible in mean high-band energy.
  double high_a = 0, high_b = 0;
  for (const Image& img : lr_a) high_a += band_energy_fraction(img, Band::high);
  for (const Image& img : lr_b) high_b += band_energy_fraction(img, Band::high);
  high_a /= n;
  high_b /= n;
  CHECK(std::fabs(high_a - high_b) > 0.01);  // fixed-seed regression margin
}

TEST_SUITE_END();
