#include "bird/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "bird/mathops.hpp"
#include "bird/rng.hpp"

namespace bird {

namespace {
bool in_band(int i, int j, int h, int w, Band band) {
  const double u = static_cast<double>(i + j) / (h + w - 2);
  switch (band) {
    case Band::low: return u < 1.0 / 6.0;
    case Band::mid: return u >= 1.0 / 6.0 && u < 0.5;
    case Band::high: return u >= 0.5;
  }
  return false;
}
}  // namespace

int lbp_code(const float patch[9]) {
  // Clockwise from top-left: TL T TR R BR B BL L.
  static constexpr int order[8] = {0, 1, 2, 5, 8, 7, 6, 3};
  const float center = patch[4];
  int code = 0;
  for (int bit = 0; bit < 8; ++bit)
    if (patch[order[bit]] >= center) code |= 1 << bit;
  return code;
}

std::array<double, 256> lbp_histogram(const Image& img) {
  check(img.height >= 3 && img.width >= 3, "lbp_histogram: image too small");
  std::array<double, 256> hist{};
  int64_t count = 0;
  for (int y = 1; y + 1 < img.height; ++y) {
    for (int x = 1; x + 1 < img.width; ++x) {
      float patch[9];
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          patch[(dy + 1) * 3 + dx + 1] = img.at(0, y + dy, x + dx);
      hist[static_cast<size_t>(lbp_code(patch))] += 1.0;
      ++count;
    }
  }
  for (double& h : hist) h /= static_cast<double>(count);
  return hist;
}

double band_cosine(const Image& lr_up, const Image& hr, Band band) {
  check(lr_up.channels == hr.channels && lr_up.height == hr.height &&
            lr_up.width == hr.width,
        "band_cosine: size mismatch");
  const Tensor ca = ops::dct2_fw(lr_up.to_tensor());
  const Tensor cb = ops::dct2_fw(hr.to_tensor());
  const int h = hr.height, w = hr.width;
  double dot = 0, na = 0, nb = 0;
  for (int c = 0; c < hr.channels; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        if (!in_band(i, j, h, w, band)) continue;
        const double va = ca[(static_cast<int64_t>(c) * h + i) * w + j];
        const double vb = cb[(static_cast<int64_t>(c) * h + i) * w + j];
        dot += va * vb;
        na += va * va;
        nb += vb * vb;
      }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

double band_energy_fraction(const Image& img, Band band) {
  Tensor t = img.to_tensor();
  const float m = ops::mean_fw(t);
  for (float& v : t.data) v -= m;
  const Tensor coef = ops::dct2_fw(t);
  const int h = img.height, w = img.width;
  double total = 0, in_b = 0;
  for (int c = 0; c < img.channels; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double v = coef[(static_cast<int64_t>(c) * h + i) * w + j];
        total += v * v;
        if (in_band(i, j, h, w, band)) in_b += v * v;
      }
  return total > 0.0 ? in_b / total : 0.0;
}

Image upsample_bilinear(const Image& img, int factor) {
  return Image::from_tensor(ops::bilinear_up_fw(img.to_tensor(), factor));
}

double KdeCurve::trapezoid_integral() const {
  double acc = 0;
  for (size_t i = 1; i < grid.size(); ++i)
    acc += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
  return acc;
}

KdeCurve kde(const std::vector<double>& values, double bandwidth) {
  check(!values.empty(), "kde: empty input");
  const size_t n = values.size();
  double h = bandwidth;
  if (h <= 0.0) {
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    if (h <= 0.0) h = 0.01;  // zero-variance fallback
  }
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn_it - 4.0 * h;
  const double hi = *mx_it + 4.0 * h;
  constexpr int kGrid = 256;
  KdeCurve curve;
  curve.bandwidth = h;
  curve.grid.resize(kGrid);
  curve.density.resize(kGrid);
  const double inv_norm =
      1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * 3.14159265358979323846));
  for (int i = 0; i < kGrid; ++i) {
    const double g = lo + (hi - lo) * i / (kGrid - 1);
    curve.grid[static_cast<size_t>(i)] = g;
    double acc = 0;
    for (double v : values) {
      const double z = (g - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    curve.density[static_cast<size_t>(i)] = acc * inv_norm;
  }
  return curve;
}

namespace {
// Power iteration for the top eigenvector of X^T X (rows of x are
// mean-centered observations). Returns false when X^T X v stays ~zero.
bool power_top_direction(const std::vector<std::vector<double>>& x,
                         uint64_t seed, std::vector<double>* v_out) {
  const size_t d = x[0].size();
  Rng rng(derive_seed(seed, 0x706f77, 0));  // "pow"
  std::vector<double> v(d);
  double norm = 0;
  for (double& vi : v) {
    vi = rng.normal();
    norm += vi * vi;
  }
  norm = std::sqrt(norm);
  for (double& vi : v) vi /= norm;

  std::vector<double> next(d);
  for (int iter = 0; iter < 50; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const auto& row : x) {
      double proj = 0;
      for (size_t i = 0; i < d; ++i) proj += row[i] * v[i];
      for (size_t i = 0; i < d; ++i) next[i] += proj * row[i];
    }
    double nn = 0;
    for (double vi : next) nn += vi * vi;
    nn = std::sqrt(nn);
    if (nn < 1e-12) return false;
    double delta = 0;
    for (size_t i = 0; i < d; ++i) {
      next[i] /= nn;
      delta += (next[i] - v[i]) * (next[i] - v[i]);
    }
    v.swap(next);
    if (std::sqrt(delta) < 1e-8) break;
  }
  // Fix the sign: largest-magnitude component positive.
  size_t arg = 0;
  for (size_t i = 1; i < d; ++i)
    if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
  if (v[arg] < 0)
    for (double& vi : v) vi = -vi;
  *v_out = std::move(v);
  return true;
}
}  // namespace

std::vector<std::array<double, 2>> pca_project(
    const std::vector<std::vector<double>>& features) {
  check(features.size() >= 3, "pca_project: need at least 3 vectors");
  const size_t n = features.size();
  const size_t d = features[0].size();
  for (const auto& f : features)
    check(f.size() == d, "pca_project: inconsistent vector lengths");

  std::vector<double> mean(d, 0.0);
  for (const auto& f : features)
    for (size_t i = 0; i < d; ++i) mean[i] += f[i];
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<std::vector<double>> centered(n, std::vector<double>(d));
  for (size_t r = 0; r < n; ++r)
    for (size_t i = 0; i < d; ++i) centered[r][i] = features[r][i] - mean[i];

  std::vector<double> v1, v2;
  const bool ok1 = power_top_direction(centered, 1, &v1);
  std::vector<std::array<double, 2>> out(n, {0.0, 0.0});
  if (!ok1) return out;

  for (size_t r = 0; r < n; ++r) {
    double proj = 0;
    for (size_t i = 0; i < d; ++i) proj += centered[r][i] * v1[i];
    out[r][0] = proj;
  }
  // Deflate and repeat for the second direction.
  std::vector<std::vector<double>> deflated = centered;
  for (size_t r = 0; r < n; ++r)
    for (size_t i = 0; i < d; ++i) deflated[r][i] -= out[r][0] * v1[i];
  const bool ok2 = power_top_direction(deflated, 2, &v2);
  if (!ok2) return out;  // rank-degenerate: second coordinate stays 0
  for (size_t r = 0; r < n; ++r) {
    double proj = 0;
    for (size_t i = 0; i < d; ++i) proj += deflated[r][i] * v2[i];
    out[r][1] = proj;
  }
  return out;
}

namespace {
using Hist = std::array<double, 256>;

std::vector<Hist> histograms_of(const std::vector<Image>& corpus) {
  std::vector<Hist> hists(corpus.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < static_cast<int>(corpus.size()); ++i)
    hists[static_cast<size_t>(i)] = lbp_histogram(corpus[static_cast<size_t>(i)]);
  return hists;
}

Hist mean_histogram(const std::vector<Hist>& hists,
                    const std::vector<int>& idx) {
  Hist acc{};
  for (int i : idx)
    for (int b = 0; b < 256; ++b)
      acc[static_cast<size_t>(b)] += hists[static_cast<size_t>(i)][static_cast<size_t>(b)];
  for (double& v : acc) v /= static_cast<double>(idx.size());
  return acc;
}

double l1_dist(const Hist& a, const Hist& b) {
  double d = 0;
  for (int i = 0; i < 256; ++i)
    d += std::fabs(a[static_cast<size_t>(i)] - b[static_cast<size_t>(i)]);
  return d;
}

double within_family_distance(const std::vector<Hist>& hists, uint64_t seed,
                              int n_boot) {
  const int n = static_cast<int>(hists.size());
  check(n >= 4, "lbp separation: need at least 4 images per family");
  std::vector<int> idx(static_cast<size_t>(n));
  double acc = 0;
  for (int b = 0; b < n_boot; ++b) {
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(seed, 0x626f6f74, static_cast<uint64_t>(b)));
    for (int i = n - 1; i > 0; --i) {
      const int j = rng.uniform_int(0, i);
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    const std::vector<int> half1(idx.begin(), idx.begin() + n / 2);
    const std::vector<int> half2(idx.begin() + n / 2, idx.end());
    acc += l1_dist(mean_histogram(hists, half1), mean_histogram(hists, half2));
  }
  return acc / n_boot;
}
}  // namespace

LbpSeparation lbp_family_separation(const std::vector<Image>& corpus_a,
                                    const std::vector<Image>& corpus_b,
                                    uint64_t seed, int n_boot) {
  const std::vector<Hist> hists_a = histograms_of(corpus_a);
  const std::vector<Hist> hists_b = histograms_of(corpus_b);
  std::vector<int> all_a(corpus_a.size()), all_b(corpus_b.size());
  for (size_t i = 0; i < corpus_a.size(); ++i) all_a[i] = static_cast<int>(i);
  for (size_t i = 0; i < corpus_b.size(); ++i) all_b[i] = static_cast<int>(i);
  LbpSeparation sep;
  sep.inter =
      l1_dist(mean_histogram(hists_a, all_a), mean_histogram(hists_b, all_b));
  sep.within = 0.5 * (within_family_distance(hists_a, seed, n_boot) +
                      within_family_distance(hists_b, seed + 1, n_boot));
  return sep;
}

std::vector<double> band_cosines_for_pairs(const std::vector<Image>& lr,
                                           const std::vector<Image>& hr,
                                           int scale, Band band) {
  check(lr.size() == hr.size(), "band_cosines_for_pairs: size mismatch");
  std::vector<double> out(lr.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < static_cast<int>(lr.size()); ++i)
    out[static_cast<size_t>(i)] = band_cosine(
        upsample_bilinear(lr[static_cast<size_t>(i)], scale),
        hr[static_cast<size_t>(i)], band);
  return out;
}

}  // namespace bird
