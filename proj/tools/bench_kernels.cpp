// Kernel benchmark: serial reference vs blocked kernels, single- and
// multi-threaded. Also verifies that every variant produces bit-identical
// outputs, which is what makes the OpenMP path safe for reproducible runs.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include "bird/kernels.hpp"
#include "bird/rng.hpp"
#include "bird/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace bird;

namespace {

struct ConvShape {
  const char* name;
  int cin, h, w, cout, k;
};

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

int mismatches = 0;

void expect_equal(const std::vector<float>& a, const std::vector<float>& b,
                  const char* what) {
  if (a != b) {
    std::printf("  !! %s differs from reference bitwise\n", what);
    ++mismatches;
  }
}

void bench_conv(const ConvShape& s) {
  Rng rng(1);
  Tensor x = random_normal<float>({s.cin, s.h, s.w}, rng);
  Tensor w = random_normal<float>({s.cout, s.cin, s.k, s.k}, rng, 0.0, 0.1);
  Tensor b = random_normal<float>({s.cout}, rng);
  const int pad = s.k / 2;
  Tensor out({s.cout, s.h, s.w}), out_ref({s.cout, s.h, s.w});
  Tensor gout = random_normal<float>({s.cout, s.h, s.w}, rng);
  Tensor gx({s.cin, s.h, s.w}), gx_ref({s.cin, s.h, s.w});
  Tensor gw({s.cout, s.cin, s.k, s.k}), gw_ref({s.cout, s.cin, s.k, s.k});

  const double macs =
      static_cast<double>(s.cout) * s.cin * s.k * s.k * s.h * s.w;
  const int reps = macs > 5e8 ? 3 : 40;

  const double t_ref = time_of(
      [&] {
        kernels::ref::conv2d_forward(x.ptr(), s.cin, s.h, s.w, w.ptr(), s.cout,
                                     s.k, b.ptr(), 1, pad, out_ref.ptr(), s.h,
                                     s.w);
      },
      reps);
  kernels::set_parallel(false);
  const double t_serial = time_of(
      [&] {
        kernels::conv2d_forward(x.ptr(), s.cin, s.h, s.w, w.ptr(), s.cout, s.k,
                                b.ptr(), 1, pad, out.ptr(), s.h, s.w);
      },
      reps);
  expect_equal(out.data, out_ref.data, "serial blocked forward");
  kernels::set_parallel(true);
  const double t_par = time_of(
      [&] {
        kernels::conv2d_forward(x.ptr(), s.cin, s.h, s.w, w.ptr(), s.cout, s.k,
                                b.ptr(), 1, pad, out.ptr(), s.h, s.w);
      },
      reps);
  expect_equal(out.data, out_ref.data, "parallel blocked forward");

  std::printf(
      "conv %-22s %8.2f MMAC  ref %7.2f GMAC/s  blocked %7.2f GMAC/s "
      "(x%.2f)  omp %7.2f GMAC/s (x%.2f)\n",
      s.name, macs / 1e6, macs / t_ref / 1e9, macs / t_serial / 1e9,
      t_ref / t_serial, macs / t_par / 1e9, t_ref / t_par);

  // Backward kernels: correctness + a quick timing line.
  std::fill(gx.data.begin(), gx.data.end(), 0.0f);
  std::fill(gx_ref.data.begin(), gx_ref.data.end(), 0.0f);
  kernels::conv2d_backward_input(gout.ptr(), s.cout, s.h, s.w, w.ptr(), s.cin,
                                 s.k, 1, pad, gx.ptr(), s.h, s.w);
  kernels::ref::conv2d_backward_input(gout.ptr(), s.cout, s.h, s.w, w.ptr(),
                                      s.cin, s.k, 1, pad, gx_ref.ptr(), s.h,
                                      s.w);
  expect_equal(gx.data, gx_ref.data, "backward input");
  std::fill(gw.data.begin(), gw.data.end(), 0.0f);
  std::fill(gw_ref.data.begin(), gw_ref.data.end(), 0.0f);
  kernels::conv2d_backward_weights(gout.ptr(), s.cout, s.h, s.w, x.ptr(),
                                   s.cin, s.h, s.w, s.k, 1, pad, gw.ptr());
  kernels::ref::conv2d_backward_weights(gout.ptr(), s.cout, s.h, s.w, x.ptr(),
                                        s.cin, s.h, s.w, s.k, 1, pad,
                                        gw_ref.ptr());
  expect_equal(gw.data, gw_ref.data, "backward weights");
}

void bench_matmul(int n) {
  Rng rng(2);
  Tensor a = random_normal<float>({n, n}, rng);
  Tensor b = random_normal<float>({n, n}, rng);
  Tensor c({n, n}), c_ref({n, n});
  const double macs = static_cast<double>(n) * n * n;
  const double t_ref = time_of(
      [&] { kernels::ref::matmul_nn(a.ptr(), n, n, b.ptr(), n, c_ref.ptr()); },
      8);
  kernels::set_parallel(false);
  const double t_serial = time_of(
      [&] { kernels::matmul_nn(a.ptr(), n, n, b.ptr(), n, c.ptr()); }, 8);
  expect_equal(c.data, c_ref.data, "serial matmul");
  kernels::set_parallel(true);
  const double t_par = time_of(
      [&] { kernels::matmul_nn(a.ptr(), n, n, b.ptr(), n, c.ptr()); }, 8);
  expect_equal(c.data, c_ref.data, "parallel matmul");
  std::printf(
      "matmul %dx%d          %8.2f MMAC  ref %7.2f GMAC/s  rowwise %7.2f "
      "GMAC/s (x%.2f)  omp %7.2f GMAC/s (x%.2f)\n",
      n, n, macs / 1e6, macs / t_ref / 1e9, macs / t_serial / 1e9,
      t_ref / t_serial, macs / t_par / 1e9, t_ref / t_par);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP: %d threads available\n", omp_get_max_threads());
#else
  std::printf("OpenMP: not compiled in\n");
#endif
  const ConvShape shapes[] = {
      {"2->16  3x3 @32x32", 2, 32, 32, 16, 3},
      {"16->16 3x3 @32x32", 16, 32, 32, 16, 3},
      {"32->32 3x3 @64x64", 32, 64, 64, 32, 3},
      {"64->64 3x3 @96x96", 64, 96, 96, 64, 3},
  };
  for (const ConvShape& s : shapes) bench_conv(s);
  bench_matmul(256);
  bench_matmul(512);
  if (mismatches) {
    std::printf("FAILED: %d bitwise mismatches\n", mismatches);
    return 1;
  }
  std::printf("all kernel variants bit-identical to the serial reference\n");
  return 0;
}
