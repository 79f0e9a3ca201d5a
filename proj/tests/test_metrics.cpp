#include <cmath>

#include "doctest.h"
#include "speckle/error.hpp"
#include "speckle/metrics.hpp"
#include "support.hpp"

using namespace speckle;
using speckle::testing::random_field;
using speckle::testing::smooth_field;

namespace {

// Independent SSIM: one-pass moments per window in long double.
double reference_ssim(const Field2D& a, const Field2D& b, std::size_t win) {
  const long double c1 = (0.01L * 255) * (0.01L * 255), c2 = (0.03L * 255) * (0.03L * 255);
  long double total = 0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + win <= a.height(); ++y0)
    for (std::size_t x0 = 0; x0 + win <= a.width(); ++x0) {
      long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t y = y0; y < y0 + win; ++y)
        for (std::size_t x = x0; x < x0 + win; ++x) {
          const long double p = 255.0L * a(y, x), q = 255.0L * b(y, x);
          sa += p;
          sb += q;
          saa += p * p;
          sbb += q * q;
          sab += p * q;
        }
      const long double n = static_cast<long double>(win * win);
      const long double ma = sa / n, mb = sb / n;
      const long double va = saa / n - ma * ma, vb = sbb / n - mb * mb, cov = sab / n - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return static_cast<double>(total / static_cast<long double>(count));
}

}  // namespace

TEST_CASE("identical images hit the psnr cap") {
  Rng rng(1);
  const Field2D a = random_field(rng, 16, 16, 0.0, 1.0);
  CHECK(rmse(a, a) == 0.0);
  CHECK(psnr(a, a) == kPsnrCap);
}

TEST_CASE("constant 1/255 difference gives rmse 1") {
  const Field2D a(8, 8, 0.25);
  const Field2D b(8, 8, 0.25 + 1.0 / 255.0);
  CHECK(rmse(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  const double oracle = 20.0 * std::log10(255.0);
  CHECK(oracle == doctest::Approx(48.1308036086791).epsilon(1e-13));
  CHECK(psnr(a, b) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("full scale error") {
  const Field2D a(4, 4, 0.0), b(4, 4, 1.0);
  CHECK(rmse(a, b) == 255.0);
  CHECK(psnr(a, b) == 0.0);
}

TEST_CASE("psnr and rmse satisfy the defining identity") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Field2D a = random_field(rng, 12, 20, 0.0, 1.0);
    const Field2D b = random_field(rng, 12, 20, 0.0, 1.0);
    CHECK(std::abs(psnr(a, b) - 20.0 * std::log10(255.0 / rmse(a, b))) <= 1e-9);
    CHECK(rmse(a, b) >= 0.0);
  }
}

TEST_CASE("psnr cap threshold") {
  Field2D a(10, 10, 0.5), b = a;
  b(0, 0) += 1e-6;  // rmse = 255e-7
  CHECK(psnr(a, b) == kPsnrCap);
  b(0, 0) = 0.5 + 1e-3;  // rmse = 255e-4
  CHECK(psnr(a, b) < kPsnrCap);
}

TEST_CASE("metric shape errors") {
  CHECK_THROWS_AS(rmse(Field2D(4, 4), Field2D(4, 5)), DimensionError);
  CHECK_THROWS_AS(psnr(Field2D(4, 4), Field2D(5, 4)), DimensionError);
  CHECK_THROWS_AS(ssim(Field2D(8, 8), Field2D(8, 9)), DimensionError);
  CHECK_THROWS_AS(ssim(Field2D(7, 16), Field2D(7, 16)), DimensionError);
  CHECK_NOTHROW(ssim(Field2D(8, 8), Field2D(8, 8)));
}

TEST_CASE("ssim identity cases") {
  Rng rng(3);
  const Field2D a = random_field(rng, 20, 24, 0.0, 1.0);
  CHECK(ssim(a, a) == 1.0);
  CHECK(ssim(Field2D(16, 16, 0.3), Field2D(16, 16, 0.3)) == 1.0);
  CHECK(ssim(Field2D(16, 16, 0.0), Field2D(16, 16, 0.0)) == 1.0);
}

TEST_CASE("ssim of two constants matches the luminance term") {
  const double p = 0.2 * 255, q = 0.6 * 255;
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double oracle = (2 * p * q + c1) / (p * p + q * q + c1);
  CHECK(ssim(Field2D(12, 12, 0.2), Field2D(12, 12, 0.6)) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("ssim against reference implementation") {
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    const Field2D a = random_field(rng, 16, 20, 0.0, 1.0);
    const Field2D b = smooth_field(rng, 16, 20);
    CHECK(ssim(a, b) == doctest::Approx(reference_ssim(a, b, 8)).epsilon(1e-10));
  }
}

TEST_CASE("ssim penalizes anticorrelation") {
  Rng rng(5);
  const Field2D a = random_field(rng, 32, 32, 0.0, 1.0);
  Field2D inv(32, 32);
  for (std::size_t i = 0; i < a.size(); ++i) inv[i] = 1.0 - a[i];
  const double s = ssim(a, inv);
  CHECK(s < 0.5);
  CHECK(s == doctest::Approx(reference_ssim(a, inv, 8)).epsilon(1e-10));
}

TEST_CASE("ssim is symmetric and bounded") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const Field2D a = random_field(rng, 16, 16, 0.0, 1.0);
    const Field2D b = random_field(rng, 16, 16, 0.0, 1.0);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-12);
    CHECK(ssim(a, b) <= 1.0);
    CHECK(ssim(a, b) >= -1.0);
  }
}

TEST_CASE("score bundles the three metrics") {
  const Field2D a(8, 8, 0.25), b(8, 8, 0.25 + 1.0 / 255.0);
  const MetricRow r = score("x", a, b);
  CHECK(r.condition == "x");
  CHECK(r.psnr == psnr(a, b));
  CHECK(r.rmse == rmse(a, b));
  CHECK(r.ssim == ssim(a, b));
}
