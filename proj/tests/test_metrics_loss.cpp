#include <doctest.h>

#include <random>

#include "hgs/loss.hpp"
#include "hgs/metrics.hpp"
#include "hgs/ssim.hpp"
#include "support/oracles.hpp"

using namespace hgs;

TEST_CASE("psnr formula and cap") {
  RasterGrid a(8, 8, 3, 0.5);
  CHECK(psnr(a, a) == 100.0);

  // Uniform squared error of 0.01 -> 20 dB.
  RasterGrid b = a;
  for (double& v : b.data) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("ssim is exactly 1 on identical images and symmetric") {
  std::mt19937_64 rng(5);
  const RasterGrid x = test::random_image(rng, 24, 18);
  const RasterGrid y = test::random_image(rng, 24, 18);
  CHECK(ssim(x, x) == 1.0);
  CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-15));
}

TEST_CASE("ssim matches the independent per-window reference") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10; ++i) {
    const RasterGrid x = test::random_image(rng, 20, 16);
    const RasterGrid y = test::random_image(rng, 20, 16);
    CHECK(std::abs(ssim(x, y) - test::ssim_reference(x, y)) < 1e-9);
  }
}

TEST_CASE("loss examples") {
  std::mt19937_64 rng(2);
  const RasterGrid gt = test::random_image(rng, 16, 16);

  SUBCASE("rendered == gt gives zero loss and zero gradient") {
    const LossResult r = photometric_loss(gt, gt, 0.2);
    CHECK(r.value == doctest::Approx(0.0));
    for (double v : r.dL_dimage.data) CHECK(v == doctest::Approx(0.0));
  }

  SUBCASE("pure L1 with constant offset 0.1") {
    RasterGrid shifted = gt;
    for (double& v : shifted.data) v += 0.1;
    const LossResult r = photometric_loss(shifted, gt, 0.0);
    CHECK(r.value == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("shape mismatch is an error") {
    RasterGrid small(8, 8, 3);
    CHECK_THROWS(photometric_loss(small, gt, 0.2));
  }
}

TEST_CASE("loss gradient matches finite differences") {
  std::mt19937_64 rng(23);
  RasterGrid x = test::random_image(rng, 16, 14);
  RasterGrid y = test::random_image(rng, 16, 14);
  // Keep residuals away from the L1 kink so the FD path stays smooth.
  for (size_t i = 0; i < x.data.size(); ++i)
    if (std::abs(x.data[i] - y.data[i]) < 1e-3)
      x.data[i] += x.data[i] > y.data[i] ? 2e-3 : -2e-3;

  const LossResult base = photometric_loss(x, y, 0.35);
  std::uniform_int_distribution<size_t> pick(0, x.data.size() - 1);
  for (int k = 0; k < 60; ++k) {
    const size_t i = pick(rng);
    const double fd = test::central_diff(
        [&](double v) {
          RasterGrid xx = x;
          xx.data[i] = v;
          return photometric_loss(xx, y, 0.35).value;
        },
        x.data[i]);
    CHECK(test::close_rel(base.dL_dimage.data[i], fd));
  }
}

TEST_CASE("ssim gradient matches finite differences") {
  std::mt19937_64 rng(29);
  const RasterGrid x = test::random_image(rng, 16, 14, 1);
  const RasterGrid y = test::random_image(rng, 16, 14, 1);
  RasterGrid grad(16, 14, 1);
  ssim_with_grad(x, y, grad);
  std::uniform_int_distribution<size_t> pick(0, x.data.size() - 1);
  for (int k = 0; k < 40; ++k) {
    const size_t i = pick(rng);
    const double fd = test::central_diff(
        [&](double v) {
          RasterGrid xx = x;
          xx.data[i] = v;
          return ssim(xx, y);
        },
        x.data[i]);
    CHECK(test::close_rel(grad.data[i], fd));
  }
}
