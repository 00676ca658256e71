#pragma once

#include <vector>

#include "hgs/core_types.hpp"

namespace hgs {

// 10 * log10(1 / MSE) for [0,1] images, capped at 100 dB when MSE is 0.
double psnr(const RasterGrid& a, const RasterGrid& b);

struct MetricsReport {
  double psnr = 0.0;
  double ssim = 0.0;
  struct PerView {
    int view_index = 0;
    double psnr = 0.0;
    double ssim = 0.0;
  };
  std::vector<PerView> per_view;
};

}  // namespace hgs
