#pragma once

#include "hgs/core_types.hpp"

namespace hgs {

struct LossResult {
  double value = 0.0;
  double l1 = 0.0;
  double ssim = 0.0;       // similarity, not the loss term
  RasterGrid dL_dimage;    // same shape as the rendered input
};

// L = (1 - lambda) * mean|rendered - gt| + lambda * (1 - SSIM(rendered, gt)),
// together with its analytic image-space gradient.
LossResult photometric_loss(const RasterGrid& rendered, const RasterGrid& gt,
                            double lambda_ssim);

}  // namespace hgs
