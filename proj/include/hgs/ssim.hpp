#pragma once

#include "hgs/core_types.hpp"

namespace hgs {

// Mean structural similarity with the standard 11x11 Gaussian window
// (sigma 1.5) and stabilizers C1 = 0.01^2, C2 = 0.03^2 for a [0,1] data
// range. The window is applied in valid mode: the map covers only centers
// where the full window fits, so SSIM(x, x) == 1 exactly. Multi-channel
// grids are scored per channel and averaged.
double ssim(const RasterGrid& x, const RasterGrid& y);

// ssim() plus d(ssim)/dx accumulated into grad_x (same shape as x).
double ssim_with_grad(const RasterGrid& x, const RasterGrid& y, RasterGrid& grad_x);

}  // namespace hgs
