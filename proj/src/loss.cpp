#include "hgs/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "hgs/ssim.hpp"

namespace hgs {

LossResult photometric_loss(const RasterGrid& rendered, const RasterGrid& gt,
                            double lambda_ssim) {
  if (!rendered.same_shape(gt))
    throw std::invalid_argument("photometric_loss: shape mismatch");
  if (lambda_ssim < 0.0 || lambda_ssim > 1.0)
    throw std::invalid_argument("photometric_loss: lambda_ssim outside [0,1]");

  LossResult out;
  out.dL_dimage = RasterGrid(rendered.width, rendered.height, rendered.channels);

  const double n = static_cast<double>(rendered.size());
  double l1 = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - gt.data[i];
    l1 += std::abs(d);
    const double sgn = (d > 0.0) - (d < 0.0);
    out.dL_dimage.data[i] = (1.0 - lambda_ssim) * sgn / n;
  }
  out.l1 = l1 / n;

  if (lambda_ssim > 0.0) {
    RasterGrid dssim(rendered.width, rendered.height, rendered.channels);
    out.ssim = ssim_with_grad(rendered, gt, dssim);
    for (size_t i = 0; i < dssim.data.size(); ++i)
      out.dL_dimage.data[i] -= lambda_ssim * dssim.data[i];
  } else {
    out.ssim = ssim(rendered, gt);
  }

  out.value = (1.0 - lambda_ssim) * out.l1 + lambda_ssim * (1.0 - out.ssim);
  return out;
}

}  // namespace hgs
