#include "hgs/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace hgs {

double psnr(const RasterGrid& a, const RasterGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double se = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace hgs
