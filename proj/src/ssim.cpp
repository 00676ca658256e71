#include "hgs/ssim.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hgs {
namespace {

constexpr int kWin = 11;
constexpr int kRad = kWin / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& window_1d() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - kRad;
      v[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += v[i];
    }
    for (double& e : v) e /= sum;
    return v;
  }();
  return w;
}

// Single-channel plane extracted from a grid.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<size_t>(w_) * h_, 0.0) {}
  double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

// Valid-mode separable Gaussian filter. Output is (w-10) x (h-10).
Plane filter_valid(const Plane& src) {
  const auto& k = window_1d();
  Plane rows(src.w - 2 * kRad, src.h);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < rows.w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * src.at(x + i, y);
      rows.at(x, y) = acc;
    }
  Plane out(rows.w, src.h - 2 * kRad);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * rows.at(x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

// Adjoint of filter_valid: scatters a valid-size gradient back to source size.
Plane filter_valid_adjoint(const Plane& g, int src_w, int src_h) {
  const auto& k = window_1d();
  Plane cols(g.w, src_h);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const double gv = g.at(x, y);
      for (int i = 0; i < kWin; ++i) cols.at(x, y + i) += k[i] * gv;
    }
  Plane out(src_w, src_h);
  for (int y = 0; y < src_h; ++y)
    for (int x = 0; x < cols.w; ++x) {
      const double gv = cols.at(x, y);
      for (int i = 0; i < kWin; ++i) out.at(x + i, y) += k[i] * gv;
    }
  return out;
}

Plane channel_plane(const RasterGrid& g, int c) {
  Plane p(g.width, g.height);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) p.at(x, y) = g.at(x, y, c);
  return p;
}

double ssim_impl(const RasterGrid& x, const RasterGrid& y, RasterGrid* grad_x) {
  if (!x.same_shape(y)) throw std::invalid_argument("ssim: shape mismatch");
  if (x.width < kWin || x.height < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  const int n_valid = (x.width - 2 * kRad) * (x.height - 2 * kRad);
  double total = 0.0;

  for (int c = 0; c < x.channels; ++c) {
    const Plane px = channel_plane(x, c);
    const Plane py = channel_plane(y, c);
    Plane px2(px.w, px.h), py2(px.w, px.h), pxy(px.w, px.h);
    for (size_t i = 0; i < px.v.size(); ++i) {
      px2.v[i] = px.v[i] * px.v[i];
      py2.v[i] = py.v[i] * py.v[i];
      pxy.v[i] = px.v[i] * py.v[i];
    }
    const Plane mu_x = filter_valid(px);
    const Plane mu_y = filter_valid(py);
    const Plane m_x2 = filter_valid(px2);
    const Plane m_y2 = filter_valid(py2);
    const Plane m_xy = filter_valid(pxy);

    Plane d_mu(mu_x.w, mu_x.h), d_x2(mu_x.w, mu_x.h), d_xy(mu_x.w, mu_x.h);
    double acc = 0.0;
    for (int vy = 0; vy < mu_x.h; ++vy)
      for (int vx = 0; vx < mu_x.w; ++vx) {
        const double mx = mu_x.at(vx, vy), my = mu_y.at(vx, vy);
        const double sx = m_x2.at(vx, vy) - mx * mx;
        const double sy = m_y2.at(vx, vy) - my * my;
        const double sxy = m_xy.at(vx, vy) - mx * my;
        const double a1 = 2.0 * mx * my + kC1;
        const double a2 = 2.0 * sxy + kC2;
        const double b1 = mx * mx + my * my + kC1;
        const double b2 = sx + sy + kC2;
        const double s = (a1 * a2) / (b1 * b2);
        acc += s;
        if (grad_x) {
          const double ds_da1 = a2 / (b1 * b2);
          const double ds_da2 = a1 / (b1 * b2);
          const double ds_db1 = -s / b1;
          const double ds_db2 = -s / b2;
          // d(ssim)/d(mu_x), d/d(sigma_x2), d/d(sigma_xy); sigma terms expand
          // through mu via the filtered-square maps handled below.
          const double ds_dmx = 2.0 * my * ds_da1 + 2.0 * mx * ds_db1 +
                                (-2.0 * mx) * ds_db2 + (-my) * 2.0 * ds_da2;
          d_mu.at(vx, vy) = ds_dmx;
          d_x2.at(vx, vy) = ds_db2;          // via sigma_x^2 = E[x^2] - mu_x^2
          d_xy.at(vx, vy) = 2.0 * ds_da2;    // via sigma_xy = E[xy] - mu_x mu_y
        }
      }
    total += acc / n_valid;

    if (grad_x) {
      const double inv = 1.0 / (n_valid * x.channels);
      const Plane g_mu = filter_valid_adjoint(d_mu, px.w, px.h);
      const Plane g_x2 = filter_valid_adjoint(d_x2, px.w, px.h);
      const Plane g_xy = filter_valid_adjoint(d_xy, px.w, px.h);
      for (int yy = 0; yy < px.h; ++yy)
        for (int xx = 0; xx < px.w; ++xx) {
          const double g = g_mu.at(xx, yy) + 2.0 * px.at(xx, yy) * g_x2.at(xx, yy) +
                           py.at(xx, yy) * g_xy.at(xx, yy);
          grad_x->at(xx, yy, c) += g * inv;
        }
    }
  }
  return total / x.channels;
}

}  // namespace

double ssim(const RasterGrid& x, const RasterGrid& y) { return ssim_impl(x, y, nullptr); }

double ssim_with_grad(const RasterGrid& x, const RasterGrid& y, RasterGrid& grad_x) {
  return ssim_impl(x, y, &grad_x);
}

}  // namespace hgs
