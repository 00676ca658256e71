#include "hgs/importance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hgs {
namespace {

// Boundary band half-width in pixels around label discontinuities.
constexpr int kBoundaryRadius = 2;
// Background pixels keep a small base weight so boundaries adjacent to the
// background still score.
constexpr double kBaseBackground = 0.1;

int label_at(const RasterGrid& labels, int x, int y) {
  return static_cast<int>(std::lround(labels.at(x, y)));
}

}  // namespace

void minmax_normalize(RasterGrid& g) {
  double lo = g.data.empty() ? 0.0 : g.data[0];
  double hi = lo;
  for (double v : g.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) {
    std::fill(g.data.begin(), g.data.end(), 0.0);
    return;
  }
  const double inv = 1.0 / (hi - lo);
  for (double& v : g.data) v = (v - lo) * inv;
}

double percentile(const RasterGrid& g, double pct) {
  if (g.data.empty()) throw std::invalid_argument("percentile: empty grid");
  std::vector<double> v = g.data;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * (v.size() - 1);
  const size_t i = static_cast<size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

RasterGrid render_residual(const RasterGrid& gt, const RasterGrid& rendered) {
  if (!gt.same_shape(rendered))
    throw std::invalid_argument("render_residual: shape mismatch");
  if (gt.channels != 3)
    throw std::invalid_argument("render_residual: expected 3 channels");
  RasterGrid out(gt.width, gt.height, 1);
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = gt.at(x, y, c) - rendered.at(x, y, c);
        s += d * d;
      }
      out.at(x, y) = std::sqrt(s);
    }
  return out;
}

RasterGrid semantic_score(const PriorInputs& inputs) {
  const RasterGrid& labels = inputs.labels;
  for (double v : labels.data) {
    const int id = static_cast<int>(std::lround(v));
    if (id < 0 || id > kMaxClassId)
      throw std::invalid_argument("semantic_score: label id out of class range");
  }
  const int w = labels.width, h = labels.height;
  RasterGrid out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int own = label_at(labels, x, y);
      const bool foreground = own != inputs.background_class;
      bool boundary = false;
      for (int dy = -kBoundaryRadius; dy <= kBoundaryRadius && !boundary; ++dy)
        for (int dx = -kBoundaryRadius; dx <= kBoundaryRadius; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (label_at(labels, nx, ny) != own) {
            boundary = true;
            break;
          }
        }
      const double base = foreground ? 1.0 : kBaseBackground;
      out.at(x, y) = base * ((boundary ? 1.0 : 0.0) + (foreground ? 1.0 : 0.0));
    }
  minmax_normalize(out);
  return out;
}

RasterGrid geometry_score(const PriorInputs& inputs, double lambda_curv) {
  const RasterGrid& d = inputs.depth;
  const int w = d.width, h = d.height;
  RasterGrid out(w, h, 1);
  auto valid = [&](int x, int y) { return d.at(x, y) > 0.0; };
  // Invalid neighbors are clamped to the center value so sentinel pixels do
  // not leak spurious gradients into valid ones.
  auto sample = [&](int x, int y, double center) {
    if (x < 0 || y < 0 || x >= w || y >= h || !valid(x, y)) return center;
    return d.at(x, y);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!valid(x, y)) {
        out.at(x, y) = 0.0;
        continue;
      }
      const double c = d.at(x, y);
      const double xm = sample(x - 1, y, c), xp = sample(x + 1, y, c);
      const double ym = sample(x, y - 1, c), yp = sample(x, y + 1, c);
      // Central differences in the interior, one-sided at borders.
      double gx, gy;
      if (x == 0)
        gx = xp - c;
      else if (x == w - 1)
        gx = c - xm;
      else
        gx = 0.5 * (xp - xm);
      if (y == 0)
        gy = yp - c;
      else if (y == h - 1)
        gy = c - ym;
      else
        gy = 0.5 * (yp - ym);
      const double lap = xm + xp + ym + yp - 4.0 * c;
      out.at(x, y) = std::sqrt(gx * gx + gy * gy) + lambda_curv * std::abs(lap);
    }
  minmax_normalize(out);
  return out;
}

RasterGrid fuse(const RasterGrid& s_render, const RasterGrid& s_semantic,
                const RasterGrid& s_geometry, const Vec3& w) {
  if ((w.array() < 0.0).any())
    throw std::invalid_argument("fuse: negative fusion weight");
  if (!s_render.same_shape(s_semantic) || !s_render.same_shape(s_geometry))
    throw std::invalid_argument("fuse: component shape mismatch");
  RasterGrid out(s_render.width, s_render.height, 1);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = w[0] * s_render.data[i] + w[1] * s_semantic.data[i] +
                  w[2] * s_geometry.data[i];
  return out;
}

RasterGrid reliability_mask(const RasterGrid& s_geometry, double tau_geometry) {
  RasterGrid out(s_geometry.width, s_geometry.height, 1);
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = s_geometry.data[i] > tau_geometry ? 1.0 : 0.0;
  return out;
}

}  // namespace hgs
