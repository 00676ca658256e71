#include "hgs/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "renderer_detail.hpp"

namespace hgs {

std::optional<ProjectedGaussian> project(const Gaussian& g, const Camera& cam,
                                         double near_clip,
                                         double alpha_override) {
  const Vec3 xc = cam.R * g.mu + cam.t;
  const double z = xc.z();
  if (!(z > near_clip)) return std::nullopt;

  const double fx = cam.fx(), fy = cam.fy();
  ProjectedGaussian p;
  p.mean2d = Vec2(fx * xc.x() / z + cam.cx(), fy * xc.y() / z + cam.cy());
  p.depth = z;

  Eigen::Matrix<double, 2, 3> jac;
  jac << fx / z, 0.0, -fx * xc.x() / (z * z),
         0.0, fy / z, -fy * xc.y() / (z * z);
  const Eigen::Matrix<double, 2, 3> a = jac * cam.R;
  Mat2 cov2d = a * covariance(g) * a.transpose();
  cov2d(0, 0) += kLowpass;
  cov2d(1, 1) += kLowpass;
  cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
  p.cov2d = cov2d;

  // Cull splats whose 99% extent misses the image rectangle.
  const double ex = std::sqrt(kCullSq * cov2d(0, 0));
  const double ey = std::sqrt(kCullSq * cov2d(1, 1));
  if (p.mean2d.x() + ex < 0.0 || p.mean2d.x() - ex > cam.width ||
      p.mean2d.y() + ey < 0.0 || p.mean2d.y() - ey > cam.height)
    return std::nullopt;

  p.alpha = alpha_override >= 0.0 ? alpha_override : g.alpha();
  p.color = g.color;
  return p;
}

namespace detail {

std::vector<SplatRec> build_splats(const std::vector<Gaussian>& all,
                                   const Camera& cam,
                                   const RenderOptions& opts) {
  std::vector<SplatRec> splats;
  splats.reserve(all.size());
  for (size_t i = 0; i < all.size(); ++i) {
    const Gaussian& g = all[i];
    const double raw = g.alpha();
    double eff = raw;
    bool blocked = false;
    if (!opts.alpha_override.empty()) {
      eff = opts.alpha_override[i];
      blocked = eff != raw;
    }
    auto p = project(g, cam, opts.near_clip, eff);
    if (!p) continue;

    SplatRec r;
    r.mx = p->mean2d.x();
    r.my = p->mean2d.y();
    const Mat2& c = p->cov2d;
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1);
    r.qa = c(1, 1) / det;
    r.qb = -c(0, 1) / det;
    r.qc = c(0, 0) / det;
    r.alpha = eff;
    r.depth = p->depth;
    r.color = p->color;
    r.src = static_cast<int>(i);
    const double hx = std::sqrt(kSupportSq * c(0, 0));
    const double hy = std::sqrt(kSupportSq * c(1, 1));
    r.x0 = std::max(0, static_cast<int>(std::floor(r.mx - hx - 0.5)));
    r.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(r.mx + hx - 0.5)));
    r.y0 = std::max(0, static_cast<int>(std::floor(r.my - hy - 0.5)));
    r.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(r.my + hy - 0.5)));
    r.logit_grad_blocked = blocked;
    r.cov2d = c;
    r.x_cam = cam.R * g.mu + cam.t;
    if (r.x1 < r.x0 || r.y1 < r.y0) continue;  // support entirely off-image
    splats.push_back(r);
  }
  std::sort(splats.begin(), splats.end(), [](const SplatRec& a, const SplatRec& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.src < b.src;
  });
  return splats;
}

std::vector<std::vector<int>> bin_tiles(const std::vector<SplatRec>& splats,
                                        int width, int height, int& tiles_x,
                                        int& tiles_y) {
  tiles_x = (width + kTileSize - 1) / kTileSize;
  tiles_y = (height + kTileSize - 1) / kTileSize;
  std::vector<std::vector<int>> bins(static_cast<size_t>(tiles_x) * tiles_y);
  for (size_t i = 0; i < splats.size(); ++i) {
    int tx0, tx1, ty0, ty1;
    tile_range(splats[i], tiles_x, tiles_y, tx0, tx1, ty0, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        bins[static_cast<size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(i));
  }
  return bins;
}

}  // namespace detail

RenderOutput render(const Scene& scene, const Camera& cam,
                    const RenderOptions& opts) {
  using namespace detail;
  RenderOutput out;
  out.image = RasterGrid(cam.width, cam.height, 3);
  out.depth_map = RasterGrid(cam.width, cam.height, 1, kDepthInvalid);
  out.alpha_map = RasterGrid(cam.width, cam.height, 1, 0.0);

  const std::vector<Gaussian> all = scene_union(scene);
  const std::vector<SplatRec> splats = build_splats(all, cam, opts);

  auto shade = [&](int x, int y, const auto& candidates) {
    Vec3 c;
    double d_acc, a_acc;
    const double T = blend_pixel(candidates, splats, x + 0.5, y + 0.5, c,
                                 d_acc, a_acc);
    const Vec3 px = c + opts.background * T;
    out.image.at(x, y, 0) = px.x();
    out.image.at(x, y, 1) = px.y();
    out.image.at(x, y, 2) = px.z();
    out.alpha_map.at(x, y) = a_acc;
    out.depth_map.at(x, y) =
        a_acc >= kDepthValidAlpha ? d_acc / a_acc : kDepthInvalid;
  };

  if (opts.naive) {
    std::vector<int> all_idx(splats.size());
    std::iota(all_idx.begin(), all_idx.end(), 0);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) shade(x, y, all_idx);
    return out;
  }

  int tiles_x, tiles_y;
  const auto bins = bin_tiles(splats, cam.width, cam.height, tiles_x, tiles_y);
  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      const auto& list = bins[static_cast<size_t>(ty) * tiles_x + tx];
      const int x_end = std::min(cam.width, (tx + 1) * kTileSize);
      const int y_end = std::min(cam.height, (ty + 1) * kTileSize);
      for (int y = ty * kTileSize; y < y_end; ++y)
        for (int x = tx * kTileSize; x < x_end; ++x) shade(x, y, list);
    }
  return out;
}

}  // namespace hgs
