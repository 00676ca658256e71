#pragma once

// Internals shared by the forward and backward rasterizer passes.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hgs/renderer.hpp"

namespace hgs::detail {

inline constexpr int kTileSize = 16;

// Flattened splat record used by the per-pixel blend loops.
struct SplatRec {
  double mx, my;          // mean2d
  double qa, qb, qc;      // conic (inverse 2x2 covariance)
  double alpha;           // effective opacity entering the blend
  double depth;
  Vec3 color;
  int src;                // scene-union index
  int x0, x1, y0, y1;     // inclusive pixel bbox of the support ellipse
  bool logit_grad_blocked;
  // Projection intermediates kept for the backward pass.
  Mat2 cov2d;
  Vec3 x_cam;
};

// Projects and depth-sorts every visible Gaussian of the union.
std::vector<SplatRec> build_splats(const std::vector<Gaussian>& all,
                                   const Camera& cam, const RenderOptions& opts);

// One front-to-back contribution at a pixel, recorded for the backward pass.
struct Contribution {
  int rec;        // index into the splat vector
  double a;       // blended alpha after clamping
  double g;       // Gaussian density at the pixel
  double T;       // transmittance in front of this splat
  bool clamped;
};

// Front-to-back blend of `candidates` (indices into `splats`, already in
// depth order) at pixel center (px, py). Identical arithmetic for the tiled
// and naive paths. When `contribs` is non-null every accepted contribution is
// appended for the adjoint. Returns final transmittance.
template <typename Candidates>
inline double blend_pixel(const Candidates& candidates,
                          const std::vector<SplatRec>& splats, double px,
                          double py, Vec3& color_out, double& depth_accum,
                          double& alpha_accum,
                          std::vector<Contribution>* contribs = nullptr) {
  double T = 1.0;
  Vec3 c = Vec3::Zero();
  double d_acc = 0.0;
  double a_acc = 0.0;
  for (int idx : candidates) {
    const SplatRec& s = splats[idx];
    const double dx = px - s.mx;
    const double dy = py - s.my;
    const double d2 = s.qa * dx * dx + 2.0 * s.qb * dx * dy + s.qc * dy * dy;
    if (d2 > kSupportSq) continue;
    const double g = std::exp(-0.5 * d2);
    double a = s.alpha * g;
    const bool clamped = a > kAlphaClamp;
    if (clamped) a = kAlphaClamp;
    const double w = a * T;
    c += w * s.color;
    d_acc += w * s.depth;
    a_acc += w;
    if (contribs) contribs->push_back({idx, a, g, T, clamped});
    T *= 1.0 - a;
    if (T < kTransmitEps) break;
  }
  color_out = c;
  depth_accum = d_acc;
  alpha_accum = a_acc;
  return T;
}

// Tile ranges covered by a splat's pixel bbox.
inline void tile_range(const SplatRec& s, int tiles_x, int tiles_y, int& tx0,
                       int& tx1, int& ty0, int& ty1) {
  tx0 = std::clamp(s.x0 / kTileSize, 0, tiles_x - 1);
  tx1 = std::clamp(s.x1 / kTileSize, 0, tiles_x - 1);
  ty0 = std::clamp(s.y0 / kTileSize, 0, tiles_y - 1);
  ty1 = std::clamp(s.y1 / kTileSize, 0, tiles_y - 1);
}

// Per-tile candidate lists, preserving global depth order within each tile.
std::vector<std::vector<int>> bin_tiles(const std::vector<SplatRec>& splats,
                                        int width, int height, int& tiles_x,
                                        int& tiles_y);

}  // namespace hgs::detail
