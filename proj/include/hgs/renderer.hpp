#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hgs/core_types.hpp"

namespace hgs {

// Low-pass regularization added to the projected covariance diagonal (px^2).
inline constexpr double kLowpass = 0.3;
// Squared Mahalanobis support radius of a splat. Contributions outside are
// dropped in both the tiled and the naive path; the cutoff is far enough out
// (~6.7 sigma) that the truncation jump sits below gradient-check tolerances.
inline constexpr double kSupportSq = 45.0;
// 99% extent used for frustum culling at projection time (chi-square, 2 dof).
inline constexpr double kCullSq = 9.2103403719761818;
// Blending stops once transmittance drops below this.
inline constexpr double kTransmitEps = 1e-4;
// Upper clamp on a single splat's blended alpha.
inline constexpr double kAlphaClamp = 0.999;
// Pixels with accumulated alpha below this get an invalid depth.
inline constexpr double kDepthValidAlpha = 1e-3;
// Depth value marking an invalid pixel (sentinel <= 0).
inline constexpr double kDepthInvalid = -1.0;

struct ProjectedGaussian {
  Vec2 mean2d = Vec2::Zero();    // pixel coordinates
  Mat2 cov2d = Mat2::Identity(); // after low-pass regularization
  double depth = 0.0;            // camera-space z
  double alpha = 0.0;            // effective opacity entering the blend
  Vec3 color = Vec3::Zero();
  int source_index = -1;         // index into the scene-union list
};

struct RenderOutput {
  RasterGrid image;      // 3 channels, in [0,1]
  RasterGrid depth_map;  // 1 channel, alpha-weighted expected depth
  RasterGrid alpha_map;  // 1 channel, accumulated opacity
};

struct RenderOptions {
  Vec3 background = Vec3::Zero();
  double near_clip = 0.05;
  // Per-union-index opacity override (protection floor). Empty means the
  // raw sigmoid opacity of every Gaussian.
  std::span<const double> alpha_override;
  // Reference per-pixel path instead of the tiled one.
  bool naive = false;
};

// Perspective projection of one Gaussian. Returns nullopt when the splat is
// behind the near plane or its 99% extent misses the image rectangle.
std::optional<ProjectedGaussian> project(const Gaussian& g, const Camera& cam,
                                         double near_clip = 0.05,
                                         double alpha_override = -1.0);

// Depth-sorted front-to-back alpha blending over the coarse+fine union.
RenderOutput render(const Scene& scene, const Camera& cam,
                    const RenderOptions& opts = {});

// Per-Gaussian parameter gradients, aligned with scene_union order.
struct SceneGradients {
  std::vector<Vec3> mu;
  std::vector<Vec3> scale;
  std::vector<Vec4> rotation;
  std::vector<double> opacity_logit;
  std::vector<Vec3> color;

  explicit SceneGradients(size_t n = 0)
      : mu(n, Vec3::Zero()), scale(n, Vec3::Zero()), rotation(n, Vec4::Zero()),
        opacity_logit(n, 0.0), color(n, Vec3::Zero()) {}
  size_t size() const { return mu.size(); }
};

// Analytic adjoint of render() for the image output. Gradients of culled
// (non-contributing) Gaussians are zero. When an opacity override floors a
// Gaussian, its opacity_logit gradient is blocked (flat side of the max).
SceneGradients render_backward(const Scene& scene, const Camera& cam,
                               const RasterGrid& dL_dimage,
                               const RenderOptions& opts = {});

}  // namespace hgs
