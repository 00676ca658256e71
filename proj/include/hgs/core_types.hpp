#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace hgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Smallest per-axis extent a Gaussian may have, in world units.
inline constexpr double kScaleFloor = 1e-4;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p) - std::log(1.0 - p); }

enum class Level : uint8_t { Coarse = 0, Fine = 1 };

// One splatting primitive. Covariance is kept factored as scale + rotation so
// it stays symmetric positive definite no matter what the optimizer does.
struct Gaussian {
  Vec3 mu = Vec3::Zero();          // world-space mean
  Vec3 scale = Vec3::Ones();       // per-axis extents, > 0 and >= kScaleFloor
  Vec4 rotation{1, 0, 0, 0};       // unit quaternion (w, x, y, z)
  double opacity_logit = 0.0;      // sigmoid(opacity_logit) = alpha in (0,1)
  Vec3 color = Vec3::Zero();       // RGB in [0,1], degree-0 appearance
  Level level = Level::Coarse;
  int birth_iter = 0;

  double alpha() const { return sigmoid(opacity_logit); }
};

// Returns q / |q|. Idempotent: normalizing an already-unit quaternion again
// reproduces it bitwise (guarded by the norm == 1 fast path).
Vec4 quat_normalized(const Vec4& q);

// Rotation matrix of a quaternion (w, x, y, z); normalizes first.
Mat3 quat_to_matrix(const Vec4& q);

// Sigma = R diag(scale^2) R^T. Symmetric positive definite by construction.
Mat3 covariance(const Gaussian& g);

// Coarse scaffold plus dynamically sampled fine detail. Rendering always
// consumes the union of both levels.
struct Scene {
  std::vector<Gaussian> coarse;
  std::vector<Gaussian> fine;

  size_t size() const { return coarse.size() + fine.size(); }
};

// Concatenation coarse-then-fine; deterministic order, no drops or duplicates.
std::vector<Gaussian> scene_union(const Scene& s);

// Pinhole camera, world-to-camera convention x_cam = R * x_world + t.
struct Camera {
  Mat3 K = Mat3::Identity();  // upper triangular, positive focal entries
  Mat3 R = Mat3::Identity();  // orthonormal, det +1
  Vec3 t = Vec3::Zero();
  int width = 0;
  int height = 0;

  double fx() const { return K(0, 0); }
  double fy() const { return K(1, 1); }
  double cx() const { return K(0, 2); }
  double cy() const { return K(1, 2); }
};

// R orthonormal with det +1 within tol, K upper triangular with fx, fy > 0.
bool camera_valid(const Camera& cam, double tol = 1e-9);

// Row-major scalar raster, 1 or 3 channels. Carrier for images, depth maps,
// score maps and masks.
struct RasterGrid {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  RasterGrid() = default;
  RasterGrid(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const RasterGrid& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Every schedule constant of the training pipeline.
struct TrainConfig {
  // Phase lengths (iterations).
  int n_coarse = 500;
  int refine_len = 2000;
  int stabilize_len = 500;

  // Sampling schedule T_sample(t) = t_base * (1 + gamma * t).
  int t_base = 100;
  double gamma = 0.01;

  // Protection / retention.
  int t_protect = 400;
  double alpha_minimum = 0.05;
  double epsilon_prune = 0.005;

  // Importance fusion and reliability.
  Vec3 w{0.4, 0.2, 0.4};          // [w_render, w_semantic, w_geometry]
  double tau_geometry_pct = 50.0; // percentile of the normalized geometry map
  double lambda_curv = 0.5;

  // Loss.
  double lambda_ssim = 0.2;

  // Fine-Gaussian sampling.
  int n_add = 64;
  int max_fine = 2000;
  double fine_init_scale = 0.02;
  double alpha_init = 0.1;

  // Learning rates. Position decays log-linearly to lr_mu_final over the run.
  double lr_mu = 2e-3;
  double lr_mu_final = 2e-4;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_opacity = 5e-2;
  double lr_color = 2.5e-2;
  double coarse_appearance_lr_mult = 0.1; // coarse opacity/color after phase 1

  // Per-phase learning-rate multipliers.
  double phase_lr_mult[3] = {1.0, 1.0, 0.3};

  // Renderer.
  Vec3 background = Vec3::Zero();
  double near_clip = 0.05;

  // Written before aborting on a non-finite loss; empty disables the dump.
  std::string abort_snapshot_path;

  uint64_t seed = 0;
};

bool config_valid(const TrainConfig& c, std::string* why = nullptr);

}  // namespace hgs
