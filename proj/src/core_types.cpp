#include "hgs/core_types.hpp"

#include <cmath>
#include <string>

namespace hgs {

Vec4 quat_normalized(const Vec4& q) {
  const double n2 = q.squaredNorm();
  // Fixed point: the window absorbs the round-off of a prior normalization,
  // making the operation bitwise idempotent.
  if (std::abs(n2 - 1.0) < 1e-12) return q;
  return q / std::sqrt(n2);
}

Mat3 quat_to_matrix(const Vec4& q_raw) {
  const Vec4 q = quat_normalized(q_raw);
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 covariance(const Gaussian& g) {
  const Mat3 r = quat_to_matrix(g.rotation);
  const Mat3 sigma = r * g.scale.array().square().matrix().asDiagonal() * r.transpose();
  // Symmetrize to kill round-off drift from the two matrix products.
  return 0.5 * (sigma + sigma.transpose());
}

std::vector<Gaussian> scene_union(const Scene& s) {
  std::vector<Gaussian> all;
  all.reserve(s.coarse.size() + s.fine.size());
  all.insert(all.end(), s.coarse.begin(), s.coarse.end());
  all.insert(all.end(), s.fine.begin(), s.fine.end());
  return all;
}

bool camera_valid(const Camera& cam, double tol) {
  if (cam.width <= 0 || cam.height <= 0) return false;
  if (!(cam.fx() > 0.0) || !(cam.fy() > 0.0)) return false;
  if (cam.K(1, 0) != 0.0 || cam.K(2, 0) != 0.0 || cam.K(2, 1) != 0.0 ||
      cam.K(2, 2) != 1.0)
    return false;
  const Mat3 rtr = cam.R.transpose() * cam.R;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(cam.R.determinant() - 1.0) > tol) return false;
  return true;
}

bool config_valid(const TrainConfig& c, std::string* why) {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (c.n_coarse <= 0 || c.refine_len <= 0 || c.stabilize_len <= 0)
    return fail("phase lengths must be positive");
  if (c.t_base < 1) return fail("t_base must be >= 1");
  if (c.gamma < 0) return fail("gamma must be >= 0");
  if (c.t_protect < 0) return fail("t_protect must be >= 0");
  if (!(c.alpha_minimum > 0.0 && c.alpha_minimum < 1.0))
    return fail("alpha_minimum must lie in (0,1)");
  if ((c.w.array() < 0.0).any()) return fail("fusion weights must be non-negative");
  if (c.tau_geometry_pct < 0.0 || c.tau_geometry_pct > 100.0)
    return fail("tau_geometry_pct must lie in [0,100]");
  if (c.lambda_ssim < 0.0 || c.lambda_ssim > 1.0)
    return fail("lambda_ssim must lie in [0,1]");
  if (c.lambda_curv < 0.0) return fail("lambda_curv must be >= 0");
  if (c.n_add <= 0 || c.max_fine < 0) return fail("bad sampling budget");
  if (!(c.fine_init_scale >= kScaleFloor)) return fail("fine_init_scale too small");
  if (!(c.alpha_init > 0.0 && c.alpha_init < 1.0))
    return fail("alpha_init must lie in (0,1)");
  if (!(c.epsilon_prune >= 0.0 && c.epsilon_prune < 1.0))
    return fail("epsilon_prune must lie in [0,1)");
  return true;
}

}  // namespace hgs
