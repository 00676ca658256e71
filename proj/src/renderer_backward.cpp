#include <algorithm>
#include <cmath>

#include "hgs/renderer.hpp"
#include "renderer_detail.hpp"

namespace hgs {
namespace {

using detail::Contribution;
using detail::SplatRec;

// Gradient accumulators in projected space, one row per splat record.
struct ProjGrad {
  double mx = 0, my = 0;        // dL/dmean2d
  double qa = 0, qb = 0, qc = 0; // dL/dconic (qb counts both off-diagonals)
  double alpha = 0;              // dL/d(effective opacity)
  Vec3 color = Vec3::Zero();
  bool touched = false;
};

// d(rotation matrix)/d(unit quaternion component), q = (w, x, y, z).
void quat_matrix_partials(const Vec4& q, Mat3 d[4]) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  for (int k = 0; k < 4; ++k) d[k] *= 2.0;
}

}  // namespace

SceneGradients render_backward(const Scene& scene, const Camera& cam,
                               const RasterGrid& dL_dimage,
                               const RenderOptions& opts) {
  using namespace detail;
  if (dL_dimage.width != cam.width || dL_dimage.height != cam.height ||
      dL_dimage.channels != 3)
    throw std::invalid_argument("render_backward: dL_dimage shape mismatch");

  const std::vector<Gaussian> all = scene_union(scene);
  SceneGradients grads(all.size());
  const std::vector<SplatRec> splats = build_splats(all, cam, opts);
  if (splats.empty()) return grads;

  std::vector<ProjGrad> pg(splats.size());
  std::vector<Contribution> contribs;
  contribs.reserve(128);

  int tiles_x, tiles_y;
  const auto bins = bin_tiles(splats, cam.width, cam.height, tiles_x, tiles_y);

  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      const auto& list = bins[static_cast<size_t>(ty) * tiles_x + tx];
      if (list.empty()) continue;
      const int x_end = std::min(cam.width, (tx + 1) * kTileSize);
      const int y_end = std::min(cam.height, (ty + 1) * kTileSize);
      for (int y = ty * kTileSize; y < y_end; ++y)
        for (int x = tx * kTileSize; x < x_end; ++x) {
          contribs.clear();
          Vec3 c;
          double d_acc, a_acc;
          const double t_final = blend_pixel(list, splats, x + 0.5, y + 0.5, c,
                                             d_acc, a_acc, &contribs);
          if (contribs.empty()) continue;
          const Vec3 dLdC(dL_dimage.at(x, y, 0), dL_dimage.at(x, y, 1),
                          dL_dimage.at(x, y, 2));
          // Suffix sum S_i = sum_{j>i} c_j a_j T_j + background * T_final.
          Vec3 suffix = opts.background * t_final;
          for (int i = static_cast<int>(contribs.size()) - 1; i >= 0; --i) {
            const Contribution& cb = contribs[i];
            const SplatRec& s = splats[cb.rec];
            ProjGrad& g = pg[cb.rec];
            g.touched = true;
            g.color += dLdC * (cb.a * cb.T);
            const double grad_a =
                dLdC.dot(s.color * cb.T - suffix / (1.0 - cb.a));
            suffix += s.color * (cb.a * cb.T);
            if (cb.clamped) continue;  // flat side of the alpha clamp
            g.alpha += grad_a * cb.g;
            const double dl_dd2 = grad_a * s.alpha * (-0.5 * cb.g);
            const double dx = (x + 0.5) - s.mx;
            const double dy = (y + 0.5) - s.my;
            g.mx += dl_dd2 * -(2.0 * s.qa * dx + 2.0 * s.qb * dy);
            g.my += dl_dd2 * -(2.0 * s.qb * dx + 2.0 * s.qc * dy);
            g.qa += dl_dd2 * dx * dx;
            g.qb += dl_dd2 * 2.0 * dx * dy;
            g.qc += dl_dd2 * dy * dy;
          }
        }
    }

  // Chain projected-space gradients back to the 3D Gaussian parameters.
  const double fx = cam.fx(), fy = cam.fy();
  for (size_t i = 0; i < splats.size(); ++i) {
    const ProjGrad& g = pg[i];
    if (!g.touched) continue;
    const SplatRec& s = splats[i];
    const Gaussian& gs = all[s.src];

    grads.color[s.src] += g.color;
    if (!s.logit_grad_blocked) {
      const double a = s.alpha;
      grads.opacity_logit[s.src] += g.alpha * a * (1.0 - a);
    }

    // Conic -> projected covariance: d(inv(S)) = -inv(S) dS inv(S).
    Mat2 q_mat;
    q_mat << s.qa, s.qb, s.qb, s.qc;
    Mat2 gq;
    gq << g.qa, 0.5 * g.qb, 0.5 * g.qb, g.qc;
    const Mat2 g_cov2d = -q_mat * gq * q_mat;

    const Vec3& xc = s.x_cam;
    const double z = xc.z(), z2 = z * z, z3 = z2 * z;
    Eigen::Matrix<double, 2, 3> jac;
    jac << fx / z, 0.0, -fx * xc.x() / z2, 0.0, fy / z, -fy * xc.y() / z2;
    const Eigen::Matrix<double, 2, 3> a_mat = jac * cam.R;
    const Mat3 sigma = covariance(gs);

    const Mat3 g_sigma = a_mat.transpose() * g_cov2d * a_mat;
    const Eigen::Matrix<double, 2, 3> g_a = 2.0 * g_cov2d * a_mat * sigma;
    const Eigen::Matrix<double, 2, 3> g_jac = g_a * cam.R.transpose();

    Vec3 g_xc(g.mx * fx / z, g.my * fy / z,
              -g.mx * fx * xc.x() / z2 - g.my * fy * xc.y() / z2);
    g_xc.x() += g_jac(0, 2) * (-fx / z2);
    g_xc.y() += g_jac(1, 2) * (-fy / z2);
    g_xc.z() += g_jac(0, 0) * (-fx / z2) + g_jac(1, 1) * (-fy / z2) +
                g_jac(0, 2) * (2.0 * fx * xc.x() / z3) +
                g_jac(1, 2) * (2.0 * fy * xc.y() / z3);
    grads.mu[s.src] += cam.R.transpose() * g_xc;

    // Sigma = M M^T with M = R_q diag(scale).
    const Vec4 qn = quat_normalized(gs.rotation);
    const Mat3 rq = quat_to_matrix(qn);
    const Mat3 m = rq * gs.scale.asDiagonal();
    const Mat3 g_m = 2.0 * g_sigma * m;
    for (int k = 0; k < 3; ++k)
      grads.scale[s.src][k] += rq.col(k).dot(g_m.col(k));
    const Mat3 g_rq = g_m * gs.scale.asDiagonal();
    Mat3 dr[4];
    quat_matrix_partials(qn, dr);
    Vec4 g_qn;
    for (int k = 0; k < 4; ++k) g_qn[k] = (g_rq.array() * dr[k].array()).sum();
    const double norm = gs.rotation.norm();
    grads.rotation[s.src] += (g_qn - qn * qn.dot(g_qn)) / norm;
  }
  return grads;
}

}  // namespace hgs
