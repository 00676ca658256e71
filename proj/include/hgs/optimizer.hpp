#pragma once

#include <vector>

#include "hgs/core_types.hpp"
#include "hgs/renderer.hpp"

namespace hgs {

// Per-parameter-group learning rates for one step.
struct GroupLearningRates {
  double mu = 0.0;
  double scale = 0.0;
  double rotation = 0.0;
  double opacity = 0.0;
  double color = 0.0;
};

// Adaptive-moment optimizer over a Gaussian list. Rows are added as
// Gaussians spawn and removed as they are pruned; each row keeps its own
// step count so bias correction is exact for late-born Gaussians.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void resize(size_t n);                          // append zero-state rows
  void remove_rows(const std::vector<size_t>& sorted_indices);
  size_t rows() const { return state_.size(); }

  // Applies one update to gaussians[i] from grads rows [grad_offset + i].
  // A zero learning rate freezes the corresponding group (no moment decay).
  // After the update scales are clamped to the floor, colors to [0,1], and
  // the quaternion is renormalized.
  void step(std::vector<Gaussian>& gaussians, const SceneGradients& grads,
            size_t grad_offset, const GroupLearningRates& lr);

 private:
  struct Row {
    Vec3 m_mu = Vec3::Zero(), v_mu = Vec3::Zero();
    Vec3 m_scale = Vec3::Zero(), v_scale = Vec3::Zero();
    Vec4 m_rot = Vec4::Zero(), v_rot = Vec4::Zero();
    double m_logit = 0.0, v_logit = 0.0;
    Vec3 m_color = Vec3::Zero(), v_color = Vec3::Zero();
    long steps = 0;
  };
  double beta1_, beta2_, eps_;
  std::vector<Row> state_;
};

// Log-linear interpolation from lr_init to lr_final across total steps.
double decayed_lr(double lr_init, double lr_final, long step, long total);

}  // namespace hgs
