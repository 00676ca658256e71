#include "hgs/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace hgs {
namespace {

template <typename V>
void adam_update(V& param, V& m, V& v, const V& grad, double lr, double b1,
                 double b2, double eps, double bc1, double bc2) {
  m = b1 * m + (1.0 - b1) * grad;
  if constexpr (std::is_same_v<V, double>) {
    v = b2 * v + (1.0 - b2) * grad * grad;
    param -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
  } else {
    v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
    param -= (lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps)).matrix();
  }
}

}  // namespace

void AdamOptimizer::resize(size_t n) { state_.resize(n); }

void AdamOptimizer::remove_rows(const std::vector<size_t>& sorted_indices) {
  if (sorted_indices.empty()) return;
  size_t keep = 0, drop = 0;
  for (size_t i = 0; i < state_.size(); ++i) {
    if (drop < sorted_indices.size() && sorted_indices[drop] == i) {
      ++drop;
      continue;
    }
    if (keep != i) state_[keep] = state_[i];
    ++keep;
  }
  state_.resize(keep);
}

void AdamOptimizer::step(std::vector<Gaussian>& gaussians,
                         const SceneGradients& grads, size_t grad_offset,
                         const GroupLearningRates& lr) {
  state_.resize(std::max(state_.size(), gaussians.size()));
  for (size_t i = 0; i < gaussians.size(); ++i) {
    Gaussian& g = gaussians[i];
    Row& row = state_[i];
    ++row.steps;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(row.steps));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(row.steps));
    const size_t j = grad_offset + i;

    if (lr.mu > 0.0)
      adam_update(g.mu, row.m_mu, row.v_mu, grads.mu[j], lr.mu, beta1_, beta2_,
                  eps_, bc1, bc2);
    if (lr.scale > 0.0) {
      adam_update(g.scale, row.m_scale, row.v_scale, grads.scale[j], lr.scale,
                  beta1_, beta2_, eps_, bc1, bc2);
      g.scale = g.scale.cwiseMax(kScaleFloor);
    }
    if (lr.rotation > 0.0) {
      adam_update(g.rotation, row.m_rot, row.v_rot, grads.rotation[j],
                  lr.rotation, beta1_, beta2_, eps_, bc1, bc2);
      g.rotation = quat_normalized(g.rotation);
    }
    if (lr.opacity > 0.0)
      adam_update(g.opacity_logit, row.m_logit, row.v_logit,
                  grads.opacity_logit[j], lr.opacity, beta1_, beta2_, eps_, bc1,
                  bc2);
    if (lr.color > 0.0) {
      adam_update(g.color, row.m_color, row.v_color, grads.color[j], lr.color,
                  beta1_, beta2_, eps_, bc1, bc2);
      g.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
    }
  }
}

double decayed_lr(double lr_init, double lr_final, long step, long total) {
  if (total <= 0 || lr_init <= 0.0 || lr_final <= 0.0 || lr_init == lr_final)
    return lr_init;
  const double t = std::clamp(static_cast<double>(step) / total, 0.0, 1.0);
  return std::exp((1.0 - t) * std::log(lr_init) + t * std::log(lr_final));
}

}  // namespace hgs
