#include "hgs/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace hgs {

bool RetentionLedger::consistent_with(const Scene& scene) const {
  if (entries.size() != scene.fine.size()) return false;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (scene.fine[i].level != Level::Fine) return false;
    if (scene.fine[i].birth_iter != entries[i].birth_iter) return false;
  }
  return true;
}

SampleDistribution build_distribution(const RasterGrid& s_importance,
                                      const RasterGrid& m_reliable) {
  if (!s_importance.same_shape(m_reliable))
    throw std::invalid_argument("build_distribution: shape mismatch");
  SampleDistribution dist;
  dist.probs = RasterGrid(s_importance.width, s_importance.height, 1);
  double total = 0.0;
  for (size_t i = 0; i < s_importance.data.size(); ++i) {
    const double v = s_importance.data[i] * m_reliable.data[i];
    dist.probs.data[i] = v;
    total += v;
  }
  if (!(total > 0.0)) {
    std::fill(dist.probs.data.begin(), dist.probs.data.end(), 0.0);
    dist.support_size = 0;
    return dist;
  }
  double cum = 0.0;
  for (size_t i = 0; i < dist.probs.data.size(); ++i) {
    dist.probs.data[i] /= total;
    if (dist.probs.data[i] > 0.0) {
      cum += dist.probs.data[i];
      dist.support.push_back(static_cast<int>(i));
      dist.cdf.push_back(cum);
    }
  }
  dist.support_size = static_cast<int>(dist.support.size());
  dist.cdf.back() = 1.0;  // guard against round-off at the top end
  return dist;
}

std::vector<PixelCoord> draw_pixels(const SampleDistribution& dist, int n,
                                    uint64_t rng_seed) {
  if (dist.support_size == 0)
    throw std::logic_error("draw_pixels: empty support");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<PixelCoord> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = uni(rng);
    const auto it = std::lower_bound(dist.cdf.begin(), dist.cdf.end(), u);
    const size_t k = std::min<size_t>(it - dist.cdf.begin(), dist.cdf.size() - 1);
    const int flat = dist.support[k];
    out.push_back({flat % dist.probs.width, flat / dist.probs.width});
  }
  return out;
}

std::vector<PixelCoord> top_k_pixels(const SampleDistribution& dist, int k) {
  std::vector<int> order(dist.support.begin(), dist.support.end());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dist.probs.data[a] > dist.probs.data[b];
  });
  std::vector<PixelCoord> out;
  const int take = std::min<int>(k, static_cast<int>(order.size()));
  out.reserve(take);
  for (int i = 0; i < take; ++i)
    out.push_back({order[i] % dist.probs.width, order[i] / dist.probs.width});
  return out;
}

Vec3 back_project(const Vec2& pixel, double depth, const Camera& cam) {
  if (!(depth > 0.0))
    throw std::invalid_argument("back_project: non-positive depth");
  const Vec3 ray((pixel.x() - cam.cx()) / cam.fx(),
                 (pixel.y() - cam.cy()) / cam.fy(), 1.0);
  return cam.R.transpose() * (depth * ray - cam.t);
}

Gaussian spawn_fine(const Vec3& p_w, const PixelCoord& pixel,
                    const RasterGrid& gt_image, const TrainConfig& config,
                    int iter, RetentionLedger& ledger) {
  Gaussian g;
  g.mu = p_w;
  g.scale = Vec3::Constant(config.fine_init_scale);
  g.rotation = Vec4(1, 0, 0, 0);
  g.opacity_logit = logit(config.alpha_init);
  g.color = Vec3(gt_image.at(pixel.x, pixel.y, 0), gt_image.at(pixel.x, pixel.y, 1),
                 gt_image.at(pixel.x, pixel.y, 2));
  g.level = Level::Fine;
  g.birth_iter = iter;
  ledger.entries.push_back(
      {ledger.next_serial++, iter, iter + config.t_protect});
  return g;
}

double effective_opacity(const Gaussian& g, const LedgerEntry& entry, int iter,
                         double alpha_minimum) {
  const double a = g.alpha();
  if (g.level == Level::Fine && iter < entry.protected_until)
    return std::max(a, alpha_minimum);
  return a;
}

std::vector<uint64_t> prune(Scene& scene, RetentionLedger& ledger, int iter,
                            double epsilon_prune, double alpha_minimum) {
  std::vector<uint64_t> removed;
  size_t keep = 0;
  for (size_t i = 0; i < scene.fine.size(); ++i) {
    const double eff =
        effective_opacity(scene.fine[i], ledger.entries[i], iter, alpha_minimum);
    const bool expired = iter >= ledger.entries[i].protected_until;
    if (eff < epsilon_prune && expired) {
      removed.push_back(ledger.entries[i].serial);
      continue;
    }
    if (keep != i) {
      scene.fine[keep] = scene.fine[i];
      ledger.entries[keep] = ledger.entries[i];
    }
    ++keep;
  }
  scene.fine.resize(keep);
  ledger.entries.resize(keep);
  return removed;
}

}  // namespace hgs
