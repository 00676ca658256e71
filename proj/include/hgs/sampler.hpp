#pragma once

#include <cstdint>
#include <vector>

#include "hgs/core_types.hpp"

namespace hgs {

// Normalized pixel-sampling distribution P_sample over a raster.
struct SampleDistribution {
  RasterGrid probs;       // sums to 1 when support_size > 0, else all zero
  int support_size = 0;   // pixels with positive probability

  // Prefix sums over positive-probability pixels only, for inverse-CDF
  // draws. cdf[i] pairs with support[i] (flat pixel index).
  std::vector<double> cdf;
  std::vector<int> support;
};

struct LedgerEntry {
  uint64_t serial = 0;     // unique id assigned at spawn, for audit trails
  int birth_iter = 0;
  int protected_until = 0; // birth_iter + T_protect
};

// Retention bookkeeping for fine Gaussians. Entry i belongs to scene.fine[i];
// spawn and prune keep the two lists in lockstep.
struct RetentionLedger {
  std::vector<LedgerEntry> entries;
  uint64_t next_serial = 1;

  // Every fine Gaussian has exactly one entry and birth iterations agree.
  bool consistent_with(const Scene& scene) const;
};

struct PixelCoord {
  int x = 0;
  int y = 0;
};

// probs proportional to s_importance * m_reliable. A zero masked sum yields
// support_size = 0 (sampling becomes a no-op, not an error).
SampleDistribution build_distribution(const RasterGrid& s_importance,
                                      const RasterGrid& m_reliable);

// n independent draws (with replacement) from the distribution; deterministic
// given the seed. Throws when the support is empty.
std::vector<PixelCoord> draw_pixels(const SampleDistribution& dist, int n,
                                    uint64_t rng_seed);

// Deterministic top-k pixels by probability (ablation replacement for the
// probabilistic draw); ties broken by flat pixel index.
std::vector<PixelCoord> top_k_pixels(const SampleDistribution& dist, int k);

// p_w = R^-1 (d K^-1 [u v 1]^T - t). Throws on non-positive depth.
Vec3 back_project(const Vec2& pixel, double depth, const Camera& cam);

// New fine Gaussian at p_w: isotropic fine_init_scale, identity rotation,
// alpha_init opacity, color copied from the ground-truth pixel. Appends the
// ledger entry.
Gaussian spawn_fine(const Vec3& p_w, const PixelCoord& pixel,
                    const RasterGrid& gt_image, const TrainConfig& config,
                    int iter, RetentionLedger& ledger);

// max(alpha, alpha_minimum) while iter < protected_until, raw alpha after.
double effective_opacity(const Gaussian& g, const LedgerEntry& entry, int iter,
                         double alpha_minimum);

// Removes fine Gaussians with effective opacity below epsilon_prune whose
// protection window has expired. Coarse Gaussians are never pruned. Returns
// the serials of removed Gaussians.
std::vector<uint64_t> prune(Scene& scene, RetentionLedger& ledger, int iter,
                            double epsilon_prune, double alpha_minimum);

}  // namespace hgs
