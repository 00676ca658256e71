#pragma once

#include "hgs/core_types.hpp"

namespace hgs {

// Highest admissible semantic class id (21 classes, 0..20).
inline constexpr int kMaxClassId = 20;

// File-ingested priors standing in for network-predicted depth and labels.
struct PriorInputs {
  RasterGrid depth;       // 1 channel, world units; invalid pixels <= 0
  RasterGrid labels;      // 1 channel, integer class ids in [0, kMaxClassId]
  int background_class = 0;
};

// Per-view importance grids. Component maps are min-max normalized to [0,1]
// before fusion; m_reliable is binary.
struct ScoreMaps {
  RasterGrid s_render;
  RasterGrid s_semantic;
  RasterGrid s_geometry;
  RasterGrid s_importance;
  RasterGrid m_reliable;
};

// In-place min-max normalization to [0,1]; a constant map becomes all zeros.
void minmax_normalize(RasterGrid& g);

// p-th percentile (0..100, linear interpolation) of a single-channel grid.
double percentile(const RasterGrid& g, double pct);

// Per-pixel Euclidean RGB distance ||gt - rendered||_2. Not normalized.
RasterGrid render_residual(const RasterGrid& gt, const RasterGrid& rendered);

// Label-driven score: base map (1 on foreground, a small floor on background)
// times the sum of a boundary-band mask and a foreground mask, then min-max
// normalized.
RasterGrid semantic_score(const PriorInputs& inputs);

// ||grad D||_2 plus lambda_curv * |laplacian D|, zero on invalid-depth
// pixels, then min-max normalized.
RasterGrid geometry_score(const PriorInputs& inputs, double lambda_curv);

// Pointwise w . [s_render, s_semantic, s_geometry].
RasterGrid fuse(const RasterGrid& s_render, const RasterGrid& s_semantic,
                const RasterGrid& s_geometry, const Vec3& w);

// Binary mask, 1 iff s_geometry strictly exceeds tau.
RasterGrid reliability_mask(const RasterGrid& s_geometry, double tau_geometry);

}  // namespace hgs
