#pragma once

#include <string>
#include <vector>

#include "hgs/core_types.hpp"
#include "hgs/metrics.hpp"

namespace hgs {

struct DatasetView {
  std::string name;
  Camera camera;
  RasterGrid image;   // 3 channels, [0,1]
  RasterGrid depth;   // 1 channel prior depth; empty when absent
  RasterGrid labels;  // 1 channel class ids; empty when absent
  bool has_depth = false;
  bool has_labels = false;
};

struct Dataset {
  std::vector<DatasetView> views;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  Vec3 background = Vec3::Zero();
  int background_class = 0;
  std::vector<std::string> warnings;  // e.g. missing priors
};

// Loads and validates a JSON manifest. Image files may be PNG or PFM
// (by extension). Throws with the offending view named on invalid cameras,
// missing files or dimension mismatches.
Dataset load_dataset(const std::string& manifest_path);

struct SyntheticParams {
  uint64_t seed = 0;
  int n_gaussians = 40;
  int n_views = 4;
  int width = 96;
  int height = 96;
  // Every k-th ground-truth Gaussian seeds the coarse init cloud.
  int init_stride = 3;
  // Flat backdrop wall behind the scene (always part of the init cloud).
  bool backdrop = true;
  // Per-view photometric noise added to the stored images; models appearance
  // inconsistency between views. 0 keeps images exactly re-renderable.
  double noise_std = 0.0;
};

struct SyntheticResult {
  Dataset dataset;
  Scene gt_scene;
  Scene init_scene;  // degraded point-cloud init, all coarse
  std::string manifest_path;
};

// Renders a random ground-truth Gaussian scene from cameras on a viewing arc
// and writes images (PFM + PNG preview), exact depth maps, cluster label
// maps, the manifest, the ground-truth scene and an init cloud into out_dir.
// Deterministic for a given parameter set.
SyntheticResult make_synthetic(const SyntheticParams& params,
                               const std::string& out_dir);

// Renders every test view and reports PSNR/SSIM per view and their means.
MetricsReport evaluate(const Scene& scene, const Dataset& data);

}  // namespace hgs
