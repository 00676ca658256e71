#pragma once

#include <string>
#include <vector>

#include "hgs/core_types.hpp"

namespace hgs {

// Binary little-endian PLY checkpoint. Per-vertex layout:
//   double x y z scale_0 scale_1 scale_2 rot_0 rot_1 rot_2 rot_3
//   double opacity_logit r g b
//   uchar level, int birth_iter
// Coarse Gaussians precede fine ones; loading a saved scene reproduces it
// bitwise.
void save_scene(const std::string& path, const Scene& scene);

// Loads a scene checkpoint, or imports a plain point cloud carrying x,y,z
// and optional colors as coarse Gaussians with the given default scale and
// opacity. Any other layout raises an error listing the expected schema.
Scene load_scene(const std::string& path, double default_scale = 0.05,
                 double default_alpha = 0.6);

// Minimal xyz + uchar RGB cloud (float positions), for inspection dumps and
// synthetic-scene seeds.
void save_point_cloud(const std::string& path, const std::vector<Vec3>& points,
                      const std::vector<Vec3>& colors);

}  // namespace hgs
