#include "hgs/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "hgs/image_io.hpp"
#include "hgs/importance.hpp"
#include "hgs/ply_io.hpp"
#include "hgs/renderer.hpp"
#include "hgs/ssim.hpp"

namespace hgs {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

RasterGrid read_image_any(const std::string& path) {
  if (ends_with(path, ".pfm")) return read_pfm(path);
  return read_png(path);
}

Camera camera_from_json(const json& j) {
  Camera cam;
  const double fx = j.at("fx"), fy = j.at("fy"), cx = j.at("cx"), cy = j.at("cy");
  cam.K << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  cam.width = j.at("width");
  cam.height = j.at("height");
  const auto& r = j.at("R");
  const auto& t = j.at("t");
  if (r.size() != 9 || t.size() != 3)
    throw std::runtime_error("camera R must have 9 entries and t 3");
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) cam.R(i, k) = r[i * 3 + k];
    cam.t[i] = t[i];
  }
  return cam;
}

json camera_to_json(const Camera& cam) {
  json j;
  j["fx"] = cam.fx();
  j["fy"] = cam.fy();
  j["cx"] = cam.cx();
  j["cy"] = cam.cy();
  j["width"] = cam.width;
  j["height"] = cam.height;
  std::vector<double> r(9), t(3);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r[i * 3 + k] = cam.R(i, k);
    t[i] = cam.t[i];
  }
  j["R"] = r;
  j["t"] = t;
  return j;
}

// Look-at pose: rows of R are the camera right / down / forward axes, so
// x_cam = R x_world + t with det(R) = +1.
Camera look_at(const Vec3& eye, const Vec3& target, double fov_deg, int width,
               int height) {
  Camera cam;
  const Vec3 fwd = (target - eye).normalized();
  Vec3 up(0, 1, 0);
  if (std::abs(fwd.dot(up)) > 0.99) up = Vec3(1, 0, 0);
  const Vec3 right = fwd.cross(up).normalized();
  const Vec3 down = fwd.cross(right);
  cam.R.row(0) = right;
  cam.R.row(1) = down;
  cam.R.row(2) = fwd;
  cam.t = -cam.R * eye;
  const double f = 0.5 * width / std::tan(0.5 * fov_deg * M_PI / 180.0);
  cam.K << f, 0, width / 2.0, 0, f, height / 2.0, 0, 0, 1;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("manifest parse error in " + manifest_path + ": " +
                             e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) { return (base / p).string(); };

  Dataset data;
  if (j.contains("background")) {
    const auto& bg = j.at("background");
    data.background = Vec3(bg.at(0), bg.at(1), bg.at(2));
  }
  data.background_class = j.value("background_class", 0);

  int w = -1, h = -1;
  for (const auto& jv : j.at("views")) {
    DatasetView v;
    v.name = jv.value("name", "view_" + std::to_string(data.views.size()));
    v.camera = camera_from_json(jv.at("camera"));
    if (!camera_valid(v.camera))
      throw std::runtime_error("view " + v.name +
                               ": invalid camera (R must be a rotation with det +1, "
                               "K upper-triangular with positive focals)");
    v.image = read_image_any(resolve(jv.at("image")));
    if (v.image.width != v.camera.width || v.image.height != v.camera.height)
      throw std::runtime_error("view " + v.name + ": image dimensions disagree with camera");
    if (w < 0) {
      w = v.image.width;
      h = v.image.height;
    } else if (v.image.width != w || v.image.height != h) {
      throw std::runtime_error("view " + v.name + ": dimensions differ from the rest of the dataset");
    }
    if (jv.contains("depth")) {
      v.depth = read_pfm(resolve(jv.at("depth")));
      if (v.depth.width != w || v.depth.height != h || v.depth.channels != 1)
        throw std::runtime_error("view " + v.name + ": bad depth map shape");
      v.has_depth = true;
    }
    if (jv.contains("labels")) {
      v.labels = read_png_labels(resolve(jv.at("labels")));
      if (v.labels.width != w || v.labels.height != h)
        throw std::runtime_error("view " + v.name + ": bad label map shape");
      v.has_labels = true;
    }
    const std::string split = jv.value("split", "train");
    const int idx = static_cast<int>(data.views.size());
    (split == "test" ? data.test_indices : data.train_indices).push_back(idx);
    if (split == "train") {
      if (!v.has_depth)
        data.warnings.push_back("view " + v.name +
                                ": no depth prior; geometry score defaults to 0");
      if (!v.has_labels)
        data.warnings.push_back("view " + v.name +
                                ": no label prior; semantic score defaults to 0");
    }
    data.views.push_back(std::move(v));
  }
  if (data.views.empty()) throw std::runtime_error("manifest lists no views");
  return data;
}

SyntheticResult make_synthetic(const SyntheticParams& params,
                               const std::string& out_dir) {
  if (params.n_views < 3)
    throw std::invalid_argument("make_synthetic: need at least 3 views");
  fs::create_directories(out_dir);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // Clustered ground-truth Gaussians so label maps carry real structure.
  const int n_clusters =
      std::clamp(params.n_gaussians / 12, 2, kMaxClassId);
  std::vector<Vec3> centers(n_clusters);
  std::vector<Vec3> base_colors(n_clusters);
  for (int k = 0; k < n_clusters; ++k) {
    centers[k] = Vec3(uni(rng) * 1.4 - 0.7, uni(rng) * 1.4 - 0.7,
                      uni(rng) * 1.0 - 0.5);
    base_colors[k] = Vec3(0.25 + 0.75 * uni(rng), 0.25 + 0.75 * uni(rng),
                          0.25 + 0.75 * uni(rng));
  }

  SyntheticResult result;
  std::vector<int> cluster_of(params.n_gaussians);
  for (int i = 0; i < params.n_gaussians; ++i) {
    const int k = i % n_clusters;
    cluster_of[i] = k;
    Gaussian g;
    g.mu = centers[k] + Vec3(uni(rng) - 0.5, uni(rng) - 0.5, uni(rng) - 0.5) * 0.55;
    g.scale = Vec3(0.05 + 0.12 * uni(rng), 0.05 + 0.12 * uni(rng),
                   0.05 + 0.12 * uni(rng));
    Vec4 q(uni(rng) * 2 - 1, uni(rng) * 2 - 1, uni(rng) * 2 - 1, uni(rng) * 2 - 1);
    g.rotation = quat_normalized(q.norm() < 1e-6 ? Vec4(1, 0, 0, 0) : q);
    g.opacity_logit = logit(0.55 + 0.4 * uni(rng));
    g.color = (base_colors[k] + Vec3(uni(rng), uni(rng), uni(rng)) * 0.25)
                  .cwiseMin(1.0);
    g.level = Level::Coarse;
    result.gt_scene.coarse.push_back(g);
  }

  // Backdrop: a flat wall of large splats behind the clusters. Labeled
  // background; its depth is valid but geometrically featureless.
  std::vector<Gaussian> wall;
  if (params.backdrop) {
    for (int wy = -3; wy <= 3; ++wy)
      for (int wx = -3; wx <= 3; ++wx) {
        Gaussian g;
        g.mu = Vec3(wx * 0.55, wy * 0.55, 1.35 + 0.02 * uni(rng));
        g.scale = Vec3(0.45, 0.45, 0.03);
        g.rotation = Vec4(1, 0, 0, 0);
        g.opacity_logit = logit(0.97);
        const double shade = 0.25 + 0.2 * uni(rng);
        g.color = Vec3(shade, shade * 0.9, shade * 1.1).cwiseMin(1.0);
        g.level = Level::Coarse;
        wall.push_back(g);
      }
    result.gt_scene.coarse.insert(result.gt_scene.coarse.end(), wall.begin(),
                                  wall.end());
  }

  // Cameras on an arc around the scene.
  std::vector<Camera> cams;
  for (int v = 0; v < params.n_views; ++v) {
    const double angle = (v / std::max(1.0, params.n_views - 1.0) - 0.5) * 1.1;
    const double elev = 0.25 + 0.1 * std::sin(angle * 3.0);
    const Vec3 eye(3.2 * std::sin(angle), 3.2 * elev * 0.5, -3.2 * std::cos(angle));
    cams.push_back(look_at(eye, Vec3::Zero(), 52.0, params.width, params.height));
  }

  json manifest;
  manifest["background"] = {0.0, 0.0, 0.0};
  manifest["background_class"] = 0;
  manifest["views"] = json::array();

  RenderOptions opts;
  opts.background = Vec3::Zero();
  for (int v = 0; v < params.n_views; ++v) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%02d", v);
    const RenderOutput full = render(result.gt_scene, cams[v], opts);

    // Label = dominant cluster by per-cluster accumulated alpha.
    RasterGrid labels(params.width, params.height, 1, 0.0);
    std::vector<RasterGrid> cluster_alpha;
    for (int k = 0; k < n_clusters; ++k) {
      Scene sub;
      for (int i = 0; i < params.n_gaussians; ++i)
        if (cluster_of[i] == k) sub.coarse.push_back(result.gt_scene.coarse[i]);
      cluster_alpha.push_back(render(sub, cams[v], opts).alpha_map);
    }
    for (int y = 0; y < params.height; ++y)
      for (int x = 0; x < params.width; ++x) {
        if (full.alpha_map.at(x, y) < 0.5) continue;
        int best = 0;
        double best_a = -1.0;
        for (int k = 0; k < n_clusters; ++k)
          if (cluster_alpha[k].at(x, y) > best_a) {
            best_a = cluster_alpha[k].at(x, y);
            best = k;
          }
        // Backdrop pixels carry full alpha but no cluster evidence; they
        // stay background.
        if (best_a >= 0.5) labels.at(x, y) = best + 1.0;
      }

    RasterGrid stored = full.image;
    if (params.noise_std > 0.0) {
      std::normal_distribution<double> noise(0.0, params.noise_std);
      for (double& px : stored.data)
        px = std::clamp(px + noise(rng), 0.0, 1.0);
    }

    const std::string img = std::string(name) + ".pfm";
    const std::string preview = std::string(name) + ".png";
    const std::string depth = std::string(name) + "_depth.pfm";
    const std::string lab = std::string(name) + "_labels.png";
    write_pfm((fs::path(out_dir) / img).string(), stored);
    write_png((fs::path(out_dir) / preview).string(), stored);
    write_pfm((fs::path(out_dir) / depth).string(), full.depth_map);
    write_png_labels((fs::path(out_dir) / lab).string(), labels);

    // Every 4th view held out; small sets hold out the last one.
    const bool is_test =
        (v + 1) % 4 == 0 || (params.n_views < 4 && v == params.n_views - 1);
    json jv;
    jv["name"] = name;
    jv["image"] = img;
    jv["depth"] = depth;
    jv["labels"] = lab;
    jv["camera"] = camera_to_json(cams[v]);
    jv["split"] = is_test ? "test" : "train";
    manifest["views"].push_back(jv);
  }

  // Degraded init cloud: every k-th cluster Gaussian plus the full backdrop.
  std::vector<Vec3> pts, cols;
  for (int i = 0; i < params.n_gaussians; i += std::max(1, params.init_stride)) {
    pts.push_back(result.gt_scene.coarse[i].mu);
    cols.push_back(result.gt_scene.coarse[i].color);
  }
  for (const Gaussian& g : wall) {
    pts.push_back(g.mu);
    cols.push_back(g.color);
  }
  save_point_cloud((fs::path(out_dir) / "init.ply").string(), pts, cols);
  save_scene((fs::path(out_dir) / "gt_scene.ply").string(), result.gt_scene);
  result.init_scene = load_scene((fs::path(out_dir) / "init.ply").string());

  result.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  std::ofstream mf(result.manifest_path);
  mf << manifest.dump(2) << "\n";
  mf.close();

  result.dataset = load_dataset(result.manifest_path);
  return result;
}

MetricsReport evaluate(const Scene& scene, const Dataset& data) {
  if (data.test_indices.empty())
    throw std::invalid_argument("evaluate: empty test split");
  MetricsReport report;
  RenderOptions opts;
  opts.background = data.background;
  for (int idx : data.test_indices) {
    const DatasetView& v = data.views[idx];
    const RenderOutput out = render(scene, v.camera, opts);
    MetricsReport::PerView pv;
    pv.view_index = idx;
    pv.psnr = psnr(out.image, v.image);
    pv.ssim = ssim(out.image, v.image);
    report.per_view.push_back(pv);
    report.psnr += pv.psnr;
    report.ssim += pv.ssim;
  }
  report.psnr /= report.per_view.size();
  report.ssim /= report.per_view.size();
  return report;
}

}  // namespace hgs
