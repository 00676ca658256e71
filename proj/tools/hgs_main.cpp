// Command-line surface: init, synth, train, render, eval, importance, ablate.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "hgs/dataset.hpp"
#include "hgs/image_io.hpp"
#include "hgs/importance.hpp"
#include "hgs/metrics.hpp"
#include "hgs/ply_io.hpp"
#include "hgs/renderer.hpp"
#include "hgs/sampler.hpp"
#include "hgs/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One option per TrainConfig field; combined with set_config this makes every
// field settable from the TOML config file and overridable by flag.
void add_config_flags(CLI::App* app, hgs::TrainConfig& c) {
  app->add_option("--n-coarse", c.n_coarse, "phase 1 length (iterations)");
  app->add_option("--refine-len", c.refine_len, "phase 2 length");
  app->add_option("--stabilize-len", c.stabilize_len, "phase 3 length");
  app->add_option("--t-base", c.t_base, "base sampling interval");
  app->add_option("--gamma", c.gamma, "sampling interval growth rate");
  app->add_option("--t-protect", c.t_protect, "protection window (iterations)");
  app->add_option("--alpha-minimum", c.alpha_minimum, "protected opacity floor");
  app->add_option("--epsilon-prune", c.epsilon_prune, "opacity pruning threshold");
  app->add_option("--w-render", c.w[0], "fusion weight: rendering residual");
  app->add_option("--w-semantic", c.w[1], "fusion weight: semantic prior");
  app->add_option("--w-geometry", c.w[2], "fusion weight: geometric prior");
  app->add_option("--tau-geometry-pct", c.tau_geometry_pct,
                  "reliability percentile of the geometry map");
  app->add_option("--lambda-curv", c.lambda_curv, "curvature weight");
  app->add_option("--lambda-ssim", c.lambda_ssim, "SSIM loss weight");
  app->add_option("--n-add", c.n_add, "Gaussians added per sampling round");
  app->add_option("--max-fine", c.max_fine, "fine-Gaussian budget");
  app->add_option("--fine-init-scale", c.fine_init_scale,
                  "isotropic scale of new fine Gaussians");
  app->add_option("--alpha-init", c.alpha_init, "initial fine opacity");
  app->add_option("--lr-mu", c.lr_mu, "position learning rate");
  app->add_option("--lr-mu-final", c.lr_mu_final, "final position learning rate");
  app->add_option("--lr-scale", c.lr_scale, "scale learning rate");
  app->add_option("--lr-rotation", c.lr_rotation, "rotation learning rate");
  app->add_option("--lr-opacity", c.lr_opacity, "opacity learning rate");
  app->add_option("--lr-color", c.lr_color, "color learning rate");
  app->add_option("--coarse-appearance-lr-mult", c.coarse_appearance_lr_mult,
                  "coarse opacity/color LR multiplier after phase 1");
  app->add_option_function<std::vector<double>>(
         "--phase-lr-mult",
         [&c](const std::vector<double>& v) {
           for (int i = 0; i < 3; ++i) c.phase_lr_mult[i] = v.at(i);
         },
         "per-phase learning-rate multipliers")
      ->expected(3);
  app->add_option_function<std::vector<double>>(
         "--background",
         [&c](const std::vector<double>& v) {
           c.background = hgs::Vec3(v.at(0), v.at(1), v.at(2));
         },
         "background color as three values in [0,1]")
      ->expected(3);
  app->add_option("--near-clip", c.near_clip, "near clipping plane");
  app->add_option("--seed", c.seed, "RNG seed");
  app->set_config("--config", "", "TOML config mirroring the train settings");
}

void add_flag_toggles(CLI::App* app, hgs::AblationFlags& f) {
  app->add_flag("!--no-hier", f.hier, "disable the fine level");
  app->add_flag("!--no-s-rend", f.s_rend, "drop the residual component");
  app->add_flag("!--no-s-sem", f.s_sem, "drop the semantic component");
  app->add_flag("!--no-s-geo", f.s_geo, "drop the geometric component");
  app->add_flag("!--no-ra", f.ra, "disable the reliability mask");
  app->add_flag("!--no-agp", f.agp, "use top-k instead of sampling");
  app->add_flag("!--no-pm", f.pm, "disable the protection mechanism");
}

int run_train(const std::string& data_path, const std::string& init_path,
              const std::string& out_dir, hgs::TrainConfig config,
              const hgs::AblationFlags& flags) {
  fs::create_directories(out_dir);
  const hgs::Dataset data = hgs::load_dataset(data_path);
  for (const std::string& w : data.warnings) std::cerr << "warning: " << w << "\n";
  const hgs::Scene init = hgs::load_scene(init_path);
  if (config.abort_snapshot_path.empty())
    config.abort_snapshot_path = (fs::path(out_dir) / "abort_snapshot.ply").string();

  const hgs::TrainResult result = hgs::train(init, data, config, flags);
  hgs::write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), result);
  hgs::save_scene((fs::path(out_dir) / "scene.ply").string(), result.scene);

  if (!data.test_indices.empty()) {
    const hgs::MetricsReport report = hgs::evaluate(result.scene, data);
    std::cout << "test PSNR " << report.psnr << " dB, SSIM " << report.ssim << "\n";
  }
  std::cout << "final scene: " << result.scene.coarse.size() << " coarse + "
            << result.scene.fine.size() << " fine Gaussians\n"
            << "sampling rounds: " << result.rounds.size() << "\n"
            << "outputs in " << out_dir << "\n";
  return 0;
}

int run_eval(const std::string& data_path, const std::string& scene_path,
             const std::string& out_path) {
  const hgs::Dataset data = hgs::load_dataset(data_path);
  const hgs::Scene scene = hgs::load_scene(scene_path);
  const hgs::MetricsReport report = hgs::evaluate(scene, data);
  json j;
  j["psnr"] = report.psnr;
  j["ssim"] = report.ssim;
  j["per_view"] = json::array();
  for (const auto& pv : report.per_view)
    j["per_view"].push_back(
        {{"view", pv.view_index}, {"psnr", pv.psnr}, {"ssim", pv.ssim}});
  const std::string text = j.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(out_path);
    out << text << "\n";
    std::cout << "report written to " << out_path << "\n";
  }
  return 0;
}

int run_importance(const std::string& data_path, const std::string& scene_path,
                   int view_idx, const std::string& out_dir, int dump_samples,
                   const hgs::TrainConfig& config) {
  fs::create_directories(out_dir);
  const hgs::Dataset data = hgs::load_dataset(data_path);
  const hgs::Scene scene = hgs::load_scene(scene_path);
  if (view_idx < 0 || view_idx >= static_cast<int>(data.views.size()))
    throw std::runtime_error("view index out of range");
  const hgs::DatasetView& view = data.views[view_idx];

  hgs::RenderOptions opts;
  opts.background = data.background;
  opts.near_clip = config.near_clip;
  const hgs::RenderOutput out = hgs::render(scene, view.camera, opts);

  hgs::ScoreMaps maps;
  maps.s_render = hgs::render_residual(view.image, out.image);
  hgs::minmax_normalize(maps.s_render);
  hgs::PriorInputs priors;
  priors.background_class = data.background_class;
  if (view.has_labels) {
    priors.labels = view.labels;
    maps.s_semantic = hgs::semantic_score(priors);
  } else {
    maps.s_semantic = hgs::RasterGrid(view.image.width, view.image.height, 1);
  }
  if (view.has_depth) {
    priors.depth = view.depth;
    maps.s_geometry = hgs::geometry_score(priors, config.lambda_curv);
  } else {
    maps.s_geometry = hgs::RasterGrid(view.image.width, view.image.height, 1);
  }
  maps.s_importance =
      hgs::fuse(maps.s_render, maps.s_semantic, maps.s_geometry, config.w);
  const double tau = hgs::percentile(maps.s_geometry, config.tau_geometry_pct);
  maps.m_reliable = hgs::reliability_mask(maps.s_geometry, tau);

  auto dump = [&](const char* name, const hgs::RasterGrid& g) {
    hgs::write_pfm((fs::path(out_dir) / (std::string(name) + ".pfm")).string(), g);
    hgs::write_png((fs::path(out_dir) / (std::string(name) + ".png")).string(),
                   hgs::heatmap(g));
  };
  dump("s_render", maps.s_render);
  dump("s_semantic", maps.s_semantic);
  dump("s_geometry", maps.s_geometry);
  dump("s_importance", maps.s_importance);
  dump("m_reliable", maps.m_reliable);

  if (dump_samples > 0) {
    const hgs::SampleDistribution dist =
        hgs::build_distribution(maps.s_importance, maps.m_reliable);
    if (dist.support_size == 0) {
      std::cerr << "warning: empty sampling support, no samples dumped\n";
    } else {
      const auto picks = hgs::draw_pixels(dist, dump_samples, config.seed);
      std::vector<hgs::Vec3> pts, cols;
      for (const auto& p : picks) {
        const double d = out.depth_map.at(p.x, p.y);
        if (!(d > 0.0)) continue;
        pts.push_back(
            hgs::back_project(hgs::Vec2(p.x + 0.5, p.y + 0.5), d, view.camera));
        cols.push_back(hgs::Vec3(view.image.at(p.x, p.y, 0),
                                 view.image.at(p.x, p.y, 1),
                                 view.image.at(p.x, p.y, 2)));
      }
      hgs::save_point_cloud((fs::path(out_dir) / "samples.ply").string(), pts, cols);
      std::cout << pts.size() << " sample points written\n";
    }
  }
  std::cout << "score maps written to " << out_dir << "\n";
  return 0;
}

int run_ablate(const std::string& data_path, const std::string& init_path,
               const std::string& out_path, const hgs::TrainConfig& config,
               int n_seeds) {
  const hgs::Dataset data = hgs::load_dataset(data_path);
  const hgs::Scene init = hgs::load_scene(init_path);

  struct Variant {
    const char* name;
    hgs::AblationFlags flags;
  };
  auto without = [](auto setter) {
    hgs::AblationFlags f;
    setter(f);
    return f;
  };
  const std::vector<Variant> variants = {
      {"full", {}},
      {"no_hier", without([](auto& f) { f.hier = false; })},
      {"no_s_rend", without([](auto& f) { f.s_rend = false; })},
      {"no_s_sem", without([](auto& f) { f.s_sem = false; })},
      {"no_s_geo", without([](auto& f) { f.s_geo = false; })},
      {"no_ra", without([](auto& f) { f.ra = false; })},
      {"no_agp", without([](auto& f) { f.agp = false; })},
      {"no_pm", without([](auto& f) { f.pm = false; })},
  };

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << "variant,seed,psnr,ssim,m_fine\n";
  for (const Variant& v : variants)
    for (int s = 0; s < n_seeds; ++s) {
      hgs::TrainConfig c = config;
      c.seed = config.seed + static_cast<uint64_t>(s);
      const hgs::TrainResult r = hgs::train(init, data, c, v.flags);
      const hgs::MetricsReport m = hgs::evaluate(r.scene, data);
      char line[160];
      std::snprintf(line, sizeof(line), "%s,%llu,%.6f,%.6f,%zu\n", v.name,
                    static_cast<unsigned long long>(c.seed), m.psnr, m.ssim,
                    r.scene.fine.size());
      out << line;
      std::cout << v.name << " seed " << c.seed << ": PSNR " << m.psnr << "\n";
    }
  std::cout << "matrix written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical Gaussian splatting for sparse-view scenes"};
  app.require_subcommand(1);

  std::string data_path, scene_path, init_path, out_path;
  hgs::TrainConfig config;
  hgs::AblationFlags flags;

  auto* init_cmd = app.add_subcommand("init", "point cloud -> coarse scene");
  std::string points_path;
  double default_scale = 0.05, default_alpha = 0.6;
  init_cmd->add_option("--points", points_path, "input PLY point cloud")->required();
  init_cmd->add_option("--out", out_path, "output scene PLY")->required();
  init_cmd->add_option("--default-scale", default_scale, "per-axis scale");
  init_cmd->add_option("--default-alpha", default_alpha, "initial opacity");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  hgs::SyntheticParams sp;
  std::string synth_dir;
  synth_cmd->add_option("--out", synth_dir, "output directory")->required();
  synth_cmd->add_option("--seed", sp.seed, "RNG seed");
  synth_cmd->add_option("--gaussians", sp.n_gaussians, "ground-truth count");
  synth_cmd->add_option("--views", sp.n_views, "number of views");
  synth_cmd->add_option("--width", sp.width, "image width");
  synth_cmd->add_option("--height", sp.height, "image height");
  synth_cmd->add_option("--init-stride", sp.init_stride,
                        "take every k-th Gaussian into the init cloud");

  auto* train_cmd = app.add_subcommand("train", "run the training schedule");
  train_cmd->add_option("--data", data_path, "dataset manifest")->required();
  train_cmd->add_option("--init", init_path, "initial scene/point cloud PLY")->required();
  train_cmd->add_option("--out", out_path, "output directory")->required();
  add_config_flags(train_cmd, config);
  add_flag_toggles(train_cmd, flags);

  auto* render_cmd = app.add_subcommand("render", "render one view to PNG");
  int view_idx = 0;
  render_cmd->add_option("--data", data_path, "dataset manifest")->required();
  render_cmd->add_option("--scene", scene_path, "scene PLY")->required();
  render_cmd->add_option("--view", view_idx, "view index")->required();
  render_cmd->add_option("--out", out_path, "output PNG")->required();

  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM on the test split");
  eval_cmd->add_option("--data", data_path, "dataset manifest")->required();
  eval_cmd->add_option("--scene", scene_path, "scene PLY")->required();
  eval_cmd->add_option("--out", out_path, "report JSON (stdout when omitted)");

  auto* imp_cmd = app.add_subcommand("importance", "dump score maps");
  int dump_samples = 0;
  imp_cmd->add_option("--data", data_path, "dataset manifest")->required();
  imp_cmd->add_option("--scene", scene_path, "scene PLY")->required();
  imp_cmd->add_option("--view", view_idx, "view index")->required();
  imp_cmd->add_option("--out", out_path, "output directory")->required();
  imp_cmd->add_option("--dump-samples", dump_samples,
                      "also draw N pixels and dump them as a point cloud");
  add_config_flags(imp_cmd, config);

  auto* ablate_cmd = app.add_subcommand("ablate", "run the flag matrix");
  int n_seeds = 3;
  ablate_cmd->add_option("--data", data_path, "dataset manifest")->required();
  ablate_cmd->add_option("--init", init_path, "initial scene PLY")->required();
  ablate_cmd->add_option("--out", out_path, "output CSV")->required();
  ablate_cmd->add_option("--seeds", n_seeds, "seeds per variant");
  add_config_flags(ablate_cmd, config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (init_cmd->parsed()) {
      const hgs::Scene scene =
          hgs::load_scene(points_path, default_scale, default_alpha);
      hgs::save_scene(out_path, scene);
      std::cout << scene.coarse.size() << " coarse Gaussians written to "
                << out_path << "\n";
      return 0;
    }
    if (synth_cmd->parsed()) {
      const hgs::SyntheticResult r = hgs::make_synthetic(sp, synth_dir);
      std::cout << "dataset written to " << synth_dir << " ("
                << r.dataset.train_indices.size() << " train / "
                << r.dataset.test_indices.size() << " test views)\n";
      return 0;
    }
    if (train_cmd->parsed())
      return run_train(data_path, init_path, out_path, config, flags);
    if (render_cmd->parsed()) {
      const hgs::Dataset data = hgs::load_dataset(data_path);
      const hgs::Scene scene = hgs::load_scene(scene_path);
      if (view_idx < 0 || view_idx >= static_cast<int>(data.views.size()))
        throw std::runtime_error("view index out of range");
      hgs::RenderOptions opts;
      opts.background = data.background;
      const hgs::RenderOutput out =
          hgs::render(scene, data.views[view_idx].camera, opts);
      hgs::write_png(out_path, out.image);
      std::cout << "rendered view " << view_idx << " to " << out_path << "\n";
      return 0;
    }
    if (eval_cmd->parsed()) return run_eval(data_path, scene_path, out_path);
    if (imp_cmd->parsed())
      return run_importance(data_path, scene_path, view_idx, out_path,
                            dump_samples, config);
    if (ablate_cmd->parsed())
      return run_ablate(data_path, init_path, out_path, config, n_seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
