#include "hgs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hgs/loss.hpp"
#include "hgs/metrics.hpp"
#include "hgs/optimizer.hpp"
#include "hgs/ply_io.hpp"
#include "hgs/renderer.hpp"

namespace hgs {
namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct RoundOutcome {
  int support_size = 0;
  int drawn = 0;
  int spawned = 0;
  int pruned = 0;
  bool truncated = false;
};

}  // namespace

PhasePlan PhasePlan::from_config(const TrainConfig& c) {
  PhasePlan p;
  p.coarse_end = c.n_coarse;
  p.refine_end = c.n_coarse + c.refine_len;
  p.total_end = p.refine_end + c.stabilize_len;
  for (int i = 0; i < 3; ++i) p.lr_mult[i] = c.phase_lr_mult[i];
  return p;
}

int next_sample_iter(int last_sample_iter, int t, int t_base, double gamma) {
  const int interval =
      static_cast<int>(std::lround(t_base * (1.0 + gamma * t)));
  return last_sample_iter + interval;
}

Vec3 ablated_weights(const Vec3& w, const AblationFlags& flags) {
  Vec3 out = w;
  if (!flags.s_rend) out[0] = 0.0;
  if (!flags.s_sem) out[1] = 0.0;
  if (!flags.s_geo) out[2] = 0.0;
  const double kept = out.sum();
  if (kept > 0.0 && kept != w.sum()) out *= w.sum() / kept;
  return out;
}

namespace {

// One importance-driven sampling round: render, prune, score, draw, spawn.
RoundOutcome sampling_round(Scene& scene, RetentionLedger& ledger,
                            AdamOptimizer& adam_fine, const DatasetView& view,
                            const Dataset& data, const TrainConfig& cfg,
                            const AblationFlags& flags, int iter,
                            const RenderOptions& ropts, TrainResult& result) {
  RoundOutcome outcome;
  const RenderOutput snap = render(scene, view.camera, ropts);

  // Prune first so freed budget is available to this round's spawns.
  {
    std::vector<LedgerEntry> before = ledger.entries;
    // Audit against the pre-prune ledger: a removal whose window is still
    // open is a protection violation.
    std::vector<uint64_t> removed =
        prune(scene, ledger, iter, cfg.epsilon_prune, cfg.alpha_minimum);
    for (uint64_t serial : removed)
      for (const LedgerEntry& e : before)
        if (e.serial == serial && iter < e.protected_until)
          ++result.prune_violations;
    if (!removed.empty()) {
      // Optimizer rows follow the fine list; recompute removed indices.
      std::vector<size_t> gone;
      size_t cursor = 0;
      for (size_t i = 0; i < before.size(); ++i) {
        if (cursor < ledger.entries.size() &&
            ledger.entries[cursor].serial == before[i].serial) {
          ++cursor;
        } else {
          gone.push_back(i);
        }
      }
      adam_fine.remove_rows(gone);
    }
    outcome.pruned = static_cast<int>(removed.size());
  }

  // Component maps. The geometry map also feeds the reliability mask, so it
  // is computed regardless of the s_geo fusion toggle.
  ScoreMaps maps;
  maps.s_render = render_residual(view.image, snap.image);
  minmax_normalize(maps.s_render);
  PriorInputs priors;
  priors.background_class = data.background_class;
  if (view.has_labels) {
    priors.labels = view.labels;
    maps.s_semantic = semantic_score(priors);
  } else {
    maps.s_semantic = RasterGrid(view.image.width, view.image.height, 1, 0.0);
  }
  if (view.has_depth) {
    priors.depth = view.depth;
    maps.s_geometry = geometry_score(priors, cfg.lambda_curv);
  } else {
    maps.s_geometry = RasterGrid(view.image.width, view.image.height, 1, 0.0);
  }
  const Vec3 w = ablated_weights(cfg.w, flags);
  maps.s_importance = fuse(maps.s_render, maps.s_semantic, maps.s_geometry, w);
  if (flags.ra) {
    const double tau = percentile(maps.s_geometry, cfg.tau_geometry_pct);
    maps.m_reliable = reliability_mask(maps.s_geometry, tau);
  } else {
    maps.m_reliable = RasterGrid(view.image.width, view.image.height, 1, 1.0);
  }

  const SampleDistribution dist =
      build_distribution(maps.s_importance, maps.m_reliable);
  outcome.support_size = dist.support_size;
  if (dist.support_size == 0) return outcome;

  // Draw with a 4x retry budget; duplicates and depth-invalid pixels are
  // skipped.
  const int budget = 4 * cfg.n_add;
  std::vector<PixelCoord> picks;
  if (flags.agp) {
    const uint64_t round_seed = splitmix64(cfg.seed ^ (0x9E3779B97F4A7C15ULL *
                                                       (static_cast<uint64_t>(iter) + 1)));
    picks = draw_pixels(dist, budget, round_seed);
  } else {
    picks = top_k_pixels(dist, budget);
  }

  std::vector<uint8_t> used(static_cast<size_t>(view.image.width) *
                                view.image.height,
                            0);
  for (const PixelCoord& p : picks) {
    if (outcome.spawned >= cfg.n_add) break;
    ++outcome.drawn;
    const size_t flat = static_cast<size_t>(p.y) * view.image.width + p.x;
    if (used[flat]) continue;
    used[flat] = 1;
    const double d = snap.depth_map.at(p.x, p.y);
    if (!(d > 0.0)) continue;  // depth-invalid; try the next draw
    if (static_cast<int>(scene.fine.size()) >= cfg.max_fine) {
      outcome.truncated = true;
      break;
    }
    TrainConfig spawn_cfg = cfg;
    if (!flags.pm) spawn_cfg.t_protect = 0;
    const Vec3 p_w =
        back_project(Vec2(p.x + 0.5, p.y + 0.5), d, view.camera);
    scene.fine.push_back(
        spawn_fine(p_w, p, view.image, spawn_cfg, iter, ledger));
    ++outcome.spawned;
  }
  adam_fine.resize(scene.fine.size());
  return outcome;
}

}  // namespace

TrainResult train(const Scene& scene_init, const Dataset& data,
                  const TrainConfig& config, const AblationFlags& flags) {
  std::string why;
  if (!config_valid(config, &why))
    throw std::invalid_argument("train: bad config: " + why);
  if (data.train_indices.size() < 2)
    throw std::invalid_argument("train: need at least 2 training views");
  if (scene_init.coarse.empty())
    throw std::invalid_argument("train: empty coarse initialization");

  const PhasePlan plan = PhasePlan::from_config(config);
  if (!plan.valid()) throw std::invalid_argument("train: degenerate phase plan");

  TrainResult result;
  result.scene = scene_init;
  for (Gaussian& g : result.scene.coarse) g.level = Level::Coarse;
  // Pre-existing fine Gaussians (checkpoint resume) get expired windows.
  for (Gaussian& g : result.scene.fine)
    result.ledger.entries.push_back(
        {result.ledger.next_serial++, g.birth_iter, g.birth_iter});

  AdamOptimizer adam_coarse, adam_fine;
  adam_coarse.resize(result.scene.coarse.size());
  adam_fine.resize(result.scene.fine.size());

  RenderOptions ropts;
  ropts.background = config.background;
  ropts.near_clip = config.near_clip;

  int next_sample = plan.coarse_end;
  std::vector<double> alpha_override;

  for (int iter = 0; iter < plan.total_end; ++iter) {
    const int phase = plan.phase_of(iter);
    const DatasetView& view =
        data.views[data.train_indices[iter % data.train_indices.size()]];

    IterationLog log;
    log.iter = iter;

    if (phase == 1 && flags.hier && iter == next_sample) {
      const RoundOutcome r =
          sampling_round(result.scene, result.ledger, adam_fine, view, data,
                         config, flags, iter, ropts, result);
      const int interval = next_sample_iter(0, iter, config.t_base, config.gamma);
      next_sample = iter + interval;
      result.rounds.push_back({iter, interval, r.support_size, r.drawn,
                               r.spawned, r.pruned, r.truncated});
      log.spawned = r.spawned;
      log.pruned = r.pruned;
    }

    // Protection floor on rendered opacity, audited as it is built.
    const int t_protect_eff = flags.pm ? config.t_protect : 0;
    bool any_protected = false;
    if (t_protect_eff > 0)
      for (const LedgerEntry& e : result.ledger.entries)
        if (iter < e.protected_until) {
          any_protected = true;
          break;
        }
    RenderOptions step_opts = ropts;
    if (any_protected) {
      alpha_override.assign(result.scene.size(), 0.0);
      const size_t n_coarse = result.scene.coarse.size();
      for (size_t i = 0; i < n_coarse; ++i)
        alpha_override[i] = result.scene.coarse[i].alpha();
      for (size_t i = 0; i < result.scene.fine.size(); ++i) {
        const double eff =
            effective_opacity(result.scene.fine[i], result.ledger.entries[i],
                              iter, config.alpha_minimum);
        alpha_override[n_coarse + i] = eff;
        if (iter < result.ledger.entries[i].protected_until &&
            eff < config.alpha_minimum)
          ++result.render_floor_violations;
      }
      step_opts.alpha_override = alpha_override;
    }

    const RenderOutput out = render(result.scene, view.camera, step_opts);
    const LossResult loss =
        photometric_loss(out.image, view.image, config.lambda_ssim);
    if (!std::isfinite(loss.value)) {
      if (!config.abort_snapshot_path.empty())
        save_scene(config.abort_snapshot_path, result.scene);
      throw TrainAbortError(
          "non-finite loss at iteration " + std::to_string(iter) +
          (config.abort_snapshot_path.empty()
               ? ""
               : "; scene snapshot written to " + config.abort_snapshot_path));
    }

    const SceneGradients grads =
        render_backward(result.scene, view.camera, loss.dL_dimage, step_opts);

    const double mult = plan.lr_mult[phase];
    GroupLearningRates lr_coarse;
    lr_coarse.mu = phase == 0 ? decayed_lr(config.lr_mu, config.lr_mu_final,
                                           iter, plan.total_end) *
                                    mult
                              : 0.0;
    lr_coarse.scale = phase == 0 ? config.lr_scale * mult : 0.0;
    lr_coarse.rotation = phase == 0 ? config.lr_rotation * mult : 0.0;
    const double app_mult =
        phase == 0 ? 1.0 : config.coarse_appearance_lr_mult;
    lr_coarse.opacity = config.lr_opacity * mult * app_mult;
    lr_coarse.color = config.lr_color * mult * app_mult;
    adam_coarse.step(result.scene.coarse, grads, 0, lr_coarse);

    if (!result.scene.fine.empty()) {
      GroupLearningRates lr_fine;
      lr_fine.mu =
          decayed_lr(config.lr_mu, config.lr_mu_final, iter, plan.total_end) *
          mult;
      lr_fine.scale = config.lr_scale * mult;
      lr_fine.rotation = config.lr_rotation * mult;
      lr_fine.opacity = config.lr_opacity * mult;
      lr_fine.color = config.lr_color * mult;
      adam_fine.step(result.scene.fine, grads, result.scene.coarse.size(),
                     lr_fine);
    }

    log.loss = loss.value;
    log.psnr_train = psnr(out.image, view.image);
    log.m_c = static_cast<int>(result.scene.coarse.size());
    log.m_f = static_cast<int>(result.scene.fine.size());
    result.iters.push_back(log);
  }
  return result;
}

void write_metrics_csv(const std::string& path, const TrainResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "iter,loss,psnr_train,m_c,m_f,spawned,pruned\n";
  char line[256];
  for (const IterationLog& l : result.iters) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%d,%d,%d,%d\n", l.iter,
                  l.loss, l.psnr_train, l.m_c, l.m_f, l.spawned, l.pruned);
    out << line;
  }
}

}  // namespace hgs
