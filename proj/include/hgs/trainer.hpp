#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hgs/core_types.hpp"
#include "hgs/dataset.hpp"
#include "hgs/importance.hpp"
#include "hgs/sampler.hpp"

namespace hgs {

// Phase boundaries: [0, coarse_end) coarse init, [coarse_end, refine_end)
// hierarchical refinement, [refine_end, total_end) stabilization.
struct PhasePlan {
  int coarse_end = 0;
  int refine_end = 0;
  int total_end = 0;
  double lr_mult[3] = {1.0, 1.0, 1.0};

  static PhasePlan from_config(const TrainConfig& c);
  int phase_of(int iter) const {
    return iter < coarse_end ? 0 : iter < refine_end ? 1 : 2;
  }
  bool valid() const {
    return 0 < coarse_end && coarse_end < refine_end && refine_end < total_end;
  }
};

// Table-style component toggles.
struct AblationFlags {
  bool hier = true;    // hierarchical fine level at all
  bool s_rend = true;  // rendering-residual component
  bool s_sem = true;   // semantic component
  bool s_geo = true;   // geometric component
  bool ra = true;      // reliability assessment mask
  bool agp = true;     // probabilistic placement (off = top-k)
  bool pm = true;      // protection mechanism
};

struct IterationLog {
  int iter = 0;
  double loss = 0.0;
  double psnr_train = 0.0;
  int m_c = 0;
  int m_f = 0;
  int spawned = 0;
  int pruned = 0;
};

struct SampleRoundLog {
  int iter = 0;       // iteration the round fired at
  int interval = 0;   // schedule step that produced the next round
  int support_size = 0;
  int drawn = 0;      // raw draws consumed (before dedup / validity checks)
  int spawned = 0;
  int pruned = 0;
  bool truncated_by_budget = false;
};

struct TrainResult {
  Scene scene;
  RetentionLedger ledger;
  std::vector<IterationLog> iters;
  std::vector<SampleRoundLog> rounds;
  // Audit counters; both stay zero on a healthy run.
  long prune_violations = 0;        // removals before protected_until
  long render_floor_violations = 0; // protected splat below alpha_minimum
};

class TrainAbortError : public std::runtime_error {
 public:
  explicit TrainAbortError(const std::string& what) : std::runtime_error(what) {}
};

// Iteration gap until the next sampling round when the last one fired at
// iteration t: last_sample_iter + round(t_base * (1 + gamma * t)).
int next_sample_iter(int last_sample_iter, int t, int t_base, double gamma);

// Fusion weights after ablation: disabled components zeroed, the rest
// renormalized to the original total.
Vec3 ablated_weights(const Vec3& w, const AblationFlags& flags);

// Runs the three-phase schedule. Deterministic for fixed inputs and seed.
// Throws TrainAbortError on a non-finite loss (after writing the snapshot
// configured in TrainConfig::abort_snapshot_path).
TrainResult train(const Scene& scene_init, const Dataset& data,
                  const TrainConfig& config, const AblationFlags& flags = {});

// Metrics log as CSV: iter,loss,psnr_train,m_c,m_f,spawned,pruned.
void write_metrics_csv(const std::string& path, const TrainResult& result);

}  // namespace hgs
