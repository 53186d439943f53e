#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bird/config.hpp"
#include "bird/degrade.hpp"
#include "bird/denoiser.hpp"
#include "bird/evalmetrics.hpp"
#include "bird/features.hpp"
#include "bird/image.hpp"
#include "bird/io.hpp"
#include "bird/optimizer.hpp"
#include "bird/schedule.hpp"

namespace bird {

// Training pools. The family-B HR images never appear here: the trainer gets
// family-B data as LR only, the hidden HR lives in EvalData. Read counters
// back the branch-isolation checks.
struct TrainData {
  std::vector<Image> hr_a;  // family-A HR pool (paired branch)
  std::vector<Image> lr_b;  // family-B LR pool (unpaired branch)
  mutable int64_t hr_a_reads = 0;
  mutable int64_t lr_b_reads = 0;

  const std::vector<Image>& hr_pool() const {
    hr_a_reads += static_cast<int64_t>(hr_a.size());
    return hr_a;
  }
  const std::vector<Image>& lr_pool() const {
    lr_b_reads += static_cast<int64_t>(lr_b.size());
    return lr_b;
  }
};

// Held-out family-B pairs; the HR here is used for metrics only.
struct EvalData {
  std::vector<Image> lr;
  std::vector<Image> hr;
};

// Deterministic corpora derived from the config: one generated corpus split
// into disjoint index ranges for family A, family B and eval.
void build_datasets(const TrainingConfig& cfg, TrainData* train,
                    EvalData* eval);

struct RunRecord {
  int64_t iter = 0;
  char branch = 'F';  // 'F' forward, 'R' reverse
  int t_sampled = -1;
  double lambda_t = 0;
  double l_pair = 0, l_struct = 0, l_forward = 0;
  double l_unpair = 0, l_sem = 0, l_reverse = 0;
  double mean_reward = 0;
};

struct EvalRecord {
  int64_t iter = 0;
  double psnr = 0, ssim = 0, struct_loss = 0, reward = 0;
};

struct RunLog {
  std::vector<RunRecord> records;
  std::vector<EvalRecord> evals;
  void write_csv(const std::string& runlog_path,
                 const std::string& eval_path) const;
};

struct StepLosses {
  int t_sampled = -1;
  double lambda_t = 0;
  double l_pair = 0, l_struct = 0, l_forward = 0;
  double l_unpair = 0, l_sem = 0, l_reverse = 0;
  double mean_reward = 0;
};

// One gradient update on a paired family-A batch (Algorithm lines 2-9):
// noise injection at a sampled t, closed-form x0 prediction, relative-reward
// pair loss and structural loss mixed by lambda(t).
StepLosses forward_branch_step(DenoiserParams& params, AdamState& opt,
                               const PairedBatch& batch,
                               const TrainingConfig& cfg,
                               const NoiseSchedule& sched,
                               const FrozenFeatures& feats,
                               const RewardFn& reward_fn, int64_t iter);

// One gradient update on an unpaired LR batch (Algorithm lines 10-19):
// full reverse rollout, last-step reward feedback plus semantic alignment
// against the frozen reference rollout sharing the same noise seeds.
StepLosses reverse_branch_step(DenoiserParams& params, AdamState& opt,
                               const ReferenceParams& ref,
                               const UnpairedBatch& batch,
                               const TrainingConfig& cfg,
                               const NoiseSchedule& sched,
                               const FrozenFeatures& feats,
                               const RewardFn& reward_fn, int64_t iter);

struct TrainResult {
  DenoiserParams params;
  ReferenceParams reference;
  FrozenFeatures feats;
  AdamState opt;
  RunLog log;
  double wall_seconds = 0;
  EvalRecord final_eval;
  // Pool read counters, for the branch-isolation checks.
  int64_t hr_a_reads = 0;
  int64_t lr_b_reads = 0;
};

// Runs the configured variant end to end. If out_dir is nonempty, writes the
// run manifest (before the first gradient step), periodic checkpoints,
// final.bird, runlog.csv and eval.csv there. resume_from, when nonempty,
// must be a checkpoint written by the same config; training continues at
// its iteration and reproduces the uninterrupted run bitwise.
TrainResult train(const TrainingConfig& cfg, const std::string& out_dir = "",
                  const std::string& resume_from = "");

// The manifest key set is part of the artifact's reproducibility contract.
KvFile make_run_manifest(const TrainingConfig& cfg, const TrainData& data,
                         const NoiseSchedule& sched, uint64_t feat_seed);

}  // namespace bird
