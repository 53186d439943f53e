#include "bird/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "bird/diffusion.hpp"
#include "bird/rng.hpp"

namespace bird {

namespace {
// Seed stream tags; every random draw of a run is keyed by
// (cfg.seed, tag, iter, item), so resuming at any iteration is exact.
constexpr uint64_t kTagCorpusGen = 0x636f7270;   // corpus generation
constexpr uint64_t kTagLrB = 0x6c7262;           // family-B LR pool
constexpr uint64_t kTagLrEval = 0x6c7265;        // eval LR pairs
constexpr uint64_t kTagInit = 0x696e6974;        // denoiser init
constexpr uint64_t kTagFeat = 0x66656174;        // frozen features
constexpr uint64_t kTagFwdT = 0x664154;          // forward-branch t draw
constexpr uint64_t kTagFwdEps = 0x664570;        // forward-branch eps
constexpr uint64_t kTagFwdBatch = 0x664261;      // forward-branch batch
constexpr uint64_t kTagRevBatchB = 0x724262;     // reverse-branch batch (B)
constexpr uint64_t kTagRevBatchA = 0x724261;     // reverse-branch batch (A)
constexpr uint64_t kTagRevEps = 0x724570;        // reverse rollout seeds
constexpr uint64_t kTagEval = 0x6576616c;        // eval sampling
}  // namespace

void adam_update(DenoiserParams& params, const std::vector<Tensor>& grads,
                 AdamState& state, const AdamConfig& cfg) {
  auto named = params.named();
  check(grads.size() == named.size(), "adam_update: grads/params mismatch");
  if (state.m.empty()) {
    for (auto& [name, t] : named) {
      (void)name;
      state.m.push_back(Tensor::zeros(t->shape));
      state.v.push_back(Tensor::zeros(t->shape));
    }
  }
  for (size_t i = 0; i < named.size(); ++i) {
    check(grads[i].same_shape(*named[i].second),
          "adam_update: grad shape mismatch for " + named[i].first);
    if (!grads[i].all_finite())
      throw std::runtime_error("adam_update: non-finite gradient in " +
                               named[i].first);
  }
  state.step += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t i = 0; i < named.size(); ++i) {
    Tensor& p = *named[i].second;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& g = grads[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double mhat = mj / corr1;
      const double vhat = vj / corr2;
      p[j] = static_cast<float>(p[j] - cfg.lr * mhat /
                                            (std::sqrt(vhat) + cfg.eps));
    }
  }
}

void build_datasets(const TrainingConfig& cfg, TrainData* train,
                    EvalData* eval) {
  const int total = cfg.corpus_a_n + cfg.corpus_b_n + cfg.eval_n;
  const std::vector<Image> corpus =
      gen_corpus(total, cfg.hr_size, derive_seed(cfg.seed, kTagCorpusGen, 0));
  const DegradationConfig cfg_b = default_family_b(0);

  train->hr_a.assign(corpus.begin(), corpus.begin() + cfg.corpus_a_n);
  train->lr_b.clear();
  for (int i = 0; i < cfg.corpus_b_n; ++i) {
    DegradationConfig c = cfg_b;
    c.scale = cfg.scale;
    c.seed = derive_seed(cfg.seed, kTagLrB, static_cast<uint64_t>(i));
    train->lr_b.push_back(
        degrade(corpus[static_cast<size_t>(cfg.corpus_a_n + i)], c));
  }
  eval->lr.clear();
  eval->hr.clear();
  for (int i = 0; i < cfg.eval_n; ++i) {
    const Image& hr =
        corpus[static_cast<size_t>(cfg.corpus_a_n + cfg.corpus_b_n + i)];
    DegradationConfig c = cfg_b;
    c.scale = cfg.scale;
    c.seed = derive_seed(cfg.seed, kTagLrEval, static_cast<uint64_t>(i));
    eval->lr.push_back(degrade(hr, c));
    eval->hr.push_back(hr);
  }
}

namespace {
double as_logged(float v) { return static_cast<double>(v); }

std::vector<Tensor> collect_grads(Tape& tape, const DenoiserNodeIds<float>& ids) {
  return {tape.grad_or_zeros(ids.w_in),  tape.grad_or_zeros(ids.b_in),
          tape.grad_or_zeros(ids.w_h1),  tape.grad_or_zeros(ids.b_h1),
          tape.grad_or_zeros(ids.w_h2),  tape.grad_or_zeros(ids.b_h2),
          tape.grad_or_zeros(ids.w_out), tape.grad_or_zeros(ids.b_out)};
}

// Mean of per-item scalar nodes, accumulated in ascending item order.
Tape::Id mean_of(Tape& tape, const std::vector<Tape::Id>& items) {
  Tape::Id acc = items[0];
  for (size_t i = 1; i < items.size(); ++i) acc = tape.add(acc, items[i]);
  return tape.scale(acc, 1.0f / static_cast<float>(items.size()));
}
}  // namespace

StepLosses forward_branch_step(DenoiserParams& params, AdamState& opt,
                               const PairedBatch& batch,
                               const TrainingConfig& cfg,
                               const NoiseSchedule& sched,
                               const FrozenFeatures& feats,
                               const RewardFn& reward_fn, int64_t iter) {
  check(!batch.items.empty(), "forward_branch_step: empty batch");
  const bool shift = sched.variant == NoiseSchedule::Variant::shift;

  Rng t_rng(derive_seed(cfg.seed, kTagFwdT, static_cast<uint64_t>(iter)));
  // t=T is degenerate for the shift variant (alpha_T = 0).
  const int t_max = shift ? cfg.T - 1 : cfg.T;
  const int t = t_rng.uniform_int(1, t_max);
  const double lambda = lambda_weight(t, cfg.make_weight_schedule());

  Tape tape;
  const auto ids = register_params(tape, params, true);
  std::vector<Tape::Id> pair_items, struct_items;
  double reward_acc = 0;
  for (size_t i = 0; i < batch.items.size(); ++i) {
    const Tensor x0 = batch.items[i].hr.to_tensor();
    const Tensor y = batch.items[i].lr.to_tensor();
    const Tensor y_up = upsample_condition(y, cfg.scale);
    Rng eps_rng(derive_seed(cfg.seed, kTagFwdEps,
                            static_cast<uint64_t>(iter), i));
    const Tensor eps = random_normal<float>(x0.shape, eps_rng);
    const Tensor x_t = add_noise(x0, t, eps, sched, shift ? &y_up : nullptr);

    const auto x_t_id = tape.constant(x_t);
    const auto y_up_id = tape.constant(y_up);
    const auto eps_hat =
        denoiser_forward_tape(tape, ids, params.cfg, x_t_id, y_up_id, t);
    const auto x0_hat = predict_x0_tape(tape, x_t_id, t, eps_hat, sched,
                                        shift ? y_up_id : -1);
    pair_items.push_back(pair_loss(tape, x0, x0_hat, reward_fn));
    struct_items.push_back(
        struct_loss_tape(tape, feats, x0_hat, x0,
                         static_cast<float>(cfg.feat_weight)));
    reward_acc += reward_value(tape.value(x0_hat), reward_fn);
  }
  const auto l_pair = mean_of(tape, pair_items);
  const auto l_struct = mean_of(tape, struct_items);
  const auto l_forward =
      tape.add(tape.scale(l_pair, static_cast<float>(lambda * cfg.reward_weight)),
               tape.scale(l_struct, static_cast<float>(1.0 - lambda)));
  if (!std::isfinite(as_logged(tape.value(l_forward).item())))
    throw std::runtime_error("forward branch: non-finite loss at iter " +
                             std::to_string(iter));
  tape.backward(l_forward);
  adam_update(params, collect_grads(tape, ids), opt, AdamConfig{cfg.lr});

  StepLosses out;
  out.t_sampled = t;
  out.lambda_t = lambda;
  out.l_pair = as_logged(tape.value(l_pair).item());
  out.l_struct = as_logged(tape.value(l_struct).item());
  out.l_forward = as_logged(tape.value(l_forward).item());
  out.mean_reward = reward_acc / static_cast<double>(batch.items.size());
  return out;
}

StepLosses reverse_branch_step(DenoiserParams& params, AdamState& opt,
                               const ReferenceParams& ref,
                               const UnpairedBatch& batch,
                               const TrainingConfig& cfg,
                               const NoiseSchedule& sched,
                               const FrozenFeatures& feats,
                               const RewardFn& reward_fn, int64_t iter) {
  check(!batch.lr.empty(), "reverse_branch_step: empty batch");
  Tape tape;
  const auto ids = register_params(tape, params, true);
  std::vector<Tape::Id> unpair_items, sem_items;
  double reward_acc = 0;
  for (size_t i = 0; i < batch.lr.size(); ++i) {
    const Tensor y = batch.lr[i].to_tensor();
    const uint64_t eps_seed =
        derive_seed(cfg.seed, kTagRevEps, static_cast<uint64_t>(iter), i);
    const auto sample = sample_with_last_step_grad(tape, ids, params, y, sched,
                                                   eps_seed);
    // Same seeds for the reference rollout: at iteration 0 the two
    // trajectories coincide bitwise and the alignment loss is exactly zero.
    const Tensor x_ref = reference_rollout(ref.params, y, sched, eps_seed);
    unpair_items.push_back(unpair_loss(tape, sample.x0_final, reward_fn,
                                       static_cast<float>(cfg.tau)));
    sem_items.push_back(sem_align_loss(tape, feats, sample.x0_final, x_ref));
    reward_acc += reward_value(tape.value(sample.x0_final), reward_fn);
  }
  const auto l_unpair = mean_of(tape, unpair_items);
  const auto l_sem = mean_of(tape, sem_items);
  const auto l_reverse =
      tape.add(l_unpair, tape.scale(l_sem, static_cast<float>(cfg.lambda_sem)));
  if (!std::isfinite(as_logged(tape.value(l_reverse).item())))
    throw std::runtime_error("reverse branch: non-finite loss at iter " +
                             std::to_string(iter));
  tape.backward(l_reverse);
  adam_update(params, collect_grads(tape, ids), opt, AdamConfig{cfg.lr});

  StepLosses out;
  out.t_sampled = 1;  // reward feedback always targets the last step
  out.lambda_t = 0;
  out.l_unpair = as_logged(tape.value(l_unpair).item());
  out.l_sem = as_logged(tape.value(l_sem).item());
  out.l_reverse = as_logged(tape.value(l_reverse).item());
  out.mean_reward = reward_acc / static_cast<double>(batch.lr.size());
  return out;
}

void RunLog::write_csv(const std::string& runlog_path,
                       const std::string& eval_path) const {
  std::ostringstream out;
  out << "iter,branch,t_sampled,lambda_t,l_pair,l_struct,l_forward,"
         "l_unpair,l_sem,l_reverse,mean_reward\n";
  char buf[360];
  for (const RunRecord& r : records) {
    if (r.branch == 'F') {
      std::snprintf(buf, sizeof(buf),
                    "%lld,forward,%d,%.9e,%.9e,%.9e,%.9e,,,,%.9e\n",
                    static_cast<long long>(r.iter), r.t_sampled, r.lambda_t,
                    r.l_pair, r.l_struct, r.l_forward, r.mean_reward);
    } else {
      std::snprintf(buf, sizeof(buf),
                    "%lld,reverse,%d,,,,,%.9e,%.9e,%.9e,%.9e\n",
                    static_cast<long long>(r.iter), r.t_sampled, r.l_unpair,
                    r.l_sem, r.l_reverse, r.mean_reward);
    }
    out << buf;
  }
  write_text_file_atomic(runlog_path, out.str());

  std::ostringstream ev;
  ev << "iter,psnr,ssim,struct_loss,reward\n";
  for (const EvalRecord& r : evals) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9e,%.9e,%.9e,%.9e\n",
                  static_cast<long long>(r.iter), r.psnr, r.ssim,
                  r.struct_loss, r.reward);
    ev << buf;
  }
  write_text_file_atomic(eval_path, ev.str());
}

KvFile make_run_manifest(const TrainingConfig& cfg, const TrainData& data,
                         const NoiseSchedule& sched, uint64_t feat_seed) {
  KvFile kv = cfg.to_kv();
  kv.set("code_version", "birdsr-1.0.0");
  kv.set_u64("feat_seed", feat_seed);
  auto join = [](const std::vector<double>& v) {
    std::string s;
    char buf[40];
    for (size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
      if (i) s += ",";
      s += buf;
    }
    return s;
  };
  kv.set("schedule_alpha", join(sched.alpha));
  kv.set("schedule_sigma", join(sched.sigma));
  if (!sched.beta.empty()) kv.set("schedule_beta", join(sched.beta));
  uint32_t crc_a = 0, crc_b = 0;
  for (const Image& img : data.hr_a) crc_a = crc32_of_floats(img.pixels, crc_a);
  for (const Image& img : data.lr_b) crc_b = crc32_of_floats(img.pixels, crc_b);
  kv.set_u64("corpus_a_crc32", crc_a);
  kv.set_u64("corpus_b_crc32", crc_b);
  return kv;
}

TrainResult train(const TrainingConfig& cfg, const std::string& out_dir,
                  const std::string& resume_from) {
  cfg.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  TrainData data;
  EvalData eval_data;
  build_datasets(cfg, &data, &eval_data);

  const NoiseSchedule sched = cfg.make_schedule();
  const RewardFn reward_fn = cfg.make_reward_fn();
  const uint64_t feat_seed = derive_seed(cfg.seed, kTagFeat, 0);

  TrainResult result;
  DenoiserConfig dcfg;
  dcfg.hidden_width = cfg.hidden_width;
  dcfg.scale = cfg.scale;
  result.params = init_params(derive_seed(cfg.seed, kTagInit, 0), dcfg);
  result.reference = snapshot_reference(result.params);
  result.feats = make_frozen_features(feat_seed);

  int64_t start_iter = 1;
  if (!resume_from.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_from);
    check(ckpt.params.cfg.hidden_width == cfg.hidden_width &&
              ckpt.params.cfg.scale == cfg.scale,
          "resume: checkpoint architecture differs from config");
    result.params = ckpt.params;
    result.opt = ckpt.opt;
    result.feats = ckpt.feats;
    start_iter = ckpt.iteration + 1;
  }

  const bool has_out = !out_dir.empty();
  if (has_out) {
    ensure_directory(out_dir);
    write_text_file_atomic(
        out_dir + "/manifest.txt",
        make_run_manifest(cfg, data, sched, feat_seed).serialize());
  }

  const DegradationConfig cfg_a_base = [&] {
    DegradationConfig c = default_family_a(0);
    c.scale = cfg.scale;
    return c;
  }();

  auto save = [&](int64_t iter, const std::string& name) {
    if (!has_out) return;
    Checkpoint ckpt;
    ckpt.iteration = iter;
    ckpt.params = result.params;
    if (result.opt.m.empty()) {
      // Checkpoint before any update: zero moments.
      for (auto& [n, t] : result.params.named()) {
        (void)n;
        result.opt.m.push_back(Tensor::zeros(t->shape));
        result.opt.v.push_back(Tensor::zeros(t->shape));
      }
    }
    ckpt.opt = result.opt;
    ckpt.feats = result.feats;
    save_checkpoint(out_dir + "/" + name, ckpt);
  };

  auto run_eval = [&](int64_t iter) {
    const EvalReport report =
        evaluate(result.params, eval_data.lr, eval_data.hr, sched, reward_fn,
                 result.feats, derive_seed(cfg.seed, kTagEval, 0),
                 to_string(cfg.variant));
    EvalRecord rec;
    rec.iter = iter;
    rec.psnr = report.psnr.mean;
    rec.ssim = report.ssim.mean;
    rec.struct_loss = report.struct_loss.mean;
    rec.reward = report.reward.mean;
    result.log.evals.push_back(rec);
    result.final_eval = rec;
  };

  for (int64_t iter = start_iter; iter <= cfg.iterations; ++iter) {
    const bool do_forward = cfg.variant == TrainVariant::forward_only ||
                            cfg.variant == TrainVariant::mixed;
    const bool reverse_on_a = cfg.variant == TrainVariant::all_reverse;
    const bool do_reverse_b = cfg.variant != TrainVariant::forward_only;

    if (do_forward) {
      DegradationConfig cfg_a = cfg_a_base;
      const PairedBatch batch = make_paired_batch(
          data.hr_pool(), cfg_a, cfg.batch_k,
          derive_seed(cfg.seed, kTagFwdBatch, static_cast<uint64_t>(iter)));
      const StepLosses losses =
          forward_branch_step(result.params, result.opt, batch, cfg, sched,
                              result.feats, reward_fn, iter);
      RunRecord rec;
      rec.iter = iter;
      rec.branch = 'F';
      rec.t_sampled = losses.t_sampled;
      rec.lambda_t = losses.lambda_t;
      rec.l_pair = losses.l_pair;
      rec.l_struct = losses.l_struct;
      rec.l_forward = losses.l_forward;
      rec.mean_reward = losses.mean_reward;
      result.log.records.push_back(rec);
    }
    if (reverse_on_a) {
      // Variant 3 treats the synthetic family as unpaired: batch prep reads
      // the HR pool to degrade fresh LRs, the branch sees LR only.
      DegradationConfig cfg_a = cfg_a_base;
      const PairedBatch prep = make_paired_batch(
          data.hr_pool(), cfg_a, cfg.batch_k,
          derive_seed(cfg.seed, kTagRevBatchA, static_cast<uint64_t>(iter)));
      UnpairedBatch batch;
      for (const PairedItem& item : prep.items) batch.lr.push_back(item.lr);
      const StepLosses losses =
          reverse_branch_step(result.params, result.opt, result.reference,
                              batch, cfg, sched, result.feats, reward_fn,
                              iter * 2);  // distinct seed stream from branch B
      RunRecord rec;
      rec.iter = iter;
      rec.branch = 'R';
      rec.t_sampled = losses.t_sampled;
      rec.l_unpair = losses.l_unpair;
      rec.l_sem = losses.l_sem;
      rec.l_reverse = losses.l_reverse;
      rec.mean_reward = losses.mean_reward;
      result.log.records.push_back(rec);
    }
    if (do_reverse_b) {
      const UnpairedBatch batch = make_unpaired_batch(
          data.lr_pool(), cfg.batch_k,
          derive_seed(cfg.seed, kTagRevBatchB, static_cast<uint64_t>(iter)));
      const StepLosses losses =
          reverse_branch_step(result.params, result.opt, result.reference,
                              batch, cfg, sched, result.feats, reward_fn,
                              iter * 2 + 1);
      RunRecord rec;
      rec.iter = iter;
      rec.branch = 'R';
      rec.t_sampled = losses.t_sampled;
      rec.l_unpair = losses.l_unpair;
      rec.l_sem = losses.l_sem;
      rec.l_reverse = losses.l_reverse;
      rec.mean_reward = losses.mean_reward;
      result.log.records.push_back(rec);
    }

    if (iter % cfg.eval_every == 0 || iter == cfg.iterations) run_eval(iter);
    if (has_out &&
        (iter % cfg.checkpoint_every == 0 || iter == cfg.iterations)) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06lld.bird",
                    static_cast<long long>(iter));
      save(iter, name);
    }
  }
  if (result.log.evals.empty()) run_eval(cfg.iterations);
  save(cfg.iterations, "final.bird");
  if (has_out)
    result.log.write_csv(out_dir + "/runlog.csv", out_dir + "/eval.csv");

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    wall_start)
          .count();
  result.hr_a_reads = data.hr_a_reads;
  result.lr_b_reads = data.lr_b_reads;
  return result;
}

}  // namespace bird
