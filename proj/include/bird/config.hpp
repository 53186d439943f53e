#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bird/rewards.hpp"
#include "bird/schedule.hpp"

namespace bird {

// Flat key=value text with '#' comments; keys keep insertion order.
class KvFile {
 public:
  static KvFile parse_string(const std::string& text);
  static KvFile parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, int64_t value);
  void set_u64(const std::string& key, uint64_t value);

  std::string serialize() const;
  const std::vector<std::pair<std::string, std::string>>& pairs() const {
    return pairs_;
  }

 private:
  const std::string* find(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> pairs_;
};

enum class TrainVariant { forward_only, reverse_only, all_reverse, mixed };
TrainVariant variant_from_string(const std::string& s);
std::string to_string(TrainVariant v);

struct TrainingConfig {
  int64_t iterations = 2000;
  double lr = 1e-4;
  double gamma = 8.0;          // lambda(t) = (t/T)^gamma
  double lambda_sem = 0.001;   // semantic alignment weight
  double reward_weight = 3e-4; // w_r on the pair loss
  double tau = 1.0;            // unpaired reward margin
  int T = 16;
  int batch_k = 4;
  uint64_t seed = 0;
  TrainVariant variant = TrainVariant::mixed;
  RewardKind reward_kind = RewardKind::band_energy;
  NoiseSchedule::Variant schedule_variant = NoiseSchedule::Variant::vp;
  double kappa = 0.2;       // shift-schedule noise scale
  double abar_min = 4e-3;   // vp schedule floor
  int hr_size = 32;
  int scale = 4;
  int hidden_width = 16;
  int corpus_a_n = 64;  // paired family-A HR pool
  int corpus_b_n = 32;  // unpaired family-B LR pool
  int eval_n = 16;      // held-out family-B eval pairs
  int64_t eval_every = 500;
  int64_t checkpoint_every = 500;
  double feat_weight = 0.5;  // feature term inside struct loss
  // Reward proxy knobs.
  double reward_rho = 0.25;
  double reward_slope = 10.0;
  double reward_target_tv = 0.12;
  double reward_tv_scale = 0.08;

  static TrainingConfig from_kv(const KvFile& kv);
  KvFile to_kv() const;
  void validate() const;

  NoiseSchedule make_schedule() const;
  RewardFn make_reward_fn() const;
  WeightSchedule make_weight_schedule() const { return {gamma, T}; }
};

}  // namespace bird
