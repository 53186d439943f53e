#include "bird/config.hpp"

#include <cstdio>
#include <stdexcept>

#include "bird/io.hpp"
#include "bird/tensor.hpp"

namespace bird {

namespace {
std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

KvFile KvFile::parse_string(const std::string& text) {
  KvFile kv;
  size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    if (pos > text.size()) break;
  }
  return kv;
}

KvFile KvFile::parse_file(const std::string& path) {
  return parse_string(read_text_file(path));
}

const std::string* KvFile::find(const std::string& key) const {
  for (const auto& [k, v] : pairs_)
    if (k == key) return &v;
  return nullptr;
}

bool KvFile::has(const std::string& key) const { return find(key) != nullptr; }

std::string KvFile::get_string(const std::string& key,
                               const std::string& fallback) const {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

double KvFile::get_double(const std::string& key, double fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  size_t used = 0;
  const double d = std::stod(*v, &used);
  check(used == v->size(), "config key " + key + ": bad number '" + *v + "'");
  return d;
}

int64_t KvFile::get_int(const std::string& key, int64_t fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  size_t used = 0;
  const long long d = std::stoll(*v, &used);
  check(used == v->size(), "config key " + key + ": bad integer '" + *v + "'");
  return d;
}

uint64_t KvFile::get_u64(const std::string& key, uint64_t fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  size_t used = 0;
  const unsigned long long d = std::stoull(*v, &used);
  check(used == v->size(), "config key " + key + ": bad integer '" + *v + "'");
  return d;
}

void KvFile::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : pairs_)
    if (k == key) {
      v = value;
      return;
    }
  pairs_.emplace_back(key, value);
}

void KvFile::set_double(const std::string& key, double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  set(key, buf);
}
void KvFile::set_int(const std::string& key, int64_t value) {
  set(key, std::to_string(value));
}
void KvFile::set_u64(const std::string& key, uint64_t value) {
  set(key, std::to_string(value));
}

std::string KvFile::serialize() const {
  std::string out;
  for (const auto& [k, v] : pairs_) out += k + "=" + v + "\n";
  return out;
}

TrainVariant variant_from_string(const std::string& s) {
  if (s == "forward_only") return TrainVariant::forward_only;
  if (s == "reverse_only") return TrainVariant::reverse_only;
  if (s == "all_reverse") return TrainVariant::all_reverse;
  if (s == "mixed") return TrainVariant::mixed;
  throw std::invalid_argument("unknown variant: " + s);
}

std::string to_string(TrainVariant v) {
  switch (v) {
    case TrainVariant::forward_only: return "forward_only";
    case TrainVariant::reverse_only: return "reverse_only";
    case TrainVariant::all_reverse: return "all_reverse";
    case TrainVariant::mixed: return "mixed";
  }
  return "?";
}

TrainingConfig TrainingConfig::from_kv(const KvFile& kv) {
  TrainingConfig c;
  c.iterations = kv.get_int("iterations", c.iterations);
  c.lr = kv.get_double("lr", c.lr);
  c.gamma = kv.get_double("gamma", c.gamma);
  c.lambda_sem = kv.get_double("lambda_sem", c.lambda_sem);
  c.reward_weight = kv.get_double("reward_weight", c.reward_weight);
  c.tau = kv.get_double("tau", c.tau);
  c.T = static_cast<int>(kv.get_int("T", c.T));
  c.batch_k = static_cast<int>(kv.get_int("batch_k", c.batch_k));
  c.seed = kv.get_u64("seed", c.seed);
  c.variant = variant_from_string(kv.get_string("variant", to_string(c.variant)));
  c.reward_kind =
      reward_kind_from_string(kv.get_string("reward_kind", to_string(c.reward_kind)));
  const std::string sv = kv.get_string("schedule_variant", "vp");
  if (sv == "vp")
    c.schedule_variant = NoiseSchedule::Variant::vp;
  else if (sv == "shift")
    c.schedule_variant = NoiseSchedule::Variant::shift;
  else
    throw std::invalid_argument("unknown schedule_variant: " + sv);
  c.kappa = kv.get_double("kappa", c.kappa);
  c.abar_min = kv.get_double("abar_min", c.abar_min);
  c.hr_size = static_cast<int>(kv.get_int("hr_size", c.hr_size));
  c.scale = static_cast<int>(kv.get_int("scale", c.scale));
  c.hidden_width = static_cast<int>(kv.get_int("hidden_width", c.hidden_width));
  c.corpus_a_n = static_cast<int>(kv.get_int("corpus_a_n", c.corpus_a_n));
  c.corpus_b_n = static_cast<int>(kv.get_int("corpus_b_n", c.corpus_b_n));
  c.eval_n = static_cast<int>(kv.get_int("eval_n", c.eval_n));
  c.eval_every = kv.get_int("eval_every", c.eval_every);
  c.checkpoint_every = kv.get_int("checkpoint_every", c.checkpoint_every);
  c.feat_weight = kv.get_double("feat_weight", c.feat_weight);
  c.reward_rho = kv.get_double("reward_rho", c.reward_rho);
  c.reward_slope = kv.get_double("reward_slope", c.reward_slope);
  c.reward_target_tv = kv.get_double("reward_target_tv", c.reward_target_tv);
  c.reward_tv_scale = kv.get_double("reward_tv_scale", c.reward_tv_scale);
  c.validate();
  return c;
}

KvFile TrainingConfig::to_kv() const {
  KvFile kv;
  kv.set_int("iterations", iterations);
  kv.set_double("lr", lr);
  kv.set_double("gamma", gamma);
  kv.set_double("lambda_sem", lambda_sem);
  kv.set_double("reward_weight", reward_weight);
  kv.set_double("tau", tau);
  kv.set_int("T", T);
  kv.set_int("batch_k", batch_k);
  kv.set_u64("seed", seed);
  kv.set("variant", to_string(variant));
  kv.set("reward_kind", to_string(reward_kind));
  kv.set("schedule_variant",
         schedule_variant == NoiseSchedule::Variant::vp ? "vp" : "shift");
  kv.set_double("kappa", kappa);
  kv.set_double("abar_min", abar_min);
  kv.set_int("hr_size", hr_size);
  kv.set_int("scale", scale);
  kv.set_int("hidden_width", hidden_width);
  kv.set_int("corpus_a_n", corpus_a_n);
  kv.set_int("corpus_b_n", corpus_b_n);
  kv.set_int("eval_n", eval_n);
  kv.set_int("eval_every", eval_every);
  kv.set_int("checkpoint_every", checkpoint_every);
  kv.set_double("feat_weight", feat_weight);
  kv.set_double("reward_rho", reward_rho);
  kv.set_double("reward_slope", reward_slope);
  kv.set_double("reward_target_tv", reward_target_tv);
  kv.set_double("reward_tv_scale", reward_tv_scale);
  return kv;
}

void TrainingConfig::validate() const {
  check(iterations >= 1, "config: iterations must be >= 1");
  check(lr > 0, "config: lr must be > 0");
  check(gamma > 0, "config: gamma must be > 0");
  check(lambda_sem >= 0, "config: lambda_sem must be >= 0");
  check(reward_weight >= 0, "config: reward_weight must be >= 0");
  check(T >= 2, "config: T must be >= 2");
  check(batch_k >= 1, "config: batch_k must be >= 1");
  check(hr_size >= 8 && hr_size % 8 == 0,
        "config: hr_size must be a positive multiple of 8");
  check(scale >= 1 && hr_size % scale == 0,
        "config: scale must divide hr_size");
  check(hr_size / scale >= 2, "config: LR size must be at least 2");
  check(hr_size % 4 == 0, "config: hr_size must be divisible by 4");
  check(hidden_width >= 2 && hidden_width % 2 == 0,
        "config: hidden_width must be even");
  check(corpus_a_n >= batch_k, "config: corpus_a_n must be >= batch_k");
  check(corpus_b_n >= batch_k, "config: corpus_b_n must be >= batch_k");
  check(eval_n >= 1, "config: eval_n must be >= 1");
  check(eval_every >= 1 && checkpoint_every >= 1,
        "config: cadences must be >= 1");
  check(kappa > 0, "config: kappa must be > 0");
  check(tau > 0, "config: tau must be > 0");
}

NoiseSchedule TrainingConfig::make_schedule() const {
  if (schedule_variant == NoiseSchedule::Variant::vp)
    return make_vp_schedule(T, abar_min);
  return make_shift_schedule(T, kappa);
}

RewardFn TrainingConfig::make_reward_fn() const {
  RewardFn fn;
  fn.kind = reward_kind;
  fn.rho = reward_rho;
  fn.slope = reward_slope;
  fn.target_tv = reward_target_tv;
  fn.tv_scale = reward_tv_scale;
  return fn;
}

}  // namespace bird
