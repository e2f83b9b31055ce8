#pragma once

#include "asv/qnet.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace asv::trainer {

struct Transition {
  qnet::ObservationHistory hist;
  int action = 0;
  double reward = 0.0;
  qnet::ObservationHistory next_hist;
  bool done = false;  // goal or timeout only; collisions never terminate
};

/// Ring buffer with uniform without-replacement batch sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void push(Transition t);
  size_t size() const { return store_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return store_[i]; }

  std::vector<const Transition*> sample(size_t n, std::mt19937_64& rng) const;

 private:
  size_t capacity_;
  size_t next_ = 0;  // eviction cursor once full
  std::vector<Transition> store_;
};

struct TrainConfig {
  long total_steps = 200000;
  int batch_size = 32;
  double gamma = 0.999;
  long target_sync_every = 1000;  // gradient updates between hard copies
  long buffer_capacity = 100000;
  long warmup = 1000;  // minimum fill before learning
  double eps_start = 1.0;
  double eps_end = 0.1;
  long eps_decay_steps = 1000000;
  long eval_every = 5000;
  int eval_episodes = 10;
  double lr = 1e-4;
  int hidden = 64;
  int history = 2;
  long checkpoint_every = 0;  // 0: only the final checkpoint
  std::optional<int> n_ts_override;  // fixed TS count (0 = goal-only task)

  // companion files resolved by the CLI; empty means built-in defaults
  std::string coef_path;
  std::string env_config_path;

  static TrainConfig from_config(const KeyValueFile& kv);
  static TrainConfig load(const std::string& path);
};

/// eps(step) = max(eps_end, eps_start - (eps_start - eps_end) * step / decay).
double epsilon_at(const TrainConfig& cfg, long step);

/// Epsilon-greedy with argmax ties broken by the lowest action index.
int select_action(const qnet::NetworkParams& params, const qnet::ObservationHistory& hist,
                  double epsilon, std::mt19937_64& rng);

int greedy_action(const qnet::NetworkParams& params, const qnet::ObservationHistory& hist);

std::vector<double> td_targets(const std::vector<const Transition*>& batch,
                               const qnet::NetworkParams& target_params, double gamma);

/// Sliding observation window, front-filled by repeating the first
/// observation of an episode.
class HistoryWindow {
 public:
  explicit HistoryWindow(int h) : h_(h) {}
  void reset(const env::Observation& first);
  void push(const env::Observation& obs);
  const qnet::ObservationHistory& get() const { return window_; }

 private:
  int h_;
  qnet::ObservationHistory window_;
};

struct EvalEpisode {
  double ret = 0.0;
  bool goal_reached = false;
  double min_domain_distance = 0.0;  // min over TS and steps of dist - domain
  long collision_steps = 0;          // steps with any TS inside the domain
  long colreg_violation_steps = 0;
  long rudder_actions = 0;
  long steps = 0;
};

/// Greedy-policy rollouts on environment-spawned episodes.
std::vector<EvalEpisode> evaluate(const qnet::NetworkParams& params,
                                  const env::Environment& environment,
                                  const TrainConfig& cfg, int n_episodes,
                                  std::mt19937_64& rng);

struct TrainResult {
  qnet::Checkpoint checkpoint;
  long env_steps = 0;
  long updates = 0;
};

/// Full DQN loop. metrics_csv, when non-empty, receives one append-only row
/// per evaluation block; checkpoint_path, when non-empty, is written at the
/// end (and every checkpoint_every updates).
TrainResult train(const TrainConfig& cfg, const env::Environment& environment,
                  std::mt19937_64& rng, const std::string& metrics_csv = "",
                  const std::string& checkpoint_path = "");

}  // namespace asv::trainer
