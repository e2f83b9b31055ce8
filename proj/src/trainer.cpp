#include "asv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace asv::trainer {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  store_.reserve(std::min<size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(t));
  } else {
    store_[next_] = std::move(t);  // oldest first
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(size_t n, std::mt19937_64& rng) const {
  if (n > store_.size())
    throw std::invalid_argument("replay buffer: batch larger than stored transitions");
  // partial Fisher-Yates over an index vector: uniform without replacement
  std::vector<size_t> idx(store_.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<const Transition*> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&store_[idx[i]]);
  }
  return out;
}

TrainConfig TrainConfig::from_config(const KeyValueFile& kv) {
  kv.require_known({"total_steps", "batch_size", "gamma", "target_sync_every",
                    "buffer_capacity", "warmup", "eps_start", "eps_end", "eps_decay_steps",
                    "eval_every", "eval_episodes", "lr", "hidden", "history",
                    "checkpoint_every", "n_ts_override", "coef", "env_config"});
  TrainConfig c;
  c.total_steps = kv.get_int("total_steps", c.total_steps);
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.gamma = kv.get_real("gamma", c.gamma);
  c.target_sync_every = kv.get_int("target_sync_every", c.target_sync_every);
  c.buffer_capacity = kv.get_int("buffer_capacity", c.buffer_capacity);
  c.warmup = kv.get_int("warmup", c.warmup);
  c.eps_start = kv.get_real("eps_start", c.eps_start);
  c.eps_end = kv.get_real("eps_end", c.eps_end);
  c.eps_decay_steps = kv.get_int("eps_decay_steps", c.eps_decay_steps);
  c.eval_every = kv.get_int("eval_every", c.eval_every);
  c.eval_episodes = static_cast<int>(kv.get_int("eval_episodes", c.eval_episodes));
  c.lr = kv.get_real("lr", c.lr);
  c.hidden = static_cast<int>(kv.get_int("hidden", c.hidden));
  c.history = static_cast<int>(kv.get_int("history", c.history));
  c.checkpoint_every = kv.get_int("checkpoint_every", c.checkpoint_every);
  if (kv.has("n_ts_override"))
    c.n_ts_override = static_cast<int>(kv.get_int("n_ts_override"));
  c.coef_path = kv.get_string("coef", "");
  c.env_config_path = kv.get_string("env_config", "");

  if (c.total_steps < 0 || c.batch_size <= 0 || c.buffer_capacity <= 0 || c.warmup <= 0 ||
      c.eval_every <= 0 || c.eval_episodes <= 0 || c.target_sync_every <= 0 ||
      c.eps_decay_steps <= 0 || c.hidden <= 0 || c.history < 0)
    throw ConfigError("train config: sizes and cadences must be positive");
  if (c.eps_start < 0.0 || c.eps_start > 1.0 || c.eps_end < 0.0 || c.eps_end > 1.0)
    throw ConfigError("train config: epsilon bounds must lie in [0, 1]");
  if (c.warmup < c.batch_size)
    throw ConfigError("train config: warmup must be at least one batch");
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  return from_config(KeyValueFile::load(path));
}

double epsilon_at(const TrainConfig& cfg, long step) {
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.eps_decay_steps);
  return std::max(cfg.eps_end, cfg.eps_start - (cfg.eps_start - cfg.eps_end) * frac);
}

int greedy_action(const qnet::NetworkParams& params, const qnet::ObservationHistory& hist) {
  const Eigen::VectorXd q = qnet::forward(params, hist);
  int best = 0;
  for (int a = 1; a < q.size(); ++a)
    if (q(a) > q(best)) best = a;  // strict: ties keep the lowest index
  return best;
}

int select_action(const qnet::NetworkParams& params, const qnet::ObservationHistory& hist,
                  double epsilon, std::mt19937_64& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("select_action: epsilon outside [0, 1]");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(0, params.cfg.actions - 1);
      return pick(rng);
    }
  }
  return greedy_action(params, hist);
}

std::vector<double> td_targets(const std::vector<const Transition*>& batch,
                               const qnet::NetworkParams& target_params, double gamma) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (const Transition* t : batch) {
    double target = t->reward;
    if (!t->done) {
      const Eigen::VectorXd q = qnet::forward(target_params, t->next_hist);
      target += gamma * q.maxCoeff();
    }
    y.push_back(target);
  }
  return y;
}

void HistoryWindow::reset(const env::Observation& first) {
  window_.assign(static_cast<size_t>(h_) + 1, first);
}

void HistoryWindow::push(const env::Observation& obs) {
  window_.erase(window_.begin());
  window_.push_back(obs);
}

std::vector<EvalEpisode> evaluate(const qnet::NetworkParams& params,
                                  const env::Environment& environment,
                                  const TrainConfig& cfg, int n_episodes,
                                  std::mt19937_64& rng) {
  std::vector<EvalEpisode> out;
  for (int e = 0; e < n_episodes; ++e) {
    EvalEpisode m;
    m.min_domain_distance = std::numeric_limits<double>::infinity();
    auto ep = environment.spawn_episode(rng, cfg.n_ts_override);
    HistoryWindow window(cfg.history);
    window.reset(environment.observe(ep));
    while (environment.is_terminal(ep) == env::Terminal::none) {
      const int action = greedy_action(params, window.get());
      const auto next = environment.apply_action(ep, action);
      const auto r = environment.reward(ep, next, action);
      m.ret += r.total;
      if (action != 0) ++m.rudder_actions;
      bool colliding = false;
      const auto risks = environment.assess(next);
      for (size_t i = 0; i < risks.size(); ++i) {
        if (risks[i].cr >= 1.0) colliding = true;
        const double dist =
            (next.ts_list[i].position() - next.os.position()).norm();
        const double alpha = std::atan2(next.ts_list[i].y_n - next.os.y_n,
                                        next.ts_list[i].x_n - next.os.x_n) -
                             next.os.psi;
        m.min_domain_distance = std::min(
            m.min_domain_distance,
            dist - risk::domain_radius(environment.config().domain, alpha));
        if (risks[i].tcpa >= 0.0 && next.os.r_yaw < 0.0 &&
            (risks[i].sigma.sigma == 1 || risks[i].sigma.sigma == 2))
          ++m.colreg_violation_steps;
      }
      if (colliding) ++m.collision_steps;
      ++m.steps;
      window.push(environment.observe(next));
      ep = next;
    }
    m.goal_reached = environment.is_terminal(ep) == env::Terminal::goal_reached;
    out.push_back(m);  // min_domain_distance stays +inf for traffic-free episodes
  }
  return out;
}

namespace {

std::string describe_batch(const std::vector<const Transition*>& batch,
                           const std::vector<double>& targets) {
  std::ostringstream os;
  os << "batch dump (action, reward, done, target):";
  for (size_t i = 0; i < batch.size(); ++i)
    os << " (" << batch[i]->action << ", " << batch[i]->reward << ", " << batch[i]->done
       << ", " << targets[i] << ")";
  return os.str();
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const env::Environment& environment,
                  std::mt19937_64& rng, const std::string& metrics_csv,
                  const std::string& checkpoint_path) {
  qnet::NetConfig net_cfg;
  net_cfg.hidden = cfg.hidden;
  net_cfg.history = cfg.history;
  qnet::NetworkParams params = qnet::init_params(net_cfg, rng);
  qnet::NetworkParams target = params;
  qnet::AdamState adam = qnet::make_adam_state(params);
  qnet::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;

  ReplayBuffer buffer(static_cast<size_t>(cfg.buffer_capacity));

  std::ofstream metrics;
  if (!metrics_csv.empty()) {
    metrics.open(metrics_csv, std::ios::app);
    if (!metrics) throw ConfigError("cannot open metrics log: " + metrics_csv);
    metrics << "step,eval_return_mean";
    for (int e = 0; e < cfg.eval_episodes; ++e) metrics << ",eval_return_" << e;
    metrics << ",epsilon,loss_mean\n";
  }

  auto ep = environment.spawn_episode(rng, cfg.n_ts_override);
  HistoryWindow window(cfg.history);
  window.reset(environment.observe(ep));

  TrainResult result;
  double loss_accum = 0.0;
  long loss_count = 0;

  for (long step = 0; step < cfg.total_steps; ++step) {
    const double eps = epsilon_at(cfg, step);
    const int action = select_action(params, window.get(), eps, rng);

    const auto next = environment.apply_action(ep, action);
    const auto r = environment.reward(ep, next, action);
    const env::Terminal term = environment.is_terminal(next);

    Transition t;
    t.hist = window.get();
    t.action = action;
    t.reward = r.total;
    t.done = term != env::Terminal::none;
    HistoryWindow next_window = window;
    next_window.push(environment.observe(next));
    t.next_hist = next_window.get();
    buffer.push(std::move(t));

    if (term != env::Terminal::none) {
      ep = environment.spawn_episode(rng, cfg.n_ts_override);
      window.reset(environment.observe(ep));
    } else {
      ep = next;
      window = next_window;
    }
    ++result.env_steps;

    if (buffer.size() >= static_cast<size_t>(cfg.warmup)) {
      const auto batch = buffer.sample(static_cast<size_t>(cfg.batch_size), rng);
      const auto targets = td_targets(batch, target, cfg.gamma);

      qnet::NetworkParams grads = qnet::zero_like(params);
      double loss = 0.0;
      const double inv_n = 1.0 / static_cast<double>(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) {
        qnet::ForwardCache cache;
        const Eigen::VectorXd q = qnet::forward(params, batch[i]->hist, &cache);
        const double err = q(batch[i]->action) - targets[i];
        loss += err * err * inv_n;
        Eigen::VectorXd og = Eigen::VectorXd::Zero(q.size());
        og(batch[i]->action) = 2.0 * err * inv_n;
        const auto g = qnet::backward(params, cache, og);
        qnet::for_each_tensor([](auto& acc, auto& gi) { acc += gi; }, grads,
                              const_cast<qnet::NetworkParams&>(g));
      }
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: non-finite loss at step " +
                                 std::to_string(step) + "; " + describe_batch(batch, targets));
      qnet::adam_step(params, grads, adam, adam_cfg);
      ++result.updates;
      loss_accum += loss;
      ++loss_count;
      if (result.updates % cfg.target_sync_every == 0) qnet::sync_target(params, target);
      if (cfg.checkpoint_every > 0 && !checkpoint_path.empty() &&
          result.updates % cfg.checkpoint_every == 0) {
        qnet::Checkpoint ckpt{params, adam, true, step + 1};
        qnet::save_checkpoint(checkpoint_path, ckpt);
      }
    }

    if ((step + 1) % cfg.eval_every == 0) {
      std::mt19937_64 eval_rng(rng());
      const auto episodes = evaluate(params, environment, cfg, cfg.eval_episodes, eval_rng);
      double mean = 0.0;
      for (const auto& e : episodes) mean += e.ret;
      mean /= static_cast<double>(episodes.size());
      if (metrics.is_open()) {
        metrics << (step + 1) << ',' << mean;
        for (const auto& e : episodes) metrics << ',' << e.ret;
        metrics << ',' << epsilon_at(cfg, step + 1) << ','
                << (loss_count > 0 ? loss_accum / static_cast<double>(loss_count) : 0.0)
                << '\n';
        metrics.flush();
      }
      loss_accum = 0.0;
      loss_count = 0;
    }
  }

  result.checkpoint = qnet::Checkpoint{params, adam, true, cfg.total_steps};
  if (!checkpoint_path.empty()) qnet::save_checkpoint(checkpoint_path, result.checkpoint);
  return result;
}

}  // namespace asv::trainer
