#pragma once

#include "asv/env.hpp"

#include <random>
#include <string>
#include <vector>

namespace asv::qnet {

/// Chronological window of the last h+1 observations, oldest first. Each
/// entry's TS list is non-empty (padding guaranteed by the environment).
using ObservationHistory = std::vector<env::Observation>;

struct Dense {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

/// Gated recurrent cell parameters; the four gates are stacked row-wise in
/// the order input, forget, cell, output.
struct LstmCell {
  Eigen::MatrixXd W;  // (4H, in)
  Eigen::MatrixXd U;  // (4H, H)
  Eigen::VectorXd b;  // (4H)
};

/// One per-lag feature extractor: FC+rectifier on the OS features, a
/// recurrent pass over the TS vectors, and an FC+rectifier merge.
struct SpatialBlock {
  Dense os_fc;
  LstmCell ts_cell;
  Dense merge_fc;
};

struct NetConfig {
  int os_dim = 7;
  int ts_dim = 6;
  int hidden = 64;
  int history = 2;  // h: number of lags in addition to the current step
  int actions = 3;
};

/// Full parameter set. Lag l has its own spatial block (no sharing); the
/// temporal cell consumes the lag features oldest first and the identity-
/// activated head maps its final hidden state to the action values.
struct NetworkParams {
  NetConfig cfg;
  std::vector<SpatialBlock> spatial;  // index l = 0 (current) .. history (oldest)
  LstmCell temporal;
  Dense head;
};

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, forget-gate bias 1,
/// all other biases 0.
NetworkParams init_params(const NetConfig& cfg, std::mt19937_64& rng);

/// Same shapes, every tensor zero. Gradients reuse the parameter layout.
NetworkParams zero_like(const NetworkParams& params);

/// Applies f to each corresponding tensor of the given parameter sets.
template <class F, class... Rest>
void for_each_tensor(F&& f, NetworkParams& a, Rest&... rest) {
  auto cell = [&](auto get) { f(get(a), get(rest)...); };
  for (size_t l = 0; l < a.spatial.size(); ++l) {
    cell([l](auto& p) -> Eigen::MatrixXd& { return p.spatial[l].os_fc.W; });
    cell([l](auto& p) -> Eigen::VectorXd& { return p.spatial[l].os_fc.b; });
    cell([l](auto& p) -> Eigen::MatrixXd& { return p.spatial[l].ts_cell.W; });
    cell([l](auto& p) -> Eigen::MatrixXd& { return p.spatial[l].ts_cell.U; });
    cell([l](auto& p) -> Eigen::VectorXd& { return p.spatial[l].ts_cell.b; });
    cell([l](auto& p) -> Eigen::MatrixXd& { return p.spatial[l].merge_fc.W; });
    cell([l](auto& p) -> Eigen::VectorXd& { return p.spatial[l].merge_fc.b; });
  }
  cell([](auto& p) -> Eigen::MatrixXd& { return p.temporal.W; });
  cell([](auto& p) -> Eigen::MatrixXd& { return p.temporal.U; });
  cell([](auto& p) -> Eigen::VectorXd& { return p.temporal.b; });
  cell([](auto& p) -> Eigen::MatrixXd& { return p.head.W; });
  cell([](auto& p) -> Eigen::VectorXd& { return p.head.b; });
}

/// Activations recorded by forward for exact reverse-mode differentiation.
struct LstmTrace {
  std::vector<Eigen::VectorXd> x, i, f, g, o, c, tanh_c, h;
};

struct ForwardCache {
  struct Lag {
    Eigen::VectorXd os_in, os_pre, os_act;
    LstmTrace ts;
    Eigen::VectorXd merge_in, merge_pre, merge_act;  // merge_act = x_{t-l}
  };
  std::vector<Lag> lags;  // chronological, oldest first
  LstmTrace temporal;
  Eigen::VectorXd head_in;
};

/// Q-values for the M actions. cache, when given, is filled for backward.
Eigen::VectorXd forward(const NetworkParams& params, const ObservationHistory& hist,
                        ForwardCache* cache = nullptr);

/// Gradients of <output_grad, Q> with respect to every parameter.
NetworkParams backward(const NetworkParams& params, const ForwardCache& cache,
                       const Eigen::VectorXd& output_grad);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  NetworkParams m, v;
  long t = 0;
};

AdamState make_adam_state(const NetworkParams& params);

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state,
               const AdamConfig& cfg);

/// Deep copy with shape verification.
void sync_target(const NetworkParams& source, NetworkParams& target);

/// Binary checkpoint: config, parameters, optional optimizer moments, and
/// the training step counter. Loading restores bit-identical evaluation.
struct Checkpoint {
  NetworkParams params;
  AdamState adam;
  bool has_adam = false;
  long train_step = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace asv::qnet
