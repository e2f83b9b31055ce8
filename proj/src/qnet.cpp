#include "asv/qnet.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace asv::qnet {

namespace {

Eigen::MatrixXd uniform_matrix(int rows, int cols, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

Dense init_dense(int out, int in, std::mt19937_64& rng) {
  return {uniform_matrix(out, in, in, rng), Eigen::VectorXd::Zero(out)};
}

LstmCell init_cell(int hidden, int in, std::mt19937_64& rng) {
  LstmCell cell;
  cell.W = uniform_matrix(4 * hidden, in, in + hidden, rng);
  cell.U = uniform_matrix(4 * hidden, hidden, in + hidden, rng);
  cell.b = Eigen::VectorXd::Zero(4 * hidden);
  cell.b.segment(hidden, hidden).setOnes();  // forget gate opens at init
  return cell;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return 1.0 / (1.0 + (-z.array()).exp());
}

void lstm_step(const LstmCell& cell, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, LstmTrace& trace) {
  const int H = static_cast<int>(cell.U.cols());
  const Eigen::VectorXd z = cell.W * x + cell.U * h_prev + cell.b;
  const Eigen::VectorXd i = sigmoid(z.segment(0, H));
  const Eigen::VectorXd f = sigmoid(z.segment(H, H));
  const Eigen::VectorXd g = z.segment(2 * H, H).array().tanh();
  const Eigen::VectorXd o = sigmoid(z.segment(3 * H, H));
  const Eigen::VectorXd c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  const Eigen::VectorXd tc = c.array().tanh();
  trace.x.push_back(x);
  trace.i.push_back(i);
  trace.f.push_back(f);
  trace.g.push_back(g);
  trace.o.push_back(o);
  trace.c.push_back(c);
  trace.tanh_c.push_back(tc);
  trace.h.push_back(o.cwiseProduct(tc));
}

void run_lstm(const LstmCell& cell, const std::vector<Eigen::VectorXd>& inputs,
              LstmTrace& trace) {
  const int H = static_cast<int>(cell.U.cols());
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H), c = Eigen::VectorXd::Zero(H);
  for (const auto& x : inputs) {
    lstm_step(cell, x, h, c, trace);
    h = trace.h.back();
    c = trace.c.back();
  }
}

/// Backward through one recorded recurrent pass; d_h_last is the gradient
/// arriving at the final hidden state. Fills d_inputs (same length as the
/// trace) and accumulates parameter gradients.
void lstm_backward(const LstmCell& cell, const LstmTrace& trace, const Eigen::VectorXd& d_h_last,
                   LstmCell& grad, std::vector<Eigen::VectorXd>& d_inputs) {
  const int H = static_cast<int>(cell.U.cols());
  const int T = static_cast<int>(trace.x.size());
  d_inputs.assign(T, Eigen::VectorXd());
  Eigen::VectorXd dh = d_h_last;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  for (int t = T - 1; t >= 0; --t) {
    const auto& i = trace.i[t];
    const auto& f = trace.f[t];
    const auto& g = trace.g[t];
    const auto& o = trace.o[t];
    const auto& tc = trace.tanh_c[t];
    const Eigen::VectorXd c_prev =
        t > 0 ? trace.c[t - 1] : Eigen::VectorXd::Zero(H);
    const Eigen::VectorXd h_prev =
        t > 0 ? trace.h[t - 1] : Eigen::VectorXd::Zero(H);

    const Eigen::VectorXd d_o = dh.cwiseProduct(tc);
    dc += dh.cwiseProduct(o).cwiseProduct(
        (1.0 - tc.array().square()).matrix());
    const Eigen::VectorXd d_i = dc.cwiseProduct(g);
    const Eigen::VectorXd d_g = dc.cwiseProduct(i);
    const Eigen::VectorXd d_f = dc.cwiseProduct(c_prev);

    Eigen::VectorXd dz(4 * H);
    dz.segment(0, H) = d_i.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
    dz.segment(H, H) = d_f.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
    dz.segment(2 * H, H) = d_g.cwiseProduct((1.0 - g.array().square()).matrix());
    dz.segment(3 * H, H) = d_o.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

    grad.W.noalias() += dz * trace.x[t].transpose();
    grad.U.noalias() += dz * h_prev.transpose();
    grad.b += dz;
    d_inputs[t] = cell.W.transpose() * dz;
    dh = cell.U.transpose() * dz;
    dc = dc.cwiseProduct(f);
  }
}

void check_shapes(const NetworkParams& a, const NetworkParams& b) {
  bool ok = a.spatial.size() == b.spatial.size();
  NetworkParams& ma = const_cast<NetworkParams&>(a);
  NetworkParams& mb = const_cast<NetworkParams&>(b);
  if (ok)
    for_each_tensor(
        [&](auto& x, auto& y) {
          if (x.rows() != y.rows() || x.cols() != y.cols()) ok = false;
        },
        ma, mb);
  if (!ok) throw std::invalid_argument("network parameter shapes do not match");
}

}  // namespace

NetworkParams init_params(const NetConfig& cfg, std::mt19937_64& rng) {
  if (cfg.hidden <= 0 || cfg.history < 0 || cfg.actions <= 0 || cfg.os_dim <= 0 ||
      cfg.ts_dim <= 0)
    throw std::invalid_argument("network config: all dimensions must be positive");
  NetworkParams p;
  p.cfg = cfg;
  for (int l = 0; l <= cfg.history; ++l) {
    SpatialBlock blk;
    blk.os_fc = init_dense(cfg.hidden, cfg.os_dim, rng);
    blk.ts_cell = init_cell(cfg.hidden, cfg.ts_dim, rng);
    blk.merge_fc = init_dense(cfg.hidden, 2 * cfg.hidden, rng);
    p.spatial.push_back(std::move(blk));
  }
  p.temporal = init_cell(cfg.hidden, cfg.hidden, rng);
  p.head = init_dense(cfg.actions, cfg.hidden, rng);
  return p;
}

NetworkParams zero_like(const NetworkParams& params) {
  NetworkParams z = params;
  for_each_tensor([](auto& t) { t.setZero(); }, z);
  return z;
}

Eigen::VectorXd forward(const NetworkParams& params, const ObservationHistory& hist,
                        ForwardCache* cache) {
  const NetConfig& cfg = params.cfg;
  if (static_cast<int>(hist.size()) != cfg.history + 1)
    throw std::invalid_argument("forward: history length must be h+1 = " +
                                std::to_string(cfg.history + 1));

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc = ForwardCache{};

  std::vector<Eigen::VectorXd> lag_features;
  for (int idx = 0; idx <= cfg.history; ++idx) {
    // hist is oldest first; the oldest entry uses the largest-lag block
    const int lag = cfg.history - idx;
    const env::Observation& obs = hist[idx];
    if (obs.os.size() != cfg.os_dim)
      throw std::invalid_argument("forward: OS feature size mismatch at lag " +
                                  std::to_string(lag));
    if (obs.ts.empty())
      throw std::invalid_argument("forward: empty TS list at lag " + std::to_string(lag) +
                                  " (padding expected upstream)");
    const SpatialBlock& blk = params.spatial[lag];

    ForwardCache::Lag lc;
    lc.os_in = obs.os;
    lc.os_pre = blk.os_fc.W * lc.os_in + blk.os_fc.b;
    lc.os_act = lc.os_pre.cwiseMax(0.0);

    std::vector<Eigen::VectorXd> ts_inputs;
    ts_inputs.reserve(obs.ts.size());
    for (const auto& f : obs.ts) {
      if (f.size() != cfg.ts_dim)
        throw std::invalid_argument("forward: TS feature size mismatch at lag " +
                                    std::to_string(lag));
      ts_inputs.push_back(f);
    }
    run_lstm(blk.ts_cell, ts_inputs, lc.ts);

    lc.merge_in.resize(2 * cfg.hidden);
    lc.merge_in << lc.os_act, lc.ts.h.back();
    lc.merge_pre = blk.merge_fc.W * lc.merge_in + blk.merge_fc.b;
    lc.merge_act = lc.merge_pre.cwiseMax(0.0);

    lag_features.push_back(lc.merge_act);
    cc.lags.push_back(std::move(lc));
  }

  run_lstm(params.temporal, lag_features, cc.temporal);
  cc.head_in = cc.temporal.h.back();
  return params.head.W * cc.head_in + params.head.b;
}

NetworkParams backward(const NetworkParams& params, const ForwardCache& cache,
                       const Eigen::VectorXd& output_grad) {
  const NetConfig& cfg = params.cfg;
  if (output_grad.size() != cfg.actions)
    throw std::invalid_argument("backward: output gradient size mismatch");
  NetworkParams grads = zero_like(params);

  grads.head.W.noalias() = output_grad * cache.head_in.transpose();
  grads.head.b = output_grad;
  const Eigen::VectorXd d_head_in = params.head.W.transpose() * output_grad;

  std::vector<Eigen::VectorXd> d_lag_features;
  lstm_backward(params.temporal, cache.temporal, d_head_in, grads.temporal, d_lag_features);

  for (int idx = 0; idx <= cfg.history; ++idx) {
    const int lag = cfg.history - idx;
    const SpatialBlock& blk = params.spatial[lag];
    SpatialBlock& gblk = grads.spatial[lag];
    const ForwardCache::Lag& lc = cache.lags[idx];

    const Eigen::VectorXd d_merge_act = d_lag_features[idx];
    const Eigen::VectorXd d_merge_pre =
        (lc.merge_pre.array() > 0.0).select(d_merge_act.array(), 0.0);
    gblk.merge_fc.W.noalias() = d_merge_pre * lc.merge_in.transpose();
    gblk.merge_fc.b = d_merge_pre;
    const Eigen::VectorXd d_merge_in = blk.merge_fc.W.transpose() * d_merge_pre;

    const Eigen::VectorXd d_os_act = d_merge_in.head(cfg.hidden);
    const Eigen::VectorXd d_ts_h = d_merge_in.tail(cfg.hidden);

    const Eigen::VectorXd d_os_pre =
        (lc.os_pre.array() > 0.0).select(d_os_act.array(), 0.0);
    gblk.os_fc.W.noalias() = d_os_pre * lc.os_in.transpose();
    gblk.os_fc.b = d_os_pre;

    std::vector<Eigen::VectorXd> d_ts_inputs;
    lstm_backward(blk.ts_cell, lc.ts, d_ts_h, gblk.ts_cell, d_ts_inputs);
  }
  return grads;
}

AdamState make_adam_state(const NetworkParams& params) {
  return {zero_like(params), zero_like(params), 0};
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state,
               const AdamConfig& cfg) {
  check_shapes(params, grads);
  check_shapes(params, state.m);
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  NetworkParams& g = const_cast<NetworkParams&>(grads);
  for_each_tensor(
      [&](auto& p, auto& grad, auto& m, auto& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v.array() = cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square();
        p.array() -=
            cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
      },
      params, g, state.m, state.v);
}

void sync_target(const NetworkParams& source, NetworkParams& target) {
  check_shapes(source, target);
  target = source;
}

namespace {

constexpr char kMagic[8] = {'A', 'S', 'V', 'Q', 'N', 'T', '0', '1'};

void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ConfigError("checkpoint: truncated file");
  return v;
}

void write_params(std::ostream& out, const NetworkParams& params) {
  NetworkParams& p = const_cast<NetworkParams&>(params);
  for_each_tensor(
      [&](auto& t) {
        write_i64(out, t.rows());
        write_i64(out, t.cols());
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(sizeof(double) * t.size()));
      },
      p);
}

void read_params(std::istream& in, NetworkParams& params) {
  for_each_tensor(
      [&](auto& t) {
        const auto rows = read_i64(in);
        const auto cols = read_i64(in);
        if (rows != t.rows() || cols != t.cols())
          throw ConfigError("checkpoint: tensor shape mismatch");
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(double) * t.size()));
        if (!in) throw ConfigError("checkpoint: truncated tensor data");
      },
      params);
}

NetworkParams shape_from_config(const NetConfig& cfg) {
  std::mt19937_64 rng(0);
  return init_params(cfg, rng);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const NetConfig& c = ckpt.params.cfg;
  for (int v : {c.os_dim, c.ts_dim, c.hidden, c.history, c.actions})
    write_i64(out, v);
  write_i64(out, ckpt.has_adam ? 1 : 0);
  write_i64(out, ckpt.train_step);
  write_params(out, ckpt.params);
  if (ckpt.has_adam) {
    write_i64(out, ckpt.adam.t);
    write_params(out, ckpt.adam.m);
    write_params(out, ckpt.adam.v);
  }
  if (!out) throw ConfigError("checkpoint: write failure on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ConfigError("checkpoint: bad magic in " + path);
  NetConfig cfg;
  cfg.os_dim = static_cast<int>(read_i64(in));
  cfg.ts_dim = static_cast<int>(read_i64(in));
  cfg.hidden = static_cast<int>(read_i64(in));
  cfg.history = static_cast<int>(read_i64(in));
  cfg.actions = static_cast<int>(read_i64(in));

  Checkpoint ckpt;
  ckpt.has_adam = read_i64(in) != 0;
  ckpt.train_step = read_i64(in);
  ckpt.params = shape_from_config(cfg);
  read_params(in, ckpt.params);
  if (ckpt.has_adam) {
    ckpt.adam.m = zero_like(ckpt.params);
    ckpt.adam.v = zero_like(ckpt.params);
    ckpt.adam.t = read_i64(in);
    read_params(in, ckpt.adam.m);
    read_params(in, ckpt.adam.v);
  } else {
    ckpt.adam = make_adam_state(ckpt.params);
  }
  return ckpt;
}

}  // namespace asv::qnet
