#include "ousb/fm.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "ousb/kernels.hpp"

namespace ousb {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch <= 0 || learning_rate <= 0.0 || iterations <= 0)
    throw std::invalid_argument("TrainConfig: batch, learning rate, iterations must be positive");
  if (sinkhorn_epsilon <= 0.0 || cache_grid < 2 || hidden_width <= 0)
    throw std::invalid_argument("TrainConfig: invalid sinkhorn/cache/network settings");
}

namespace {

// One draw from N(mu_{t|(x0,xT)}, Omega_t) given a standard normal xi.
Vector bridge_point_sample(const KernelCache& cache, const Vector& x0, const Vector& xT, double t,
                           const Vector& xi) {
  const OUProcess& p = cache.process();
  const double T = cache.horizon();
  const Matrix phi_t = cache.phi(t);
  const Matrix e_rem = cache.exp_drift(T - t);
  const Matrix gain = phi_t * e_rem.transpose() * cache.phi_T_inverse();
  const Vector mu_t = cache.exp_drift(t) * (x0 - p.target) + p.target;
  const Vector mu_T = cache.exp_drift(T) * (x0 - p.target) + p.target;
  const Vector mean = mu_t + gain * (xT - mu_T);
  const Matrix omega = symmetrize(phi_t - gain * e_rem * phi_t);
  SymEig eig = sym_eig(omega);
  const Vector roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return mean +
         eig.vectors * (roots.array() * (eig.vectors.transpose() * xi).array()).matrix();
}

}  // namespace

CfmLoss cfm_loss(const FeedForwardNet& flow, const FeedForwardNet& score,
                 const std::vector<CfmItem>& items, ScoreWeight weight_mode, double weight_value) {
  const int batch = static_cast<int>(items.size());
  if (batch == 0) throw std::invalid_argument("cfm_loss: empty batch");
  const int d = static_cast<int>(items[0].z.size());

  Matrix inputs(batch, d + 1);
  Matrix flow_target(batch, d), score_target(batch, d);
  Vector lambdas(batch);
  par::parallel_for(batch, [&](int64_t j) {
    const CfmItem& it = items[j];
    inputs(j, 0) = it.t_norm;
    inputs.block(j, 1, 1, d) = it.z.transpose();
    const double tc = it.cache->clamp_time(it.t);
    // z was supplied by the caller; recompute only the targets at z.
    const OUProcess& p = it.cache->process();
    const double T = it.cache->horizon();
    const Matrix phi_t = it.cache->phi(tc);
    const Matrix e_rem = it.cache->exp_drift(T - tc);
    const Matrix gain = phi_t * e_rem.transpose() * it.cache->phi_T_inverse();
    const Vector mu_t = it.cache->exp_drift(tc) * (it.x0 - p.target) + p.target;
    const Vector mu_T = it.cache->exp_drift(T) * (it.x0 - p.target) + p.target;
    const Vector mean = mu_t + gain * (it.xT - mu_T);
    const Matrix omega = symmetrize(phi_t - gain * e_rem * phi_t);
    SymEig eig = sym_eig(omega);
    const double lmax = eig.values.maxCoeff();
    if (!(lmax > 0.0)) throw DegenerateError("cfm_loss: Omega_t singular after clamp");
    const Vector clamped = eig.values.cwiseMax(kEigClampRel * lmax);
    const Vector score_rhs = eig.vectors.transpose() * (mean - it.z);
    const Vector s_t = eig.vectors * (score_rhs.array() / clamped.array()).matrix();

    const Vector k_t = it.cache->exp_drift_neg(T - tc) * (it.xT - p.target) + p.target;
    SymEig lam_eig = sym_eig(it.cache->lam(tc));
    const double lam_max = lam_eig.values.maxCoeff();
    if (!(lam_max > 0.0) || lam_eig.values.minCoeff() < 1e-14 * lam_max)
      throw DegenerateError("cfm_loss: Lambda_t singular inside the clamp");
    const Vector ctrl_rhs = lam_eig.vectors.transpose() * (k_t - it.z);
    const Vector control = lam_eig.vectors * (ctrl_rhs.array() / lam_eig.values.array()).matrix();
    const Vector u_t = p.drift * (it.z - p.target) + control - p.diffusivity() * s_t;

    flow_target.row(j) = u_t.transpose();
    score_target.row(j) = s_t.transpose();
    lambdas[j] = weight_mode == ScoreWeight::kConstant ? weight_value
                                                       : omega.trace() / static_cast<double>(d);
  });

  NetTape flow_tape, score_tape;
  const Matrix flow_out = net_forward(flow, inputs, &flow_tape);
  const Matrix score_out = net_forward(score, inputs, &score_tape);
  const Matrix flow_res = flow_out - flow_target;
  const Matrix score_res = score_out - score_target;

  CfmLoss out;
  double total = 0.0;
  for (int j = 0; j < batch; ++j)
    total += flow_res.row(j).squaredNorm() + lambdas[j] * score_res.row(j).squaredNorm();
  out.value = total / batch;

  const double scale = 2.0 / batch;
  out.flow_grads = net_backward(flow, flow_tape, scale * flow_res);
  const Matrix weighted_res = (score_res.array().colwise() * lambdas.array()).matrix();
  out.score_grads = net_backward(score, score_tape, scale * weighted_res);
  return out;
}

CfmLoss cfm_loss(const FeedForwardNet& flow, const FeedForwardNet& score, const KernelCache& cache,
                 std::vector<CfmItem> items, ScoreWeight weight_mode, double weight_value) {
  for (auto& item : items) {
    item.cache = &cache;
    item.t_norm = item.t / cache.horizon();
  }
  return cfm_loss(flow, score, items, weight_mode, weight_value);
}

namespace {

struct Segment {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::shared_ptr<const KernelCache> cache;
  const Matrix* x0 = nullptr;
  const Matrix* xT = nullptr;
  std::vector<double> cumulative;
  int plan_cols = 0;
};

}  // namespace

Checkpoint train(const std::vector<Snapshot>& snapshots, const OUProcess& process,
                 const TrainConfig& config) {
  config.validate();
  if (snapshots.size() < 2) throw std::invalid_argument("train: need at least 2 snapshots");
  const int d = process.dim;
  for (size_t k = 0; k < snapshots.size(); ++k) {
    if (snapshots[k].samples.cols() != d)
      throw std::invalid_argument("train: snapshot dimension does not match process");
    if (snapshots[k].samples.rows() < 1) throw std::invalid_argument("train: empty snapshot");
    if (k > 0 && !(snapshots[k].time > snapshots[k - 1].time))
      throw std::invalid_argument("train: snapshot times must strictly increase");
  }

  // Independent pairwise couplings between consecutive snapshots.
  std::vector<Segment> segments(snapshots.size() - 1);
  for (size_t k = 0; k + 1 < snapshots.size(); ++k) {
    Segment& seg = segments[k];
    seg.t_begin = snapshots[k].time;
    seg.t_end = snapshots[k + 1].time;
    seg.cache = std::make_shared<KernelCache>(process, seg.t_end - seg.t_begin, config.cache_grid);
    seg.x0 = &snapshots[k].samples;
    seg.xT = &snapshots[k + 1].samples;
    const int n = static_cast<int>(seg.x0->rows());
    const int m = static_cast<int>(seg.xT->rows());
    const Matrix cost = mvou_cost(*seg.cache, *seg.x0, *seg.xT);
    Coupling coupling =
        sinkhorn(cost, Vector::Constant(n, 1.0 / n), Vector::Constant(m, 1.0 / m),
                 config.sinkhorn_epsilon, config.sinkhorn_max_iters, config.sinkhorn_tol);
    if (!coupling.converged)
      throw DegenerateError("train: Sinkhorn did not converge on segment " + std::to_string(k) +
                            " (marginal error " + std::to_string(coupling.marginal_error) + ")");
    seg.cumulative = coupling_cumulative(coupling);
    seg.plan_cols = m;
  }

  const double t_begin = snapshots.front().time;
  const double t_end = snapshots.back().time;
  const double span = t_end - t_begin;

  Rng master(config.seed);
  std::vector<int> widths = {d + 1, config.hidden_width, config.hidden_width, config.hidden_width,
                             d};
  FeedForwardNet flow = FeedForwardNet::create(widths, master);
  FeedForwardNet score = FeedForwardNet::create(widths, master);
  AdamW opt_flow{config.learning_rate, config.beta1, config.beta2, config.adam_eps,
                 config.weight_decay};
  AdamW opt_score = opt_flow;
  opt_flow.init(flow);
  opt_score.init(score);

  std::vector<CfmItem> items(config.batch);
  std::vector<double> losses;
  losses.reserve(config.iterations);

  for (int iter = 0; iter < config.iterations; ++iter) {
    // All randomness is drawn serially from the master stream; workers only
    // evaluate targets.
    for (int j = 0; j < config.batch; ++j) {
      const double t_global = t_begin + span * master.uniform();
      size_t seg_idx = 0;
      while (seg_idx + 1 < segments.size() && t_global >= segments[seg_idx].t_end) ++seg_idx;
      Segment& seg = segments[seg_idx];
      const auto cell = sample_coupling_cell(seg.cumulative, seg.plan_cols, master);
      const Vector xi = master.normal_vector(d);

      CfmItem& it = items[j];
      it.cache = seg.cache.get();
      it.t = seg.cache->clamp_time(t_global - seg.t_begin);
      it.t_norm = span > 0.0 ? (t_global - t_begin) / span : 0.0;
      it.x0 = seg.x0->row(cell.first).transpose();
      it.xT = seg.xT->row(cell.second).transpose();
      it.z = bridge_point_sample(*seg.cache, it.x0, it.xT, it.t, xi);
    }
    CfmLoss loss = cfm_loss(flow, score, items, config.score_weight, config.score_weight_value);
    opt_flow.update(flow, loss.flow_grads);
    opt_score.update(score, loss.score_grads);
    losses.push_back(loss.value);
  }

  const int tail = std::max(1, config.iterations / 10);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < tail; ++i) first += losses[i];
  for (int i = config.iterations - tail; i < config.iterations; ++i) last += losses[i];

  Checkpoint ckpt;
  ckpt.arch = widths;
  ckpt.flow_net = std::move(flow);
  ckpt.score_net = std::move(score);
  ckpt.process = process;
  ckpt.t_begin = t_begin;
  ckpt.t_end = t_end;
  ckpt.seed = config.seed;
  ckpt.iterations = config.iterations;
  ckpt.loss_first = first / tail;
  ckpt.loss_last = last / tail;
  for (const auto& s : snapshots) ckpt.snapshot_times.push_back(s.time);
  return ckpt;
}

Vector sb_drift(const Checkpoint& checkpoint, double t, const Vector& x) {
  const double span = checkpoint.t_end - checkpoint.t_begin;
  const double t_norm = span > 0.0 ? (t - checkpoint.t_begin) / span : 0.0;
  const Vector u = net_forward(checkpoint.flow_net, t_norm, x);
  const Vector s = net_forward(checkpoint.score_net, t_norm, x);
  return u + checkpoint.process.diffusivity() * s;
}

Matrix sb_drift_batch(const Checkpoint& checkpoint, double t, const Matrix& x_rows) {
  const double span = checkpoint.t_end - checkpoint.t_begin;
  const double t_norm = span > 0.0 ? (t - checkpoint.t_begin) / span : 0.0;
  Matrix inputs(x_rows.rows(), x_rows.cols() + 1);
  inputs.col(0).setConstant(t_norm);
  inputs.rightCols(x_rows.cols()) = x_rows;
  const Matrix u = net_forward(checkpoint.flow_net, inputs);
  const Matrix s = net_forward(checkpoint.score_net, inputs);
  return u + s * checkpoint.process.diffusivity().transpose();
}

namespace {

json net_to_json(const FeedForwardNet& net) {
  json layers = json::array();
  for (int l = 0; l < net.layer_count(); ++l) {
    json layer;
    json w = json::array();
    for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j) w.push_back(net.weights[l](i, j));
    layer["W"] = std::move(w);
    layer["b"] = std::vector<double>(net.biases[l].data(),
                                     net.biases[l].data() + net.biases[l].size());
    layers.push_back(std::move(layer));
  }
  return layers;
}

FeedForwardNet net_from_json(const json& layers, const std::vector<int>& widths) {
  FeedForwardNet net;
  net.widths = widths;
  if (layers.size() + 1 != widths.size()) throw DataError("checkpoint: layer count mismatch");
  for (size_t l = 0; l < layers.size(); ++l) {
    const int rows = widths[l + 1], cols = widths[l];
    const auto& w = layers[l].at("W");
    if (static_cast<int>(w.size()) != rows * cols)
      throw DataError("checkpoint: layer weight size mismatch");
    Matrix weight(rows, cols);
    int k = 0;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) weight(i, j) = w[k++].get<double>();
    const auto& b = layers[l].at("b");
    if (static_cast<int>(b.size()) != rows) throw DataError("checkpoint: layer bias size mismatch");
    Vector bias(rows);
    for (int i = 0; i < rows; ++i) bias[i] = b[i].get<double>();
    net.weights.push_back(std::move(weight));
    net.biases.push_back(std::move(bias));
  }
  return net;
}

}  // namespace

void to_json(json& j, const Checkpoint& c) {
  j = json{{"arch", c.arch},
           {"u", net_to_json(c.flow_net)},
           {"s", net_to_json(c.score_net)},
           {"process", c.process},
           {"meta",
            {{"t_begin", c.t_begin},
             {"t_end", c.t_end},
             {"seed", c.seed},
             {"iterations", c.iterations},
             {"loss_first", c.loss_first},
             {"loss_last", c.loss_last},
             {"snapshot_times", c.snapshot_times}}}};
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  for (const char* key : {"arch", "u", "s", "process", "meta"})
    if (!j.contains(key)) throw DataError(std::string("checkpoint: missing key '") + key + "'");
  c.arch = j.at("arch").get<std::vector<int>>();
  c.flow_net = net_from_json(j.at("u"), c.arch);
  c.score_net = net_from_json(j.at("s"), c.arch);
  c.process = process_from_json(j.at("process"));
  const auto& meta = j.at("meta");
  c.t_begin = meta.at("t_begin").get<double>();
  c.t_end = meta.at("t_end").get<double>();
  c.seed = meta.at("seed").get<uint64_t>();
  c.iterations = meta.at("iterations").get<int>();
  c.loss_first = meta.at("loss_first").get<double>();
  c.loss_last = meta.at("loss_last").get<double>();
  c.snapshot_times = meta.at("snapshot_times").get<std::vector<double>>();
  return c;
}

}  // namespace ousb
