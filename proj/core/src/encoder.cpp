#include "bridgeplan/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bridgeplan {
namespace {

// Forward state of one batch member, kept for the backward pass.
struct MemberState {
  MlpBlock::Trace point_t, point_0, point_T, ctx, point_u, engage;
  LatentVec z_t, z0, zT, zu;
  double delta = 0.0;
  double a = 0.0;  // 1 - t/T
  double b = 0.0;  // t/T
  double slope = 0.0;
  GaussParams bridge;
};

MemberState forward_member(const TupleSample& s, const EncoderParams& p,
                           const BridgeConfig& cfg, const Featurizer& feat) {
  MemberState st;
  st.z_t = p.point.forward(feat(s.st_text), st.point_t);
  st.z0 = p.point.forward(feat(s.s0_text), st.point_0);
  st.zT = p.point.forward(feat(s.sT_text), st.point_T);
  const std::vector<double> c = p.feedback.forward(feat(s.u_text), st.ctx);
  st.zu = p.point.forward(c, st.point_u);
  st.delta = logistic(p.engagement.forward(c, st.engage)[0]);
  st.b = static_cast<double>(s.t) / static_cast<double>(s.T);
  st.a = 1.0 - st.b;
  st.slope = decay_slope(s.t, s.T, cfg);
  st.bridge = perturbed_bridge(st.z0, st.zT, st.zu, st.delta, s.t, s.T, cfg);
  if (!(st.bridge.var > 0.0)) {
    throw std::invalid_argument("bridge variance is zero for tuple of dialogue '" +
                                s.dialogue_id + "' at t=" + std::to_string(s.t));
  }
  return st;
}

// Scores of item i: index 0 is the positive, then its negatives in order.
std::vector<double> item_scores(const Batch& batch, std::size_t i,
                                const std::vector<MemberState>& states) {
  std::vector<double> scores;
  scores.reserve(batch.negatives[i].size() + 1);
  scores.push_back(alignment_score(states[i].z_t, states[i].bridge));
  for (std::size_t j : batch.negatives[i]) {
    scores.push_back(alignment_score(states[j].z_t, states[i].bridge));
  }
  return scores;
}

void check_batch(const Batch& batch) {
  if (batch.items.empty()) throw std::invalid_argument("empty batch");
  if (batch.negatives.size() != batch.items.size()) {
    throw std::invalid_argument("batch negatives do not match items");
  }
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    if (batch.negatives[i].empty()) {
      throw std::invalid_argument("batch item " + std::to_string(i) + " has no negatives");
    }
  }
}

double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

struct BatchForward {
  std::vector<MemberState> states;
  std::vector<std::vector<double>> scores;
  double loss = 0.0;
};

BatchForward forward_batch(const Batch& batch, const EncoderParams& params,
                           const BridgeConfig& cfg, const Featurizer& feat) {
  check_batch(batch);
  BatchForward fw;
  fw.states.reserve(batch.items.size());
  for (const TupleSample& s : batch.items) fw.states.push_back(forward_member(s, params, cfg, feat));
  double total = 0.0;
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    fw.scores.push_back(item_scores(batch, i, fw.states));
    const auto& sc = fw.scores.back();
    total += info_nce(sc[0], std::span<const double>(sc).subspan(1));
  }
  fw.loss = total / static_cast<double>(batch.items.size());
  return fw;
}

}  // namespace

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

EncoderParams EncoderParams::zeros(std::size_t m, std::size_t d,
                                   std::size_t hidden) {
  EncoderParams p;
  p.m = m;
  p.d = d;
  p.hidden = hidden;
  p.point = MlpBlock(m, hidden, d);
  p.feedback = MlpBlock(m, hidden, m);
  p.engagement = MlpBlock(m, hidden, 1);
  return p;
}

EncoderParams EncoderParams::init(std::size_t m, std::size_t d,
                                  std::uint64_t seed, std::size_t hidden) {
  EncoderParams p = zeros(m, d, hidden);
  p.seed = seed;
  Rng rng(seed);
  p.point.init_glorot(rng);
  p.feedback.init_glorot(rng);
  p.engagement.init_glorot(rng);
  return p;
}

std::size_t EncoderParams::num_params() const {
  return point.num_params() + feedback.num_params() + engagement.num_params();
}

EncoderGradients::EncoderGradients(const EncoderParams& p)
    : point(p.point.num_params(), 0.0),
      feedback(p.feedback.num_params(), 0.0),
      engagement(p.engagement.num_params(), 0.0) {}

LatentVec encode_point(std::string_view text, const EncoderParams& params,
                       const Featurizer& featurizer) {
  return params.point.forward(featurizer(text));
}

LatentVec encode_point(std::string_view text, const EncoderParams& params) {
  return encode_point(text, params, Featurizer(params.m));
}

Feedback encode_feedback(std::string_view u_text, const EncoderParams& params,
                         const Featurizer& featurizer) {
  const std::vector<double> c = params.feedback.forward(featurizer(u_text));
  Feedback fb;
  fb.zu = params.point.forward(c);
  fb.delta_u = logistic(params.engagement.forward(c)[0]);
  return fb;
}

Feedback encode_feedback(std::string_view u_text, const EncoderParams& params) {
  return encode_feedback(u_text, params, Featurizer(params.m));
}

GaussParams tuple_bridge(const TupleSample& tuple, const EncoderParams& params,
                         const BridgeConfig& cfg, const Featurizer& featurizer) {
  const LatentVec z0 = encode_point(tuple.s0_text, params, featurizer);
  const LatentVec zT = encode_point(tuple.sT_text, params, featurizer);
  const Feedback fb = encode_feedback(tuple.u_text, params, featurizer);
  return perturbed_bridge(z0, zT, fb.zu, fb.delta_u, tuple.t, tuple.T, cfg);
}

double info_nce(double positive, std::span<const double> negatives) {
  std::vector<double> all;
  all.reserve(negatives.size() + 1);
  all.push_back(positive);
  all.insert(all.end(), negatives.begin(), negatives.end());
  return log_sum_exp(all) - positive;
}

double contrastive_loss(const Batch& batch, const EncoderParams& params,
                        const BridgeConfig& cfg, const Featurizer& featurizer) {
  return forward_batch(batch, params, cfg, featurizer).loss;
}

LossAndGradients loss_gradients(const Batch& batch, const EncoderParams& params,
                                const BridgeConfig& cfg,
                                const Featurizer& featurizer) {
  BatchForward fw = forward_batch(batch, params, cfg, featurizer);
  const std::size_t n = batch.items.size();
  const std::size_t d = params.d;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Upstream gradients on each member's latents and bridge.
  std::vector<LatentVec> g_zt(n, LatentVec(d, 0.0));
  std::vector<LatentVec> g_mu(n, LatentVec(d, 0.0));
  std::vector<double> g_var(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& sc = fw.scores[i];
    const double lse = log_sum_exp(sc);
    const GaussParams& br = fw.states[i].bridge;
    for (std::size_t k = 0; k < sc.size(); ++k) {
      const std::size_t member = k == 0 ? i : batch.negatives[i][k - 1];
      // dLoss/dscore: softmax weight minus the positive indicator.
      const double g = (std::exp(sc[k] - lse) - (k == 0 ? 1.0 : 0.0)) * inv_n;
      if (g == 0.0) continue;
      const LatentVec& z = fw.states[member].z_t;
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = z[c] - br.mu[c];
        sq += diff * diff;
        const double dz = -g * diff / br.var;
        g_zt[member][c] += dz;
        g_mu[i][c] -= dz;
      }
      g_var[i] += g * sq / (2.0 * br.var * br.var);
    }
  }

  LossAndGradients out;
  out.loss = fw.loss;
  out.grads = EncoderGradients(params);
  LatentVec tmp(d);
  for (std::size_t i = 0; i < n; ++i) {
    MemberState& st = fw.states[i];
    params.point.backward(st.point_t, g_zt[i], out.grads.point);

    for (std::size_t c = 0; c < d; ++c) tmp[c] = st.a * g_mu[i][c];
    params.point.backward(st.point_0, tmp, out.grads.point);
    std::vector<double> g_ctx = params.point.backward(st.point_u, tmp, out.grads.point);

    for (std::size_t c = 0; c < d; ++c) tmp[c] = st.b * g_mu[i][c];
    params.point.backward(st.point_T, tmp, out.grads.point);

    const double g_delta = g_var[i] * st.slope;
    const double g_pre = g_delta * st.delta * (1.0 - st.delta);
    const double g_engage[1] = {g_pre};
    std::vector<double> g_ctx2 = params.engagement.backward(st.engage, g_engage, out.grads.engagement);
    for (std::size_t k = 0; k < g_ctx.size(); ++k) g_ctx[k] += g_ctx2[k];
    params.feedback.backward(st.ctx, g_ctx, out.grads.feedback);
  }
  return out;
}

EncoderTrainResult train_encoder(const Corpus& corpus,
                                 const EncoderTrainConfig& train_cfg,
                                 const BridgeConfig& bridge_cfg,
                                 const Featurizer& featurizer) {
  return train_encoder(
      build_all_tuples(corpus),
      EncoderParams::init(featurizer.dim(), bridge_cfg.d, train_cfg.seed, train_cfg.hidden),
      train_cfg, bridge_cfg, featurizer);
}

EncoderTrainResult train_encoder(const std::vector<TupleSample>& tuples,
                                 EncoderParams init,
                                 const EncoderTrainConfig& train_cfg,
                                 const BridgeConfig& bridge_cfg,
                                 const Featurizer& featurizer) {
  bridge_cfg.validate();
  if (train_cfg.batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (init.m != featurizer.dim()) {
    throw std::invalid_argument("encoder feature dimension does not match featurizer");
  }
  EncoderTrainResult result;
  result.params = std::move(init);
  result.num_tuples = tuples.size();
  if (train_cfg.epochs <= 0) return result;
  if (tuples.size() < 2) throw std::invalid_argument("need at least 2 tuples to train");

  EncoderParams& p = result.params;
  Adam opt_point(p.point.num_params(), train_cfg.lr, train_cfg.beta1, train_cfg.beta2, train_cfg.eps);
  Adam opt_feedback(p.feedback.num_params(), train_cfg.lr, train_cfg.beta1, train_cfg.beta2, train_cfg.eps);
  Adam opt_engage(p.engagement.num_params(), train_cfg.lr, train_cfg.beta1, train_cfg.beta2, train_cfg.eps);

  Rng rng(train_cfg.seed ^ 0x5bd1e9955bd1e995ULL);
  std::vector<std::size_t> order(tuples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_total = 0.0;
    std::size_t num_batches = 0;
    for (std::size_t start = 0, batch_id = 0; start + 1 < order.size();
         start += train_cfg.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + train_cfg.batch_size);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      Batch full = make_batch(tuples, idx);
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < full.items.size(); ++i) {
        if (!full.negatives[i].empty()) keep.push_back(idx[i]);
      }
      if (keep.size() < 2) continue;
      const Batch batch = keep.size() == idx.size() ? std::move(full) : make_batch(tuples, keep);

      LossAndGradients lg = loss_gradients(batch, p, bridge_cfg, featurizer);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "non-finite contrastive loss at epoch " << epoch << ", batch " << batch_id;
        throw std::runtime_error(msg.str());
      }
      opt_point.step(p.point.params(), lg.grads.point);
      opt_feedback.step(p.feedback.params(), lg.grads.feedback);
      opt_engage.step(p.engagement.params(), lg.grads.engagement);
      epoch_total += lg.loss;
      ++num_batches;
    }
    if (num_batches == 0) throw std::invalid_argument("corpus yields no usable contrastive batch");
    result.epoch_loss.push_back(epoch_total / static_cast<double>(num_batches));
  }
  return result;
}

}  // namespace bridgeplan
