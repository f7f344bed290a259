#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "erirbm/dataset.hpp"
#include "erirbm/matrix.hpp"

namespace erirbm {

// Bernoulli RBM parameters. Rows of W are filters, each reshapeable to a
// filter_width x filter_height raster.
struct RbmModel {
  Mat W;                  // H x V
  std::vector<double> b;  // hidden bias, H
  std::vector<double> c;  // visible bias, V
  int filter_width = 0;
  int filter_height = 0;

  std::size_t hidden_count() const { return W.rows; }
  std::size_t visible_count() const { return W.cols; }
};

struct TrainConfig {
  double eta = 1e-3;             // learning rate
  double alpha = 0.9;            // momentum
  int epochs = 200;
  int cd_k = 1;
  int batch_size = 100;
  std::uint64_t seed = 42;
  double weight_init_std = 0.01;
  double share_scale = 1.0;      // scales shared rotated gradients; 1.0 = plain addition

  void validate() const {
    if (eta < 0.0) throw std::invalid_argument("TrainConfig: eta must be nonnegative");
    if (alpha < 0.0 || alpha >= 1.0) throw std::invalid_argument("TrainConfig: alpha must be in [0,1)");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be nonnegative");
    if (cd_k < 1) throw std::invalid_argument("TrainConfig: cd_k must be at least 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be at least 1");
    if (weight_init_std < 0.0) throw std::invalid_argument("TrainConfig: weight_init_std must be nonnegative");
  }
};

struct CdGradients {
  Mat dW;
  std::vector<double> db;
  std::vector<double> dc;
  std::size_t batch_count = 0;
};

using Batch = std::vector<std::span<const double>>;
using EpochCallback = std::function<void(int epoch, double recon_error, double seconds)>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void hidden_probs_into(const Mat& W, std::span<const double> b, std::span<const double> v,
                              std::span<double> out) {
  for (std::size_t k = 0; k < W.rows; ++k) out[k] = sigmoid(b[k] + dot(W.row(k), v));
}

inline void visible_probs_into(const Mat& W, std::span<const double> c, std::span<const double> h,
                               std::span<double> out) {
  std::copy(c.begin(), c.end(), out.begin());
  for (std::size_t k = 0; k < W.rows; ++k) {
    const double hk = h[k];
    if (hk == 0.0) continue;  // binary hidden draws make this common
    const auto row = W.row(k);
    for (std::size_t j = 0; j < W.cols; ++j) out[j] += hk * row[j];
  }
  for (auto& x : out) x = sigmoid(x);
}

// p(h_k = 1 | v) = sigm(b_k + W_k. v)
inline std::vector<double> hidden_probs(const RbmModel& m, std::span<const double> v) {
  if (v.size() != m.visible_count()) throw std::invalid_argument("hidden_probs: wrong input length");
  std::vector<double> out(m.hidden_count());
  hidden_probs_into(m.W, m.b, v, out);
  return out;
}

// p(v_j = 1 | h) = sigm(c_j + h^T W_.j)
inline std::vector<double> visible_probs(const RbmModel& m, std::span<const double> h) {
  if (h.size() != m.hidden_count()) throw std::invalid_argument("visible_probs: wrong input length");
  std::vector<double> out(m.visible_count());
  visible_probs_into(m.W, m.c, h, out);
  return out;
}

// E(v,h) = -h^T W v - c^T v - b^T h
inline double energy(const RbmModel& m, std::span<const double> v, std::span<const double> h) {
  if (v.size() != m.visible_count() || h.size() != m.hidden_count())
    throw std::invalid_argument("energy: vector lengths do not match model");
  double hWv = 0.0;
  for (std::size_t k = 0; k < m.hidden_count(); ++k) hWv += h[k] * dot(m.W.row(k), v);
  return -hWv - dot(m.c, v) - dot(m.b, h);
}

inline double cross_entropy(std::span<const double> target, std::span<const double> prob) {
  double ce = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double p = std::clamp(prob[i], 1e-12, 1.0 - 1e-12);
    ce -= target[i] * std::log(p) + (1.0 - target[i]) * std::log1p(-p);
  }
  return ce;
}

inline CdGradients make_zero_gradients(std::size_t hidden, std::size_t visible) {
  return CdGradients{Mat(hidden, visible), std::vector<double>(hidden, 0.0),
                     std::vector<double>(visible, 0.0), 0};
}

inline void reset_gradients(CdGradients& g) {
  g.dW.fill(0.0);
  g.db.assign(g.db.size(), 0.0);
  g.dc.assign(g.dc.size(), 0.0);
  g.batch_count = 0;
}

// Sum over the batch of p(h|v) v^T plus the bias terms; the data-dependent
// half of the CD statistics, deterministic given the batch.
inline void positive_statistics(const Mat& W, std::span<const double> b, const Batch& batch,
                                CdGradients& out) {
  const std::size_t H = W.rows;
  const std::size_t V = W.cols;
  std::vector<double> hp(H);
  for (const auto v0 : batch) {
    if (v0.size() != V) throw std::invalid_argument("positive_statistics: sample length mismatch");
    hidden_probs_into(W, b, v0, hp);
    for (std::size_t k = 0; k < H; ++k) {
      const double hk = hp[k];
      auto drow = out.dW.row(k);
      for (std::size_t j = 0; j < V; ++j) drow[j] += hk * v0[j];
      out.db[k] += hk;
    }
    for (std::size_t j = 0; j < V; ++j) out.dc[j] += v0[j];
  }
  out.batch_count += batch.size();
}

namespace detail {

// Accumulates CD-k statistic sums (positive minus negative) into `out` and
// returns the summed reconstruction cross-entropy of the first alternation.
// Negative phase: sample hidden states, keep visible probabilities as the
// next input, final hidden term uses probabilities.
inline double cd_accumulate(const Mat& W, std::span<const double> b, std::span<const double> c,
                            const Batch& batch, int k, std::mt19937_64& rng, CdGradients& out) {
  const std::size_t H = W.rows;
  const std::size_t V = W.cols;
  std::vector<double> hp(H), hbin(H), vprob(V);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double ce_sum = 0.0;
  for (const auto v0 : batch) {
    if (v0.size() != V) throw std::invalid_argument("cd_accumulate: sample length mismatch");
    hidden_probs_into(W, b, v0, hp);
    for (std::size_t kk = 0; kk < H; ++kk) {
      const double hk = hp[kk];
      auto drow = out.dW.row(kk);
      for (std::size_t j = 0; j < V; ++j) drow[j] += hk * v0[j];
      out.db[kk] += hk;
    }
    for (std::size_t j = 0; j < V; ++j) out.dc[j] += v0[j];

    std::span<const double> vcur = v0;
    for (int step = 0; step < k; ++step) {
      for (std::size_t kk = 0; kk < H; ++kk) hbin[kk] = unif(rng) < hp[kk] ? 1.0 : 0.0;
      visible_probs_into(W, c, hbin, vprob);
      if (step == 0) ce_sum += cross_entropy(v0, vprob);
      vcur = vprob;
      hidden_probs_into(W, b, vcur, hp);
    }
    for (std::size_t kk = 0; kk < H; ++kk) {
      const double hk = hp[kk];
      auto drow = out.dW.row(kk);
      for (std::size_t j = 0; j < V; ++j) drow[j] -= hk * vcur[j];
      out.db[kk] -= hk;
    }
    for (std::size_t j = 0; j < V; ++j) out.dc[j] -= vcur[j];
  }
  out.batch_count += batch.size();
  return ce_sum;
}

}  // namespace detail

inline void finalize_means(CdGradients& g) {
  const double n = double(g.batch_count);
  for (auto& x : g.dW.data) x /= n;
  for (auto& x : g.db) x /= n;
  for (auto& x : g.dc) x /= n;
}

// Mean CD-k gradients over the batch; ascent direction for the data
// log-likelihood.
inline CdGradients cd_gradients(const RbmModel& m, const Batch& batch, int k,
                                std::mt19937_64& rng) {
  if (batch.empty()) throw std::invalid_argument("cd_gradients: empty batch");
  if (k < 1) throw std::invalid_argument("cd_gradients: k must be at least 1");
  CdGradients g = make_zero_gradients(m.hidden_count(), m.visible_count());
  detail::cd_accumulate(m.W, m.b, m.c, batch, k, rng, g);
  finalize_means(g);
  return g;
}

struct RbmVelocity {
  Mat vW;
  std::vector<double> vb;
  std::vector<double> vc;
};

inline RbmVelocity make_zero_velocity(const RbmModel& m) {
  return RbmVelocity{Mat(m.hidden_count(), m.visible_count()),
                     std::vector<double>(m.hidden_count(), 0.0),
                     std::vector<double>(m.visible_count(), 0.0)};
}

// velocity = alpha * velocity + eta * gradient; parameter += velocity
inline void momentum_step(std::span<double> param, std::span<double> vel,
                          std::span<const double> grad, double eta, double alpha) {
  if (param.size() != vel.size() || param.size() != grad.size())
    throw std::invalid_argument("momentum_step: shape mismatch");
  for (std::size_t i = 0; i < param.size(); ++i) {
    vel[i] = alpha * vel[i] + eta * grad[i];
    param[i] += vel[i];
  }
}

inline void sgd_step(RbmModel& m, const CdGradients& g, RbmVelocity& vel, const TrainConfig& cfg) {
  check_same_shape(m.W, g.dW, "sgd_step");
  check_same_shape(m.W, vel.vW, "sgd_step");
  momentum_step(m.W.data, vel.vW.data, g.dW.data, cfg.eta, cfg.alpha);
  momentum_step(m.b, vel.vb, g.db, cfg.eta, cfg.alpha);
  momentum_step(m.c, vel.vc, g.dc, cfg.eta, cfg.alpha);
}

inline RbmModel init_rbm(int hidden, int w, int h, double weight_init_std, std::mt19937_64& rng) {
  if (hidden < 1) throw std::invalid_argument("init_rbm: need at least one hidden unit");
  RbmModel m;
  m.filter_width = w;
  m.filter_height = h;
  const std::size_t V = std::size_t(w) * h;
  m.W = Mat(std::size_t(hidden), V);
  std::normal_distribution<double> nd(0.0, weight_init_std);
  for (auto& x : m.W.data) x = nd(rng);
  m.b.assign(std::size_t(hidden), 0.0);
  m.c.assign(V, 0.0);
  return m;
}

inline void require_binary_images(const Dataset& d) {
  if (d.size() == 0) throw std::invalid_argument("training requires a nonempty dataset");
  const int w = d.images[0].width;
  const int h = d.images[0].height;
  for (const Image& img : d.images) {
    if (img.width != w || img.height != h)
      throw std::invalid_argument("training requires images of identical dimensions");
    for (double p : img.pixels)
      if (p != 0.0 && p != 1.0)
        throw std::invalid_argument("training requires a binarized dataset");
  }
}

// CD training with SGD + momentum over seeded shuffled minibatches. The
// callback receives the per-epoch mean reconstruction cross-entropy.
inline RbmModel train_rbm(const Dataset& d, int hidden, const TrainConfig& cfg,
                          const EpochCallback& log = {}) {
  cfg.validate();
  require_binary_images(d);
  std::mt19937_64 rng(cfg.seed);
  RbmModel m = init_rbm(hidden, d.images[0].width, d.images[0].height, cfg.weight_init_std, rng);
  RbmVelocity vel = make_zero_velocity(m);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  Batch batch;
  CdGradients g = make_zero_gradients(m.hidden_count(), m.visible_count());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double ce = 0.0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(d.images[order[i]].pixels);
      reset_gradients(g);
      ce += detail::cd_accumulate(m.W, m.b, m.c, batch, cfg.cd_k, rng, g);
      finalize_means(g);
      sgd_step(m, g, vel, cfg);
    }
    if (log) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      log(epoch, ce / double(d.size()), dt.count());
    }
  }
  return m;
}

// Hidden probabilities of the flattened image.
inline std::vector<double> features(const RbmModel& m, const Image& img) {
  if (img.size() != m.visible_count())
    throw std::invalid_argument("features: image size does not match model");
  return hidden_probs(m, img.pixels);
}

}  // namespace erirbm
