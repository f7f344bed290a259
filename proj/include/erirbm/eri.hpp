#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "erirbm/orientation.hpp"
#include "erirbm/rbm.hpp"

namespace erirbm {

// Orientation-indexed RBM: one weight matrix and hidden-bias vector per
// reference angle, one shared visible bias.
struct EriModel {
  std::vector<Mat> W;                  // S matrices, each H x V
  std::vector<std::vector<double>> b;  // S hidden-bias vectors
  std::vector<double> c;               // shared visible bias
  AngleSet angles;
  int filter_width = 0;
  int filter_height = 0;

  int bin_count() const { return angles.bins; }
  std::size_t hidden_count() const { return W.empty() ? 0 : W[0].rows; }
  std::size_t visible_count() const { return W.empty() ? 0 : W[0].cols; }
};

// Minibatch samples grouped by dominant-orientation index; groups[s-1] holds
// the vectors routed to matrix s, in batch order.
struct OrientedBatch {
  std::vector<Batch> groups;

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const Batch& g : groups) n += g.size();
    return n;
  }
};

struct AnnotationStats {
  std::vector<std::size_t> bin_counts;
  std::size_t degenerate_count = 0;
};

// Fills Dataset::orientation with the dominant index of each image.
// Orientation is a pure function of the pixels, so re-annotation is
// idempotent. Degenerate (gradient-free) images get index 1.
inline AnnotationStats annotate_orientations(Dataset& d, const AngleSet& aset) {
  AnnotationStats stats{std::vector<std::size_t>(static_cast<std::size_t>(aset.bins), 0), 0};
  d.orientation.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const OrientationEstimate est = dominant_orientation(d.images[i], aset);
    d.orientation[i] = est.index;
    ++stats.bin_counts[std::size_t(est.index - 1)];
    if (est.degenerate) ++stats.degenerate_count;
  }
  return stats;
}

struct OrientedGradients {
  std::vector<CdGradients> groups;  // per-s means over each group
  std::vector<double> dc;           // shared visible-bias gradient, size-weighted over groups
  std::size_t batch_count = 0;
  double recon_ce_sum = 0.0;
};

// Runs CD per orientation group against that group's weight matrix and
// hidden bias, with the shared visible bias. Groups are processed in
// ascending index order from the single RNG stream.
inline OrientedGradients oriented_cd(const EriModel& m, const OrientedBatch& batch, int k,
                                     std::mt19937_64& rng) {
  const int S = m.bin_count();
  if (batch.groups.size() != static_cast<std::size_t>(S))
    throw std::invalid_argument("oriented_cd: group count does not match angle set");
  const std::size_t total = batch.total_count();
  if (total == 0) throw std::invalid_argument("oriented_cd: empty batch");
  const std::size_t H = m.hidden_count();
  const std::size_t V = m.visible_count();

  OrientedGradients og;
  og.groups.reserve(std::size_t(S));
  og.dc.assign(V, 0.0);
  for (int s = 0; s < S; ++s) {
    CdGradients g = make_zero_gradients(H, V);
    const Batch& grp = batch.groups[std::size_t(s)];
    if (!grp.empty()) {
      og.recon_ce_sum += detail::cd_accumulate(m.W[std::size_t(s)], m.b[std::size_t(s)], m.c, grp,
                                               k, rng, g);
      // fold the visible-bias sums into the shared gradient before taking
      // the per-group means
      for (std::size_t j = 0; j < V; ++j) og.dc[j] += g.dc[j];
      finalize_means(g);
    }
    og.groups.push_back(std::move(g));
  }
  og.batch_count = total;
  for (std::size_t j = 0; j < V; ++j) og.dc[j] /= double(total);
  return og;
}

// Every destination matrix t accumulates rotated copies of the other
// matrices' data gradients; the rotation angle is phi_t - phi_s. Inputs are
// read from a snapshot, so the result does not depend on pair order. Hidden
// and visible bias gradients are not shared.
inline std::vector<CdGradients> share_gradients(const std::vector<CdGradients>& grads,
                                                const AngleSet& aset, int w, int h,
                                                double scale = 1.0) {
  const int S = aset.bins;
  if (grads.size() != static_cast<std::size_t>(S))
    throw std::invalid_argument("share_gradients: gradient count does not match angle set");
  for (const CdGradients& g : grads)
    if (g.dW.cols != static_cast<std::size_t>(w) * h)
      throw std::invalid_argument("share_gradients: gradient width does not match w*h");

  // phi_t - phi_s depends only on (t - s) mod S, so S-1 maps cover all pairs
  std::vector<RotationMap> maps(static_cast<std::size_t>(S));
  for (int d = 1; d < S; ++d)
    maps[std::size_t(d)] = make_rotation_map(w, h, d * aset.bin_width_deg());

  std::vector<CdGradients> out = grads;
  for (int t = 0; t < S; ++t) {
    for (int s = 0; s < S; ++s) {
      if (s == t) continue;
      if (grads[std::size_t(s)].batch_count == 0) continue;  // empty group, zero gradient
      const int d = ((t - s) % S + S) % S;
      const RotationMap& map = maps[std::size_t(d)];
      for (std::size_t r = 0; r < grads[std::size_t(s)].dW.rows; ++r)
        accumulate_rotation_map(map, grads[std::size_t(s)].dW.row(r), out[std::size_t(t)].dW.row(r),
                                scale);
    }
  }
  return out;
}

inline EriModel init_eri(int hidden, int w, int h, const AngleSet& aset, double weight_init_std,
                         std::mt19937_64& rng) {
  if (hidden < 1) throw std::invalid_argument("init_eri: need at least one hidden unit");
  EriModel m;
  m.angles = aset;
  m.filter_width = w;
  m.filter_height = h;
  const std::size_t V = std::size_t(w) * h;
  std::normal_distribution<double> nd(0.0, weight_init_std);
  m.W.reserve(std::size_t(aset.bins));
  for (int s = 0; s < aset.bins; ++s) {
    Mat W(std::size_t(hidden), V);
    for (auto& x : W.data) x = nd(rng);
    m.W.push_back(std::move(W));
  }
  m.b.assign(std::size_t(aset.bins), std::vector<double>(std::size_t(hidden), 0.0));
  m.c.assign(V, 0.0);
  return m;
}

// Orientation-routed CD with gradient sharing. Requires a binarized,
// orientation-annotated dataset. With S=1 the procedure reduces exactly to
// plain RBM training under the same seed.
inline EriModel train_eri(const Dataset& d, int hidden, const AngleSet& aset,
                          const TrainConfig& cfg, const EpochCallback& log = {}) {
  cfg.validate();
  require_binary_images(d);
  if (!d.annotated())
    throw std::invalid_argument("train_eri: dataset must be orientation-annotated");
  for (int s : d.orientation)
    if (s < 1 || s > aset.bins)
      throw std::invalid_argument("train_eri: orientation index outside 1..S");

  const int S = aset.bins;
  const int w = d.images[0].width;
  const int h = d.images[0].height;
  std::mt19937_64 rng(cfg.seed);
  EriModel m = init_eri(hidden, w, h, aset, cfg.weight_init_std, rng);
  const std::size_t H = m.hidden_count();
  const std::size_t V = m.visible_count();

  std::vector<Mat> vW(std::size_t(S), Mat(H, V));
  std::vector<std::vector<double>> vb(std::size_t(S), std::vector<double>(H, 0.0));
  std::vector<double> vc(V, 0.0);

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  OrientedBatch ob;
  ob.groups.assign(std::size_t(S), Batch{});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double ce = 0.0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(cfg.batch_size));
      for (Batch& grp : ob.groups) grp.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        ob.groups[std::size_t(d.orientation[idx] - 1)].push_back(d.images[idx].pixels);
      }
      OrientedGradients og = oriented_cd(m, ob, cfg.cd_k, rng);
      ce += og.recon_ce_sum;
      const std::vector<CdGradients> shared = share_gradients(og.groups, aset, w, h,
                                                              cfg.share_scale);
      for (int s = 0; s < S; ++s) {
        momentum_step(m.W[std::size_t(s)].data, vW[std::size_t(s)].data,
                      shared[std::size_t(s)].dW.data, cfg.eta, cfg.alpha);
        momentum_step(m.b[std::size_t(s)], vb[std::size_t(s)], shared[std::size_t(s)].db, cfg.eta,
                      cfg.alpha);
      }
      momentum_step(m.c, vc, og.dc, cfg.eta, cfg.alpha);
    }
    if (log) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      log(epoch, ce / double(d.size()), dt.count());
    }
  }
  return m;
}

// Hidden probabilities under the weight matrix selected by the given
// orientation index.
inline std::vector<double> features_eri(const EriModel& m, const Image& img, int s) {
  if (img.size() != m.visible_count())
    throw std::invalid_argument("features_eri: image size does not match model");
  if (s < 1 || s > m.bin_count())
    throw std::invalid_argument("features_eri: orientation index outside 1..S");
  std::vector<double> out(m.hidden_count());
  hidden_probs_into(m.W[std::size_t(s - 1)], m.b[std::size_t(s - 1)], img.pixels, out);
  return out;
}

// Hidden probabilities under the matrix of the image's own dominant
// orientation.
inline std::vector<double> features_eri(const EriModel& m, const Image& img) {
  const OrientationEstimate est = dominant_orientation(img, m.angles);
  return features_eri(m, img, est.index);
}

}  // namespace erirbm
