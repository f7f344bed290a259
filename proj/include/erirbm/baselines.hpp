#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "erirbm/eri.hpp"
#include "erirbm/orientation.hpp"
#include "erirbm/rbm.hpp"

namespace erirbm {

// S independent RBMs, one per orientation partition.
struct DrbmModel {
  std::vector<RbmModel> members;
  AngleSet angles;

  int bin_count() const { return angles.bins; }
  std::size_t hidden_count() const { return members.empty() ? 0 : members[0].hidden_count(); }
  std::size_t visible_count() const { return members.empty() ? 0 : members[0].visible_count(); }
};

// Partitions the dataset by orientation index and trains each member only on
// its partition. Member s uses seed + s - 1; empty partitions keep their
// initialization. No sharing of any kind.
inline DrbmModel train_drbm(const Dataset& d, int hidden, const AngleSet& aset,
                            const TrainConfig& cfg, const EpochCallback& log = {}) {
  cfg.validate();
  require_binary_images(d);
  if (!d.annotated())
    throw std::invalid_argument("train_drbm: dataset must be orientation-annotated");
  for (int s : d.orientation)
    if (s < 1 || s > aset.bins)
      throw std::invalid_argument("train_drbm: orientation index outside 1..S");

  const int S = aset.bins;
  const int w = d.images[0].width;
  const int h = d.images[0].height;
  std::vector<Dataset> parts(static_cast<std::size_t>(S));
  for (std::size_t i = 0; i < d.size(); ++i) {
    Dataset& p = parts[std::size_t(d.orientation[i] - 1)];
    p.images.push_back(d.images[i]);
    p.labels.push_back(d.labels[i]);
  }

  DrbmModel m;
  m.angles = aset;
  m.members.reserve(std::size_t(S));
  // per-epoch reconstruction errors per member, for the aggregated log
  std::vector<std::vector<double>> recon(static_cast<std::size_t>(S));
  std::vector<std::vector<double>> secs(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    TrainConfig mcfg = cfg;
    mcfg.seed = cfg.seed + std::uint64_t(s);
    const Dataset& part = parts[std::size_t(s)];
    if (part.size() == 0) {
      std::mt19937_64 rng(mcfg.seed);
      m.members.push_back(init_rbm(hidden, w, h, cfg.weight_init_std, rng));
      continue;
    }
    auto& rrow = recon[std::size_t(s)];
    auto& srow = secs[std::size_t(s)];
    m.members.push_back(train_rbm(part, hidden, mcfg,
                                  [&](int, double r, double t) {
                                    rrow.push_back(r);
                                    srow.push_back(t);
                                  }));
  }
  if (log) {
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      double weighted = 0.0;
      double t = 0.0;
      for (int s = 0; s < S; ++s) {
        const std::size_t n = parts[std::size_t(s)].size();
        if (n == 0) continue;
        weighted += double(n) * recon[std::size_t(s)][std::size_t(epoch - 1)];
        t += secs[std::size_t(s)][std::size_t(epoch - 1)];
      }
      log(epoch, weighted / double(d.size()), t);
    }
  }
  return m;
}

// Routes the image to the member of its dominant orientation.
inline std::vector<double> features_drbm(const DrbmModel& m, const Image& img, int s) {
  if (s < 1 || s > m.bin_count())
    throw std::invalid_argument("features_drbm: orientation index outside 1..S");
  return features(m.members[std::size_t(s - 1)], img);
}

inline std::vector<double> features_drbm(const DrbmModel& m, const Image& img) {
  const OrientationEstimate est = dominant_orientation(img, m.angles);
  return features_drbm(m, img, est.index);
}

// Rotates the image so its dominant orientation lands on the 0-degree
// reference; degenerate images are returned unchanged.
inline Image orient_align(const Image& img, const AngleSet& aset) {
  const OrientationEstimate est = dominant_orientation(img, aset);
  if (est.degenerate) return img;
  return rotate(img, -est.psi_deg);
}

// Aligns every image (grayscale, before thresholding), binarizes the rotated
// result, then trains a single plain RBM.
inline RbmModel train_orbm(const Dataset& raw, int hidden, const AngleSet& aset,
                           const TrainConfig& cfg, double tau = 0.3,
                           const EpochCallback& log = {}) {
  if (raw.size() == 0) throw std::invalid_argument("train_orbm: empty dataset");
  Dataset aligned;
  aligned.labels = raw.labels;
  aligned.images.reserve(raw.size());
  for (const Image& img : raw.images) aligned.images.push_back(orient_align(img, aset));
  const Dataset bin = binarize(aligned, tau);
  return train_rbm(bin, hidden, cfg, log);
}

}  // namespace erirbm
