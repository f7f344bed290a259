#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "erirbm/matrix.hpp"

namespace erirbm {

struct FeatureSet {
  Mat vectors;              // N x H
  std::vector<int> labels;  // class ids

  std::size_t size() const { return vectors.rows; }
  std::size_t dim() const { return vectors.cols; }
};

struct SoftmaxModel {
  Mat weights;  // C x H
  std::vector<double> bias;

  std::size_t class_count() const { return weights.rows; }
  std::size_t dim() const { return weights.cols; }
};

struct SoftmaxConfig {
  double lr = 0.1;
  int epochs = 100;
  int batch = 100;
  double l2 = 1e-4;
  std::uint64_t seed = 42;
};

inline std::vector<double> softmax_scores(const SoftmaxModel& m, std::span<const double> x) {
  if (x.size() != m.dim()) throw std::invalid_argument("softmax_scores: wrong feature length");
  std::vector<double> s(m.class_count());
  for (std::size_t c = 0; c < m.class_count(); ++c) s[c] = m.bias[c] + dot(m.weights.row(c), x);
  return s;
}

inline std::vector<double> softmax_probabilities(const SoftmaxModel& m, std::span<const double> x) {
  std::vector<double> p = softmax_scores(m, x);
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

// Argmax over class scores; exact ties go to the lowest class id.
inline int softmax_predict(const SoftmaxModel& m, std::span<const double> x) {
  const std::vector<double> s = softmax_scores(m, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c)
    if (s[c] > s[best]) best = c;
  return int(best);
}

// Mean cross-entropy plus 0.5 * l2 * ||W||^2.
inline double softmax_loss(const SoftmaxModel& m, const FeatureSet& fs, double l2) {
  if (fs.size() == 0) throw std::invalid_argument("softmax_loss: empty feature set");
  double loss = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::vector<double> p = softmax_probabilities(m, fs.vectors.row(i));
    loss -= std::log(std::max(p[std::size_t(fs.labels[i])], 1e-300));
  }
  loss /= double(fs.size());
  double reg = 0.0;
  for (double w : m.weights.data) reg += w * w;
  return loss + 0.5 * l2 * reg;
}

// Minibatch gradient descent on L2-regularized cross-entropy, zero init,
// seeded shuffling. Deterministic given the seed.
inline SoftmaxModel softmax_train(const FeatureSet& train, const SoftmaxConfig& cfg = {}) {
  if (train.size() == 0) throw std::invalid_argument("softmax_train: empty feature set");
  if (train.labels.size() != train.size())
    throw std::invalid_argument("softmax_train: label count mismatch");
  int max_label = 0;
  for (int y : train.labels) {
    if (y < 0) throw std::invalid_argument("softmax_train: negative class id");
    max_label = std::max(max_label, y);
  }
  const std::size_t C = std::size_t(max_label) + 1;
  const std::size_t H = train.dim();

  SoftmaxModel m{Mat(C, H), std::vector<double>(C, 0.0)};
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  Mat gW(C, H);
  std::vector<double> gb(C);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(cfg.batch));
      gW.fill(0.0);
      gb.assign(C, 0.0);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        const auto x = train.vectors.row(idx);
        std::vector<double> p = softmax_probabilities(m, x);
        p[std::size_t(train.labels[idx])] -= 1.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double pc = p[c];
          auto grow = gW.row(c);
          for (std::size_t j = 0; j < H; ++j) grow[j] += pc * x[j];
          gb[c] += pc;
        }
      }
      const double inv = 1.0 / double(stop - start);
      for (std::size_t c = 0; c < C; ++c) {
        auto wrow = m.weights.row(c);
        auto grow = gW.row(c);
        for (std::size_t j = 0; j < H; ++j)
          wrow[j] -= cfg.lr * (grow[j] * inv + cfg.l2 * wrow[j]);
        m.bias[c] -= cfg.lr * gb[c] * inv;
      }
    }
  }
  return m;
}

// Majority label among the K nearest training vectors by Euclidean distance.
// Distance ties prefer the lower training index, vote ties the smallest
// class id.
inline int knn_predict(const FeatureSet& train, std::span<const double> x, int K) {
  if (train.size() == 0) throw std::invalid_argument("knn_predict: empty training set");
  if (K < 1 || std::size_t(K) > train.size())
    throw std::invalid_argument("knn_predict: K must be in 1..N");
  if (x.size() != train.dim()) throw std::invalid_argument("knn_predict: wrong feature length");

  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(std::size_t(K) + 1);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto row = train.vectors.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = row[j] - x[j];
      d2 += diff * diff;
    }
    const std::pair<double, std::size_t> cand{d2, i};
    if (best.size() < std::size_t(K) || cand < best.back()) {
      best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      if (best.size() > std::size_t(K)) best.pop_back();
    }
  }

  int winner = -1;
  int winner_count = 0;
  for (const auto& [d2, i] : best) {
    const int label = train.labels[i];
    int count = 0;
    for (const auto& [e2, j] : best)
      if (train.labels[j] == label) ++count;
    if (count > winner_count || (count == winner_count && label < winner)) {
      winner = label;
      winner_count = count;
    }
  }
  return winner;
}

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (pred.empty()) throw std::invalid_argument("accuracy: empty prediction list");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++correct;
  return 100.0 * double(correct) / double(pred.size());
}

// CSV with header `label,f0,...,f{H-1}`, one row per sample, values at 9
// significant digits.
inline void export_features(const FeatureSet& fs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "label";
  for (std::size_t j = 0; j < fs.dim(); ++j) out << ",f" << j;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < fs.size(); ++i) {
    out << fs.labels[i];
    const auto row = fs.vectors.row(i);
    for (std::size_t j = 0; j < fs.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", row[j]);
      out << ',' << buf;
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline FeatureSet load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
  std::size_t dim = 0;
  {
    if (line.rfind("label", 0) != 0) throw std::runtime_error(path + ": malformed header row");
    for (char ch : line)
      if (ch == ',') ++dim;
  }
  std::vector<double> flat;
  std::vector<int> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const char* p = line.c_str();
    char* end = nullptr;
    const long label = std::strtol(p, &end, 10);
    if (end == p) throw std::runtime_error(path + ": unparseable label at row " + std::to_string(row));
    p = end;
    std::size_t count = 0;
    while (*p == ',') {
      ++p;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw std::runtime_error(path + ": unparseable value at row " + std::to_string(row));
      p = end;
      flat.push_back(v);
      ++count;
    }
    if (count != dim)
      throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                               std::to_string(count) + " values (expected " + std::to_string(dim) +
                               ")");
    labels.push_back(int(label));
  }
  FeatureSet fs;
  fs.vectors = Mat(labels.size(), dim);
  fs.vectors.data = std::move(flat);
  fs.labels = std::move(labels);
  return fs;
}

}  // namespace erirbm
