#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "erirbm/eri.hpp"
#include "testutil.hpp"

using erirbm::AngleSet;
using erirbm::Batch;
using erirbm::CdGradients;
using erirbm::Dataset;
using erirbm::EriModel;
using erirbm::Mat;
using erirbm::OrientedBatch;
using erirbm::TrainConfig;

namespace {

EriModel random_eri(int S, int hidden, int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return erirbm::init_eri(hidden, w, h, AngleSet(S), 0.1, rng);
}

CdGradients random_grads(std::size_t H, std::size_t V, std::mt19937_64& rng) {
  CdGradients g = erirbm::make_zero_gradients(H, V);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (auto& x : g.dW.data) x = unif(rng);
  for (auto& x : g.db) x = unif(rng);
  for (auto& x : g.dc) x = unif(rng);
  g.batch_count = 1;
  return g;
}

// independent half-turn oracle: (x, y) -> (w-1-x, h-1-y) per row raster
Mat half_turn_rows(const Mat& m, int w, int h) {
  Mat out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out(r, std::size_t(h - 1 - y) * w + (w - 1 - x)) = m(r, std::size_t(y) * w + x);
  return out;
}

// independent quarter-turn oracle on square rasters: source (u,v) lands at
// (n-1-v, u); applied `quarters` times per row
Mat quarter_turn_rows(const Mat& m, int n, int quarters) {
  Mat out = m;
  for (int q = 0; q < quarters; ++q) {
    Mat next(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
      for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
          next(r, std::size_t(u) * n + (n - 1 - v)) = out(r, std::size_t(v) * n + u);
    out = next;
  }
  return out;
}

std::vector<std::vector<double>> random_binary_vectors(std::size_t count, std::size_t dim,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (auto& v : out)
    for (auto& x : v) x = unif(rng) < 0.4 ? 1.0 : 0.0;
  return out;
}

}  // namespace

TEST_CASE("annotation fills indices in range and is idempotent") {
  Dataset d;
  for (int i = 0; i < 8; ++i) {
    d.images.push_back(testutil::make_grating(16, 16, 10.0 + 40.0 * i));
    d.labels.push_back(i % 10);
  }
  d.images.emplace_back(16, 16, 0.0);  // gradient-free
  d.labels.push_back(0);

  const AngleSet a(9);
  const erirbm::AnnotationStats stats = erirbm::annotate_orientations(d, a);
  REQUIRE(d.annotated());
  for (int s : d.orientation) {
    REQUIRE(s >= 1);
    REQUIRE(s <= 9);
  }
  REQUIRE(stats.degenerate_count == 1);
  REQUIRE(d.orientation.back() == 1);
  std::size_t total = 0;
  for (std::size_t n : stats.bin_counts) total += n;
  REQUIRE(total == d.size());

  const std::vector<int> first = d.orientation;
  erirbm::annotate_orientations(d, a);
  REQUIRE(d.orientation == first);
}

TEST_CASE("a single-group batch reproduces plain cd_gradients bitwise") {
  const EriModel m = random_eri(3, 4, 4, 4, 5);
  const auto vecs = random_binary_vectors(6, m.visible_count(), 11);

  OrientedBatch ob;
  ob.groups.assign(3, Batch{});
  for (const auto& v : vecs) ob.groups[1].push_back(v);

  std::mt19937_64 rng1(77);
  const erirbm::OrientedGradients og = erirbm::oriented_cd(m, ob, 1, rng1);

  erirbm::RbmModel plain;
  plain.W = m.W[1];
  plain.b = m.b[1];
  plain.c = m.c;
  plain.filter_width = 4;
  plain.filter_height = 4;
  Batch batch;
  for (const auto& v : vecs) batch.push_back(v);
  std::mt19937_64 rng2(77);
  const CdGradients g = erirbm::cd_gradients(plain, batch, 1, rng2);

  REQUIRE(og.groups[1].dW.data == g.dW.data);
  REQUIRE(og.groups[1].db == g.db);
  REQUIRE(og.groups[1].dc == g.dc);
  REQUIRE(og.dc == g.dc);  // single group carries all the weight
  for (double x : og.groups[0].dW.data) REQUIRE(x == 0.0);
  for (double x : og.groups[2].dW.data) REQUIRE(x == 0.0);
  REQUIRE(og.groups[0].batch_count == 0);
}

TEST_CASE("the shared visible gradient is the size-weighted mean of group gradients") {
  const EriModel m = random_eri(2, 3, 3, 3, 9);
  const auto vecs = random_binary_vectors(5, m.visible_count(), 21);
  OrientedBatch ob;
  ob.groups.assign(2, Batch{});
  ob.groups[0].push_back(vecs[0]);
  ob.groups[0].push_back(vecs[1]);
  ob.groups[1].push_back(vecs[2]);
  ob.groups[1].push_back(vecs[3]);
  ob.groups[1].push_back(vecs[4]);
  std::mt19937_64 rng(33);
  const erirbm::OrientedGradients og = erirbm::oriented_cd(m, ob, 1, rng);
  for (std::size_t j = 0; j < m.visible_count(); ++j) {
    const double expected = (2.0 * og.groups[0].dc[j] + 3.0 * og.groups[1].dc[j]) / 5.0;
    REQUIRE(og.dc[j] == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("oriented_cd rejects an empty batch") {
  const EriModel m = random_eri(2, 2, 2, 2, 13);
  OrientedBatch ob;
  ob.groups.assign(2, Batch{});
  std::mt19937_64 rng(1);
  REQUIRE_THROWS_AS(erirbm::oriented_cd(m, ob, 1, rng), std::invalid_argument);
}

TEST_CASE("sharing sends exact quarter-turn copies at S=4") {
  const AngleSet a(4);
  std::mt19937_64 rng(17);
  std::vector<CdGradients> grads;
  for (int s = 0; s < 4; ++s) grads.push_back(erirbm::make_zero_gradients(3, 25));
  grads[0] = random_grads(3, 25, rng);

  const auto out = erirbm::share_gradients(grads, a, 5, 5);
  REQUIRE(out[0].dW.data == grads[0].dW.data);
  for (int t = 1; t < 4; ++t) {
    const Mat expected = quarter_turn_rows(grads[0].dW, 5, t);
    REQUIRE(out[std::size_t(t)].dW.data == expected.data);
  }
}

TEST_CASE("sharing zero gradients yields zero gradients") {
  const AngleSet a(6);
  std::vector<CdGradients> grads;
  for (int s = 0; s < 6; ++s) {
    grads.push_back(erirbm::make_zero_gradients(2, 16));
    grads.back().batch_count = 1;
  }
  const auto out = erirbm::share_gradients(grads, a, 4, 4);
  for (const auto& g : out)
    for (double x : g.dW.data) REQUIRE(x == 0.0);
}

TEST_CASE("S=2 sharing matches the hand-evaluated half-turn formula") {
  const AngleSet a(2);
  std::mt19937_64 rng(23);
  std::vector<CdGradients> grads{random_grads(2, 9, rng), random_grads(2, 9, rng)};
  const Mat A = grads[0].dW;
  const Mat B = grads[1].dW;
  const auto out = erirbm::share_gradients(grads, a, 3, 3);

  const Mat rotA = half_turn_rows(A, 3, 3);
  const Mat rotB = half_turn_rows(B, 3, 3);
  for (std::size_t i = 0; i < A.data.size(); ++i) {
    REQUIRE(out[0].dW.data[i] == A.data[i] + rotB.data[i]);
    REQUIRE(out[1].dW.data[i] == B.data[i] + rotA.data[i]);
  }
}

TEST_CASE("sharing reads inputs from a snapshot") {
  // with snapshot semantics out[t] = in[t] + sum of rotated in[s]; sequential
  // in-place accumulation would leak already-updated matrices into later
  // destinations
  const AngleSet a(3);
  std::mt19937_64 rng(29);
  std::vector<CdGradients> grads{random_grads(2, 16, rng), random_grads(2, 16, rng),
                                 random_grads(2, 16, rng)};
  const auto out = erirbm::share_gradients(grads, a, 4, 4);
  for (int t = 0; t < 3; ++t) {
    Mat expected = grads[std::size_t(t)].dW;
    for (int s = 0; s < 3; ++s) {
      if (s == t) continue;
      const double theta = a.angle_deg(t + 1) - a.angle_deg(s + 1);
      const Mat rot = erirbm::rotate_filter_rows(grads[std::size_t(s)].dW, theta, 4, 4);
      for (std::size_t i = 0; i < expected.data.size(); ++i) expected.data[i] += rot.data[i];
    }
    for (std::size_t i = 0; i < expected.data.size(); ++i)
      REQUIRE(out[std::size_t(t)].dW.data[i] == Catch::Approx(expected.data[i]).margin(1e-12));
  }
}

TEST_CASE("sharing never touches bias gradients") {
  const AngleSet a(4);
  std::mt19937_64 rng(31);
  std::vector<CdGradients> grads;
  for (int s = 0; s < 4; ++s) grads.push_back(random_grads(2, 16, rng));
  auto out = erirbm::share_gradients(grads, a, 4, 4);
  for (int s = 0; s < 4; ++s) {
    REQUIRE(out[std::size_t(s)].db == grads[std::size_t(s)].db);
    REQUIRE(out[std::size_t(s)].dc == grads[std::size_t(s)].dc);
  }
  // perturbing a weight gradient must not reach any bias output
  grads[1].dW(0, 3) += 10.0;
  auto out2 = erirbm::share_gradients(grads, a, 4, 4);
  for (int s = 0; s < 4; ++s) REQUIRE(out2[std::size_t(s)].db == out[std::size_t(s)].db);
}

TEST_CASE("share_scale scales only the rotated contributions") {
  const AngleSet a(2);
  std::mt19937_64 rng(37);
  std::vector<CdGradients> grads{random_grads(1, 9, rng), random_grads(1, 9, rng)};
  const auto full = erirbm::share_gradients(grads, a, 3, 3, 1.0);
  const auto halved = erirbm::share_gradients(grads, a, 3, 3, 0.5);
  const Mat rotB = half_turn_rows(grads[1].dW, 3, 3);
  for (std::size_t i = 0; i < 9; ++i) {
    REQUIRE(halved[0].dW.data[i] ==
            Catch::Approx(grads[0].dW.data[i] + 0.5 * rotB.data[i]).margin(1e-12));
    REQUIRE(full[0].dW.data[i] ==
            Catch::Approx(grads[0].dW.data[i] + rotB.data[i]).margin(1e-12));
  }
}

TEST_CASE("eri training is bit-deterministic under a fixed seed") {
  Dataset d = testutil::random_binary_dataset(50, 6, 6, 41);
  erirbm::annotate_orientations(d, AngleSet(4));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 10;
  cfg.seed = 31337;
  const EriModel m1 = erirbm::train_eri(d, 5, AngleSet(4), cfg);
  const EriModel m2 = erirbm::train_eri(d, 5, AngleSet(4), cfg);
  for (int s = 0; s < 4; ++s) {
    REQUIRE(m1.W[std::size_t(s)].data == m2.W[std::size_t(s)].data);
    REQUIRE(m1.b[std::size_t(s)] == m2.b[std::size_t(s)]);
  }
  REQUIRE(m1.c == m2.c);
}

TEST_CASE("S=1 training reduces exactly to the plain RBM") {
  Dataset d = testutil::random_binary_dataset(80, 5, 5, 43);
  erirbm::annotate_orientations(d, AngleSet(1));
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = 2024;
  const EriModel e = erirbm::train_eri(d, 7, AngleSet(1), cfg);
  const erirbm::RbmModel r = erirbm::train_rbm(d, 7, cfg);
  REQUIRE(e.W[0].data == r.W.data);
  REQUIRE(e.b[0] == r.b);
  REQUIRE(e.c == r.c);
}

TEST_CASE("one zero-momentum update propagates exact rotations from a single group") {
  const int S = 4, H = 3, n = 6;
  const AngleSet a(S);
  EriModel m = random_eri(S, H, n, n, 47);
  for (int s = 1; s < S; ++s) m.W[std::size_t(s)] = m.W[0];  // equal starting matrices

  const auto vecs = random_binary_vectors(10, m.visible_count(), 53);
  OrientedBatch ob;
  ob.groups.assign(std::size_t(S), Batch{});
  for (const auto& v : vecs) ob.groups[0].push_back(v);

  std::mt19937_64 rng(59);
  const std::vector<Mat> init = m.W;
  const erirbm::OrientedGradients og = erirbm::oriented_cd(m, ob, 1, rng);
  const auto shared = erirbm::share_gradients(og.groups, a, n, n);
  TrainConfig cfg;
  cfg.alpha = 0.0;
  cfg.eta = 1e-3;
  for (int s = 0; s < S; ++s) {
    Mat vel(m.W[std::size_t(s)].rows, m.W[std::size_t(s)].cols);
    erirbm::momentum_step(m.W[std::size_t(s)].data, vel.data, shared[std::size_t(s)].dW.data,
                          cfg.eta, cfg.alpha);
  }

  Mat delta1(std::size_t(H), m.visible_count());
  for (std::size_t i = 0; i < delta1.data.size(); ++i)
    delta1.data[i] = m.W[0].data[i] - init[0].data[i];
  for (int t = 1; t < S; ++t) {
    const Mat expected = quarter_turn_rows(delta1, n, t);
    for (std::size_t i = 0; i < expected.data.size(); ++i)
      REQUIRE(m.W[std::size_t(t)].data[i] - init[std::size_t(t)].data[i] == expected.data[i]);
  }
}

TEST_CASE("train_eri requires annotation") {
  Dataset d = testutil::random_binary_dataset(10, 4, 4, 61);
  TrainConfig cfg;
  cfg.epochs = 1;
  REQUIRE_THROWS_AS(erirbm::train_eri(d, 3, AngleSet(2), cfg), std::invalid_argument);
}

TEST_CASE("features come from the matrix picked by the dominant orientation") {
  EriModel m = random_eri(4, 6, 16, 16, 67);
  const erirbm::Image img = testutil::make_grating(16, 16, 50.0);

  const auto f = erirbm::features_eri(m, img);
  REQUIRE(f.size() == 6);
  const int s = erirbm::dominant_orientation(img, m.angles).index;
  REQUIRE(f == erirbm::features_eri(m, img, s));

  for (auto& W : m.W) W.fill(0.0);
  for (auto& b : m.b) b.assign(b.size(), 0.0);
  for (double p : erirbm::features_eri(m, img)) REQUIRE(p == 0.5);
}

TEST_CASE("exactly rotated filter banks give matching features for quarter-turned inputs") {
  const int n = 16, H = 5, S = 4;
  EriModel m = random_eri(S, H, n, n, 71);
  // build bank s+1 as the exact quarter-turn of bank s, with equal biases
  for (int s = 1; s < S; ++s) {
    m.W[std::size_t(s)] = erirbm::rotate_filter_rows(m.W[std::size_t(s - 1)], 90.0, n, n);
    m.b[std::size_t(s)] = m.b[0];
  }

  const erirbm::Image img = testutil::make_grating(n, n, 30.0);
  const erirbm::Image turned = erirbm::rotate(img, 90.0);

  const int s1 = erirbm::dominant_orientation(img, m.angles).index;
  const int s2 = erirbm::dominant_orientation(turned, m.angles).index;
  REQUIRE(s2 == s1 % S + 1);  // exact quarter turn advances the bin by one

  const auto f1 = erirbm::features_eri(m, img);
  const auto f2 = erirbm::features_eri(m, turned);
  for (std::size_t k = 0; k < f1.size(); ++k)
    REQUIRE(f1[k] == Catch::Approx(f2[k]).margin(1e-9));
}
