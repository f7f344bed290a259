#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "erirbm/erirbm.hpp"

using namespace erirbm;

namespace {

Dataset load_data(const std::string& format, const std::string& data_path,
                  const std::string& labels_path) {
  if (format == "idx") {
    if (labels_path.empty())
      throw std::runtime_error("idx format needs --labels pointing at the label file");
    return load_idx(data_path, labels_path);
  }
  return load_amat(data_path);
}

// The MNIST-rot training file carries 12,000 rows: the first 10,000 are the
// training split, the final 2,000 validation. take < 0 applies that rule,
// take == 0 keeps everything, take > 0 keeps the first `take` rows.
Dataset apply_take(Dataset d, long take, const std::string& format) {
  if (take > 0 && std::size_t(take) < d.size()) return slice(d, 0, std::size_t(take));
  if (take < 0 && format == "amat" && d.size() == 12000) {
    std::fprintf(stderr, "note: 12000-row amat file, keeping the first 10000 (training split)\n");
    return slice(d, 0, 10000);
  }
  return d;
}

void check_dims(const ModelFile& mf, const Dataset& d) {
  if (d.size() == 0) throw std::runtime_error("dataset is empty");
  if (d.images[0].width != int(mf.width) || d.images[0].height != int(mf.height))
    throw std::runtime_error("model expects " + std::to_string(mf.width) + "x" +
                             std::to_string(mf.height) + " images, data is " +
                             std::to_string(d.images[0].width) + "x" +
                             std::to_string(d.images[0].height));
}

FeatureSet collect_features(const ModelFile& mf, const Dataset& raw, double tau, int orbm_bins) {
  FeatureSet fs;
  fs.vectors = Mat(raw.size(), mf.hidden);
  fs.labels = raw.labels;

  if (mf.kind == ModelKind::plain || mf.kind == ModelKind::orbm) {
    const RbmModel m = rbm_from(mf);
    Dataset prepared;
    if (mf.kind == ModelKind::orbm) {
      const AngleSet aset(orbm_bins);
      Dataset aligned;
      aligned.labels = raw.labels;
      aligned.images.reserve(raw.size());
      for (const Image& img : raw.images) aligned.images.push_back(orient_align(img, aset));
      prepared = binarize(aligned, tau);
    } else {
      prepared = binarize(raw, tau);
    }
    check_dims(mf, prepared);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
      const auto f = features(m, prepared.images[i]);
      std::copy(f.begin(), f.end(), fs.vectors.row(i).begin());
    }
    return fs;
  }

  const AngleSet aset(int(mf.bins));
  Dataset bin = binarize(raw, tau);
  check_dims(mf, bin);
  const AnnotationStats stats = annotate_orientations(bin, aset);
  if (stats.degenerate_count > 0)
    std::fprintf(stderr, "note: %zu degenerate (gradient-free) images routed to bin 1\n",
                 stats.degenerate_count);
  if (mf.kind == ModelKind::eri) {
    const EriModel m = eri_from(mf);
    for (std::size_t i = 0; i < bin.size(); ++i) {
      const auto f = features_eri(m, bin.images[i], bin.orientation[i]);
      std::copy(f.begin(), f.end(), fs.vectors.row(i).begin());
    }
  } else {
    const DrbmModel m = drbm_from(mf);
    for (std::size_t i = 0; i < bin.size(); ++i) {
      const auto f = features_drbm(m, bin.images[i], bin.orientation[i]);
      std::copy(f.begin(), f.end(), fs.vectors.row(i).begin());
    }
  }
  return fs;
}

EpochCallback epoch_printer() {
  return [](int epoch, double recon, double secs) {
    std::printf("epoch=%d recon=%.6f secs=%.3f\n", epoch, recon, secs);
    std::fflush(stdout);
  };
}

int run(int argc, char** argv) {
  CLI::App app{"Rotation-invariant RBM trainer and evaluation pipeline"};
  app.require_subcommand(1);

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model and write it to a model file");
  std::string model_kind = "eri", train_path, labels_path, format = "amat", out_path;
  int hidden = 100, bins = 18, epochs = 200, batch = 100, cdk = 1;
  double eta = 1e-3, momentum = 0.9, tau = 0.3;
  std::uint64_t seed = 42;
  long take = -1;
  train->add_option("--model", model_kind, "model kind")
      ->check(CLI::IsMember({"rbm", "eri", "drbm", "orbm"}))
      ->capture_default_str();
  train->add_option("--train", train_path, "training data file")->required();
  train->add_option("--labels", labels_path, "label file (idx format only)");
  train->add_option("--format", format, "data format")
      ->check(CLI::IsMember({"idx", "amat"}))
      ->capture_default_str();
  train->add_option("--hidden", hidden, "hidden units H")->capture_default_str();
  train->add_option("--bins", bins, "orientation bins S")->capture_default_str();
  train->add_option("--epochs", epochs, "training epochs")->capture_default_str();
  train->add_option("--eta", eta, "learning rate")->capture_default_str();
  train->add_option("--momentum", momentum, "momentum coefficient")->capture_default_str();
  train->add_option("--batch", batch, "minibatch size")->capture_default_str();
  train->add_option("--cdk", cdk, "contrastive divergence steps")->capture_default_str();
  train->add_option("--tau", tau, "binarization threshold")->capture_default_str();
  train->add_option("--seed", seed, "RNG seed")->capture_default_str();
  train->add_option("--take", take,
                    "rows to keep; -1 = auto (12000-row amat keeps first 10000), 0 = all")
      ->capture_default_str();
  train->add_option("--out", out_path, "output model file")->required();

  // features ---------------------------------------------------------------
  auto* feat = app.add_subcommand("features", "Extract features for a dataset into a CSV");
  std::string f_model, f_data, f_labels, f_format = "amat", f_out;
  double f_tau = 0.3;
  int f_bins = 18;
  long f_take = 0;
  feat->add_option("--model-file", f_model, "trained model file")->required();
  feat->add_option("--data", f_data, "data file")->required();
  feat->add_option("--labels", f_labels, "label file (idx format only)");
  feat->add_option("--format", f_format, "data format")
      ->check(CLI::IsMember({"idx", "amat"}))
      ->capture_default_str();
  feat->add_option("--tau", f_tau, "binarization threshold")->capture_default_str();
  feat->add_option("--bins", f_bins, "alignment bins for orbm models")->capture_default_str();
  feat->add_option("--take", f_take, "rows to keep; 0 = all")->capture_default_str();
  feat->add_option("--out", f_out, "output CSV")->required();

  // eval -------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Classify feature CSVs and print the accuracy");
  std::string e_train, e_test, classifier = "knn";
  int knn_k = 3;
  std::uint64_t e_seed = 42;
  eval->add_option("--train-csv", e_train, "training feature CSV")->required();
  eval->add_option("--test-csv", e_test, "test feature CSV")->required();
  eval->add_option("--classifier", classifier, "classifier")
      ->check(CLI::IsMember({"knn", "softmax"}))
      ->capture_default_str();
  eval->add_option("--k", knn_k, "neighbors for knn")->capture_default_str();
  eval->add_option("--seed", e_seed, "softmax RNG seed")->capture_default_str();

  // dump-filters -------------------------------------------------------------
  auto* dump = app.add_subcommand("dump-filters", "Write one weight matrix as a PGM filter grid");
  std::string d_model, d_out;
  int d_matrix = 1, d_grid = 10;
  dump->add_option("--model-file", d_model, "trained model file")->required();
  dump->add_option("--matrix", d_matrix, "matrix index s in 1..S")->capture_default_str();
  dump->add_option("--grid", d_grid, "grid columns")->capture_default_str();
  dump->add_option("--out", d_out, "output PGM file")->required();

  // orient -------------------------------------------------------------------
  auto* orient = app.add_subcommand("orient", "Print the dominant orientation of one sample");
  std::string o_data, o_labels, o_format = "amat";
  int o_index = 0, o_bins = 18;
  double o_tau = 0.3;
  orient->add_option("--data", o_data, "data file")->required();
  orient->add_option("--labels", o_labels, "label file (idx format only)");
  orient->add_option("--format", o_format, "data format")
      ->check(CLI::IsMember({"idx", "amat"}))
      ->capture_default_str();
  orient->add_option("--index", o_index, "sample index, 0-based")->capture_default_str();
  orient->add_option("--bins", o_bins, "orientation bins S")->capture_default_str();
  orient->add_option("--tau", o_tau, "binarization threshold")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*train) {
    TrainConfig cfg;
    cfg.eta = eta;
    cfg.alpha = momentum;
    cfg.epochs = epochs;
    cfg.cd_k = cdk;
    cfg.batch_size = batch;
    cfg.seed = seed;
    const Dataset raw = apply_take(load_data(format, train_path, labels_path), take, format);
    ModelFile mf;
    if (model_kind == "orbm") {
      const RbmModel m = train_orbm(raw, hidden, AngleSet(bins), cfg, tau, epoch_printer());
      mf = to_model_file(m, ModelKind::orbm);
    } else {
      Dataset bin = binarize(raw, tau);
      if (model_kind == "rbm") {
        mf = to_model_file(train_rbm(bin, hidden, cfg, epoch_printer()), ModelKind::plain);
      } else {
        const AngleSet aset(bins);
        const AnnotationStats stats = annotate_orientations(bin, aset);
        if (stats.degenerate_count > 0)
          std::fprintf(stderr, "note: %zu degenerate (gradient-free) images routed to bin 1\n",
                       stats.degenerate_count);
        if (model_kind == "eri")
          mf = to_model_file(train_eri(bin, hidden, aset, cfg, epoch_printer()));
        else
          mf = to_model_file(train_drbm(bin, hidden, aset, cfg, epoch_printer()));
      }
    }
    save_model(mf, out_path);
    std::fprintf(stderr, "wrote %s model to %s\n", to_string(mf.kind), out_path.c_str());
    return 0;
  }

  if (*feat) {
    const ModelFile mf = load_model(f_model);
    Dataset raw = load_data(f_format, f_data, f_labels);
    if (f_take > 0 && std::size_t(f_take) < raw.size()) raw = slice(raw, 0, std::size_t(f_take));
    const FeatureSet fs = collect_features(mf, raw, f_tau, f_bins);
    export_features(fs, f_out);
    std::fprintf(stderr, "wrote %zu feature rows (H=%u) to %s\n", fs.size(), mf.hidden,
                 f_out.c_str());
    return 0;
  }

  if (*eval) {
    const FeatureSet train_fs = load_features(e_train);
    const FeatureSet test_fs = load_features(e_test);
    if (train_fs.dim() != test_fs.dim())
      throw std::runtime_error("feature width mismatch: train has " +
                               std::to_string(train_fs.dim()) + ", test has " +
                               std::to_string(test_fs.dim()));
    std::vector<int> pred;
    pred.reserve(test_fs.size());
    if (classifier == "knn") {
      for (std::size_t i = 0; i < test_fs.size(); ++i)
        pred.push_back(knn_predict(train_fs, test_fs.vectors.row(i), knn_k));
    } else {
      SoftmaxConfig scfg;
      scfg.seed = e_seed;
      const SoftmaxModel m = softmax_train(train_fs, scfg);
      for (std::size_t i = 0; i < test_fs.size(); ++i)
        pred.push_back(softmax_predict(m, test_fs.vectors.row(i)));
    }
    std::printf("accuracy=%.2f\n", accuracy(pred, test_fs.labels));
    return 0;
  }

  if (*dump) {
    const ModelFile mf = load_model(d_model);
    if (d_matrix < 1 || std::uint32_t(d_matrix) > mf.bins)
      throw std::runtime_error("matrix index " + std::to_string(d_matrix) + " outside 1.." +
                               std::to_string(mf.bins));
    const Image grid = tile_filters(mf.W[std::size_t(d_matrix - 1)], int(mf.width),
                                    int(mf.height), d_grid);
    write_pgm(grid, d_out);
    std::fprintf(stderr, "wrote %dx%d filter grid to %s\n", grid.width, grid.height,
                 d_out.c_str());
    return 0;
  }

  if (*orient) {
    const Dataset raw = load_data(o_format, o_data, o_labels);
    if (o_index < 0 || std::size_t(o_index) >= raw.size())
      throw std::runtime_error("sample index " + std::to_string(o_index) +
                               " outside the dataset (size " + std::to_string(raw.size()) + ")");
    const Dataset bin = binarize(raw, o_tau);
    const AngleSet aset(o_bins);
    const OrientationHistogram hist = gradient_histogram(bin.images[std::size_t(o_index)], aset);
    const OrientationEstimate est = dominant_orientation(hist, aset);
    std::printf("s=%d psi=%g degenerate=%s\n", est.index, est.psi_deg,
                est.degenerate ? "true" : "false");
    std::printf("bins=");
    for (int j = 0; j < aset.bins; ++j)
      std::printf(j ? ",%.9g" : "%.9g", hist.weights[std::size_t(j)]);
    std::printf("\n");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
