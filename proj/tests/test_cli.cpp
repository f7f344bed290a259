#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "erirbm/erirbm.hpp"
#include "testutil.hpp"

namespace {

std::string cli_path() {
  const char* p = std::getenv("ERIRBM_BIN");
  REQUIRE(p != nullptr);
  return p;
}

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run_cli(const std::string& args, const testutil::TempDir& tmp) {
  const std::string out_file = tmp.file("cmd.out");
  const std::string cmd = cli_path() + " " + args + " > " + out_file + " 2>" + tmp.file("cmd.err");
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

std::string make_dataset_file(const testutil::TempDir& tmp, std::size_t n,
                              const std::string& name) {
  erirbm::Dataset d;
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> beta(0.0, 360.0);
  for (std::size_t i = 0; i < n; ++i) {
    d.images.push_back(testutil::make_grating(28, 28, beta(rng)));
    d.labels.push_back(int(i % 10));
  }
  const std::string path = tmp.file(name);
  testutil::write_amat(d, path);
  return path;
}

std::vector<std::uint8_t> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("train writes a model and machine-parseable epoch lines") {
  testutil::TempDir tmp;
  const std::string data = make_dataset_file(tmp, 30, "train.amat");
  const std::string model = tmp.file("m.bin");
  const RunResult r = run_cli("train --model eri --train " + data +
                                  " --hidden 6 --bins 4 --epochs 2 --batch 10 --out " + model,
                              tmp);
  REQUIRE(r.exit_code == 0);

  std::istringstream lines(r.out);
  std::string line;
  int epochs_seen = 0;
  while (std::getline(lines, line)) {
    int epoch = 0;
    double recon = 0.0, secs = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "epoch=%d recon=%lf secs=%lf", &epoch, &recon, &secs) == 3);
    ++epochs_seen;
    REQUIRE(epoch == epochs_seen);
    REQUIRE(recon > 0.0);
  }
  REQUIRE(epochs_seen == 2);

  const erirbm::ModelFile mf = erirbm::load_model(model);
  REQUIRE(mf.kind == erirbm::ModelKind::eri);
  REQUIRE(mf.bins == 4);
  REQUIRE(mf.hidden == 6);
  REQUIRE(mf.width == 28);
}

TEST_CASE("rbm and eri coincide at one bin, byte for byte past the kind tag") {
  testutil::TempDir tmp;
  const std::string data = make_dataset_file(tmp, 24, "train.amat");
  const std::string m1 = tmp.file("rbm.bin");
  const std::string m2 = tmp.file("eri.bin");
  REQUIRE(run_cli("train --model rbm --bins 1 --train " + data +
                      " --hidden 5 --epochs 2 --batch 8 --seed 9 --out " + m1,
                  tmp)
              .exit_code == 0);
  REQUIRE(run_cli("train --model eri --bins 1 --train " + data +
                      " --hidden 5 --epochs 2 --batch 8 --seed 9 --out " + m2,
                  tmp)
              .exit_code == 0);
  auto b1 = file_bytes(m1);
  auto b2 = file_bytes(m2);
  REQUIRE(b1.size() == b2.size());
  REQUIRE(b1[8] == 'p');
  REQUIRE(b2[8] == 'e');
  b1[8] = b2[8];
  REQUIRE(b1 == b2);
}

TEST_CASE("epochs zero stores the seeded initialization") {
  testutil::TempDir tmp;
  const std::string data = make_dataset_file(tmp, 10, "train.amat");
  const std::string model = tmp.file("init.bin");
  REQUIRE(run_cli("train --model rbm --train " + data +
                      " --hidden 4 --epochs 0 --seed 77 --out " + model,
                  tmp)
              .exit_code == 0);
  const erirbm::ModelFile mf = erirbm::load_model(model);
  std::mt19937_64 rng(77);
  const erirbm::RbmModel init = erirbm::init_rbm(4, 28, 28, 0.01, rng);
  REQUIRE(mf.W[0].data == init.W.data);
  for (double x : mf.c) REQUIRE(x == 0.0);
}

TEST_CASE("the features command reproduces the library pipeline exactly") {
  testutil::TempDir tmp;
  const std::string data = make_dataset_file(tmp, 20, "data.amat");
  const std::string model = tmp.file("m.bin");
  REQUIRE(run_cli("train --model eri --train " + data +
                      " --hidden 7 --bins 4 --epochs 1 --batch 10 --out " + model,
                  tmp)
              .exit_code == 0);
  const std::string csv = tmp.file("f.csv");
  REQUIRE(run_cli("features --model-file " + model + " --data " + data + " --out " + csv, tmp)
              .exit_code == 0);

  // library-side reference: same model file, same data, same export call
  const erirbm::ModelFile mf = erirbm::load_model(model);
  const erirbm::EriModel m = erirbm::eri_from(mf);
  erirbm::Dataset bin = erirbm::binarize(erirbm::load_amat(data), 0.3);
  erirbm::annotate_orientations(bin, m.angles);
  erirbm::FeatureSet fs;
  fs.vectors = erirbm::Mat(bin.size(), m.hidden_count());
  fs.labels = bin.labels;
  for (std::size_t i = 0; i < bin.size(); ++i) {
    const auto f = erirbm::features_eri(m, bin.images[i], bin.orientation[i]);
    std::copy(f.begin(), f.end(), fs.vectors.row(i).begin());
  }
  const std::string ref_csv = tmp.file("ref.csv");
  erirbm::export_features(fs, ref_csv);
  REQUIRE(file_bytes(csv) == file_bytes(ref_csv));

  // 1 label column + H feature columns, one row per sample plus the header
  std::ifstream in(csv);
  std::string header;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::count(header.begin(), header.end(), ',') == 7);
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  REQUIRE(rows == 20);
}

TEST_CASE("eval scores identical train and test CSVs at 100 percent with one neighbor") {
  testutil::TempDir tmp;
  const std::string data = make_dataset_file(tmp, 16, "data.amat");
  const std::string model = tmp.file("m.bin");
  REQUIRE(run_cli("train --model rbm --train " + data +
                      " --hidden 5 --epochs 1 --batch 8 --out " + model,
                  tmp)
              .exit_code == 0);
  const std::string csv = tmp.file("f.csv");
  REQUIRE(run_cli("features --model-file " + model + " --data " + data + " --out " + csv, tmp)
              .exit_code == 0);
  const RunResult r =
      run_cli("eval --train-csv " + csv + " --test-csv " + csv + " --classifier knn --k 1", tmp);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.out == "accuracy=100.00\n");

  const RunResult s =
      run_cli("eval --train-csv " + csv + " --test-csv " + csv + " --classifier softmax", tmp);
  REQUIRE(s.exit_code == 0);
  double acc = -1.0;
  REQUIRE(std::sscanf(s.out.c_str(), "accuracy=%lf", &acc) == 1);
  REQUIRE(acc >= 0.0);
  REQUIRE(acc <= 100.0);
}

TEST_CASE("eval rejects mismatched feature widths") {
  testutil::TempDir tmp;
  erirbm::FeatureSet a, b;
  a.vectors = erirbm::Mat(2, 3, 0.5);
  a.labels = {0, 1};
  b.vectors = erirbm::Mat(2, 4, 0.5);
  b.labels = {0, 1};
  erirbm::export_features(a, tmp.file("a.csv"));
  erirbm::export_features(b, tmp.file("b.csv"));
  const RunResult r =
      run_cli("eval --train-csv " + tmp.file("a.csv") + " --test-csv " + tmp.file("b.csv"), tmp);
  REQUIRE(r.exit_code == 1);
}

TEST_CASE("dump-filters writes a PGM grid with separators") {
  testutil::TempDir tmp;
  const std::string data = make_dataset_file(tmp, 12, "data.amat");
  const std::string model = tmp.file("m.bin");
  REQUIRE(run_cli("train --model eri --bins 2 --train " + data +
                      " --hidden 10 --epochs 1 --batch 6 --out " + model,
                  tmp)
              .exit_code == 0);
  const std::string pgm = tmp.file("filters.pgm");
  REQUIRE(run_cli("dump-filters --model-file " + model + " --matrix 2 --grid 5 --out " + pgm, tmp)
              .exit_code == 0);

  std::ifstream in(pgm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  REQUIRE(magic == "P5");
  REQUIRE(w == 5 * 28 + 4);
  REQUIRE(h == 2 * 28 + 1);
  REQUIRE(maxval == 255);
  in.get();
  std::vector<char> pixels(std::size_t(w) * h);
  in.read(pixels.data(), std::streamsize(pixels.size()));
  REQUIRE(in.gcount() == std::streamsize(pixels.size()));

  REQUIRE(run_cli("dump-filters --model-file " + model + " --matrix 3 --out " + tmp.file("x.pgm"),
                  tmp)
              .exit_code == 1);
}

TEST_CASE("orient prints the estimate and the bin weights") {
  testutil::TempDir tmp;
  erirbm::Dataset d;
  d.images.push_back(testutil::make_grating(28, 28, 50.0));
  d.labels.push_back(3);
  d.images.emplace_back(28, 28, 0.0);  // blank
  d.labels.push_back(0);
  const std::string data = tmp.file("two.amat");
  testutil::write_amat(d, data);

  const RunResult grating = run_cli("orient --data " + data + " --index 0 --bins 18", tmp);
  REQUIRE(grating.exit_code == 0);
  int s = 0;
  double psi = 0.0;
  char degen[8] = {0};
  REQUIRE(std::sscanf(grating.out.c_str(), "s=%d psi=%lf degenerate=%7s", &s, &psi, degen) == 3);
  REQUIRE(s == 3);
  REQUIRE(psi == 50.0);
  REQUIRE(std::string(degen) == "false");

  // the printed bins sum to the histogram total of the binarized sample
  const std::size_t bins_pos = grating.out.find("bins=");
  REQUIRE(bins_pos != std::string::npos);
  std::istringstream bins_in(grating.out.substr(bins_pos + 5));
  double total = 0.0, v = 0.0;
  char comma = 0;
  while (bins_in >> v) {
    total += v;
    bins_in >> comma;
  }
  const erirbm::Dataset bin = erirbm::binarize(d, 0.3);
  const auto hist = erirbm::gradient_histogram(bin.images[0], erirbm::AngleSet(18));
  REQUIRE(total == Catch::Approx(hist.total()).epsilon(1e-6));

  const RunResult blank = run_cli("orient --data " + data + " --index 1 --bins 18", tmp);
  REQUIRE(blank.exit_code == 0);
  REQUIRE(blank.out.substr(0, 26) == "s=1 psi=0 degenerate=true\n");
}

TEST_CASE("bad flags exit nonzero") {
  testutil::TempDir tmp;
  REQUIRE(run_cli("train --model nonsense --train x --out y", tmp).exit_code != 0);
  REQUIRE(run_cli("eval --train-csv missing.csv --test-csv missing.csv", tmp).exit_code != 0);
}
