// The OpenMP kernels must agree bitwise with their serial reference twins for
// any worker count.

#include "doctest.h"
#include "phonerec/cnn.hpp"
#include "phonerec/htsvm.hpp"
#include "phonerec/parallel.hpp"
#include "phonerec/rng.hpp"
#include "phonerec/spectro.hpp"
#include "phonerec/svm.hpp"

using namespace phonerec;

namespace {

struct WorkerGuard {
  explicit WorkerGuard(int n) { set_workers(n); }
  ~WorkerGuard() { set_workers(0); }
};

}  // namespace

TEST_SUITE("parallel") {

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  WorkerGuard guard(3);
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(8, [](std::size_t i) {
                    if (i == 5) throw DataError("boom");
                  }),
                  DataError);
}

TEST_CASE("spectrogram extraction matches the serial reference") {
  WorkerGuard guard(4);
  corpus::Utterance utt;
  utt.sample_rate_hz = 16000;
  Rng rng(401);
  utt.samples.resize(16000);
  for (auto& s : utt.samples) s = rng.uniform(-1, 1);
  utt.segments = {{0, 16000, "aa"}};
  const spectro::SpectroConfig cfg;
  const auto par = spectro::extract_frame_images(utt, cfg);
  const auto ser = spectro::extract_frame_images_serial(utt, cfg);
  REQUIRE(par.size() == ser.size());
  for (std::size_t f = 0; f < par.size(); ++f) CHECK(par[f].pixels == ser[f].pixels);
}

TEST_CASE("feature extraction and gradients match the serial reference") {
  WorkerGuard guard(5);
  cnn::CnnConfig cfg;
  cfg.num_maps = 3;
  cfg.mask_rows = 3;
  cfg.mask_cols = 1;
  cfg.pool_rows = 2;
  cfg.pool_cols = 2;
  cfg.image_rows = 10;
  cfg.image_cols = 4;
  cfg.num_classes = 4;
  cfg.seed = 11;
  const cnn::CnnModel model = cnn::cnn_init(cfg);
  Rng rng(402);
  std::vector<Matrix> images;
  std::vector<int> labels;
  for (int i = 0; i < 37; ++i) {
    Matrix m(10, 4);
    for (std::size_t j = 0; j < m.size(); ++j) m.data()[j] = rng.uniform(-1, 1);
    images.push_back(std::move(m));
    labels.push_back(static_cast<int>(rng.below(4)));
  }
  CHECK(cnn::extract_features(images, model) == cnn::extract_features_serial(images, model));

  const auto gp = cnn::cnn_loss_gradients(model, images, labels);
  const auto gs = cnn::cnn_loss_gradients_serial(model, images, labels);
  CHECK(gp.loss == gs.loss);
  CHECK(gp.head_weights == gs.head_weights);
  CHECK(gp.head_bias == gs.head_bias);
  for (std::size_t m = 0; m < gp.kernels.size(); ++m) CHECK(gp.kernels[m] == gs.kernels[m]);
  CHECK(gp.kernel_bias == gs.kernel_bias);
}

TEST_CASE("tree prediction matches the serial reference") {
  WorkerGuard guard(6);
  const char* taxonomy_text =
      "node root: sil lo hi\n"
      "leaf sil: sil\n"
      "node lo: a b\n"
      "leaf a: a\n"
      "leaf b: b\n"
      "node hi: c d\n"
      "leaf c: c\n"
      "leaf d: d\n";
  const auto taxonomy = htsvm::Taxonomy::parse(taxonomy_text, {"sil", "a", "b", "c", "d"});
  Rng rng(403);
  Matrix features(0, 5);
  std::vector<std::string> labels;
  const std::vector<std::string> alphabet = {"sil", "a", "b", "c", "d"};
  for (std::size_t p = 0; p < alphabet.size(); ++p) {
    for (int i = 0; i < 25; ++i) {
      double row[5];
      for (std::size_t d = 0; d < 5; ++d) row[d] = rng.uniform(-0.3, 0.3) + (d == p ? 3.0 : 0.0);
      features.append_row(row);
      labels.push_back(alphabet[p]);
    }
  }
  htsvm::HtsvmConfig cfg;
  cfg.C = 50.0;
  cfg.kernel = {2, 1.0, 0.3};
  cfg.seed = 6;
  const auto model = htsvm::train_tree(features, labels, taxonomy, cfg);
  CHECK(htsvm::predict_batch(model, features) == htsvm::predict_batch_serial(model, features));
}

}  // TEST_SUITE
