// Timing comparison between the OpenMP kernels and their serial reference
// twins. Not a test; build and run it by hand:
//   ./build/bench/phonerec_bench [workers]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "phonerec/cnn.hpp"
#include "phonerec/htsvm.hpp"
#include "phonerec/parallel.hpp"
#include "phonerec/rng.hpp"
#include "phonerec/spectro.hpp"
#include "phonerec/svm.hpp"

using namespace phonerec;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double time_seconds(F&& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx\n", name, serial, parallel,
              parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) set_workers(std::atoi(argv[1]));
  std::printf("workers: %d\n", workers());

  Rng rng(1);

  // spectrogram extraction over a batch of 1s utterances
  {
    std::vector<corpus::Utterance> utts(24);
    for (auto& utt : utts) {
      utt.sample_rate_hz = 16000;
      utt.samples.resize(16000);
      for (auto& s : utt.samples) s = rng.uniform(-1, 1);
      utt.segments = {{0, 16000, "aa"}};
    }
    const spectro::SpectroConfig cfg;
    const double serial = time_seconds([&] {
      for (const auto& utt : utts) spectro::extract_frame_images_serial(utt, cfg);
    });
    const double parallel = time_seconds([&] {
      for (const auto& utt : utts) spectro::extract_frame_images(utt, cfg);
    });
    row("spectrogram extraction", serial, parallel);
  }

  // CNN feature extraction and gradient accumulation
  {
    cnn::CnnConfig cfg;  // production defaults: 38 maps, 29x1 masks, 5x5 pool
    cfg.num_classes = 9;
    const cnn::CnnModel model = cnn::cnn_init(cfg);
    std::vector<Matrix> images;
    std::vector<int> labels;
    for (int i = 0; i < 512; ++i) {
      Matrix m(128, 5);
      for (std::size_t j = 0; j < m.size(); ++j) m.data()[j] = rng.uniform(0, 1);
      images.push_back(std::move(m));
      labels.push_back(static_cast<int>(rng.below(9)));
    }
    const double fs = time_seconds([&] { cnn::extract_features_serial(images, model); });
    const double fp = time_seconds([&] { cnn::extract_features(images, model); });
    row("cnn feature extraction", fs, fp);
    const double gs = time_seconds([&] { cnn::cnn_loss_gradients_serial(model, images, labels); });
    const double gp = time_seconds([&] { cnn::cnn_loss_gradients(model, images, labels); });
    row("cnn gradient accumulation", gs, gp);
  }

  // SVM batch decision
  {
    Matrix x(600, 40);
    std::vector<int> y;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(-1, 1);
      y.push_back(x(r, 0) > 0 ? 1 : -1);
    }
    svm::SmoSettings settings;
    const auto model = svm::smo_train(x, y, 10.0, svm::KernelParams{4, 1.0, 1.0 / 40.0}, settings);
    Matrix probes(20000, 40);
    for (std::size_t i = 0; i < probes.size(); ++i) probes.data()[i] = rng.uniform(-1, 1);
    const double ds = time_seconds([&] { svm::decision_batch_serial(model, probes); });
    const double dp = time_seconds([&] { svm::decision_batch(model, probes); });
    row("svm batch decision", ds, dp);
  }

  return 0;
}
