#include <cmath>

#include "doctest.h"
#include "phonerec/error.hpp"
#include "phonerec/mlp.hpp"
#include "phonerec/rng.hpp"

using namespace phonerec;
using namespace phonerec::mlp;

namespace {

MlpConfig micro_config() {
  MlpConfig cfg;
  cfg.hidden_units = 5;
  cfg.input_dim = 6;
  cfg.num_classes = 3;
  cfg.seed = 7;
  return cfg;
}

void separable_toy(Rng& rng, std::size_t n, Matrix& features, std::vector<int>& labels) {
  features = Matrix(n, 6);
  labels.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    for (std::size_t d = 0; d < 6; ++d) {
      const bool hot = label == 0 ? d < 3 : d >= 3;
      features(i, d) = (hot ? 1.0 : 0.1) + rng.uniform(-0.05, 0.05);
    }
    labels.push_back(label);
  }
}

bool models_equal(const MlpModel& a, const MlpModel& b) {
  return a.hidden_weights == b.hidden_weights && a.hidden_bias == b.hidden_bias &&
         a.output_weights == b.output_weights && a.output_bias == b.output_bias;
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("gradients match central finite differences") {
  const MlpConfig cfg = micro_config();
  Rng rng(70);
  Matrix features(4, 6);
  for (std::size_t i = 0; i < features.size(); ++i) features.data()[i] = rng.uniform(-1, 1);
  const std::vector<int> labels = {0, 2, 1, 0};
  MlpModel model = mlp_init(cfg);
  const MlpGradients grad = mlp_loss_gradients(model, features, labels);

  const double h = 1e-5;
  double worst = 0.0;
  const auto check_param = [&](double* param, double analytic) {
    const double keep = *param;
    *param = keep + h;
    const double up = mlp_loss(model, features, labels);
    *param = keep - h;
    const double down = mlp_loss(model, features, labels);
    *param = keep;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max(std::abs(analytic), std::abs(fd));
    if (denom < 1e-7) return;
    worst = std::max(worst, std::abs(analytic - fd) / denom);
  };
  for (std::size_t i = 0; i < model.hidden_weights.size(); ++i) {
    check_param(&model.hidden_weights.data()[i], grad.hidden_weights.data()[i]);
  }
  for (std::size_t i = 0; i < model.hidden_bias.size(); ++i) {
    check_param(&model.hidden_bias[i], grad.hidden_bias[i]);
  }
  for (std::size_t i = 0; i < model.output_weights.size(); ++i) {
    check_param(&model.output_weights.data()[i], grad.output_weights.data()[i]);
  }
  for (std::size_t i = 0; i < model.output_bias.size(); ++i) {
    check_param(&model.output_bias[i], grad.output_bias[i]);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("learns a separable toy problem") {
  Rng rng(71);
  Matrix features;
  std::vector<int> labels;
  separable_toy(rng, 200, features, labels);
  MlpConfig cfg = micro_config();
  cfg.num_classes = 2;
  cfg.learning_rate = 0.2;
  cfg.epochs = 25;
  cfg.batch_size = 16;
  std::vector<double> losses;
  const MlpModel model = mlp_train(features, labels, cfg, &losses);
  CHECK(losses.back() <= losses.front());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    if (mlp_predict(model, {features.row(i), 6}) == labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(features.rows()) >= 0.99);
}

TEST_CASE("zero learning rate leaves the init untouched") {
  Rng rng(72);
  Matrix features;
  std::vector<int> labels;
  separable_toy(rng, 30, features, labels);
  MlpConfig cfg = micro_config();
  cfg.num_classes = 2;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  CHECK(models_equal(mlp_train(features, labels, cfg), mlp_init(cfg)));
}

TEST_CASE("same seed twice gives identical models") {
  Rng rng(73);
  Matrix features;
  std::vector<int> labels;
  separable_toy(rng, 50, features, labels);
  MlpConfig cfg = micro_config();
  cfg.num_classes = 2;
  cfg.epochs = 5;
  CHECK(models_equal(mlp_train(features, labels, cfg), mlp_train(features, labels, cfg)));
}

TEST_CASE("zero weights predict class 0 by the tie rule") {
  MlpConfig cfg = micro_config();
  MlpModel model = mlp_init(cfg);
  model.hidden_weights = Matrix(6, 5);
  model.hidden_bias.assign(5, 0.0);
  model.output_weights = Matrix(5, 3);
  model.output_bias.assign(3, 0.0);
  const std::vector<double> x = {0.3, -0.2, 0.9, 0.0, 0.1, -0.4};
  CHECK(mlp_predict(model, x) == 0);
}

TEST_CASE("scores are finite and normalized for random inputs") {
  const MlpConfig cfg = micro_config();
  const MlpModel model = mlp_init(cfg);
  Rng rng(74);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-100.0, 100.0);
    const auto scores = mlp_scores(model, x);
    double sum = 0.0;
    for (double s : scores) {
      CHECK(std::isfinite(s));
      sum += s;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("input validation") {
  MlpConfig cfg = micro_config();
  CHECK_THROWS_AS(mlp_train(Matrix(0, 6), {}, cfg), DataError);
  Matrix one(1, 6);
  CHECK_THROWS_AS(mlp_train(one, {5}, cfg), DataError);
  const MlpModel model = mlp_init(cfg);
  const std::vector<double> wrong(3, 0.0);
  CHECK_THROWS_AS(mlp_predict(model, wrong), DataError);
}

}  // TEST_SUITE
