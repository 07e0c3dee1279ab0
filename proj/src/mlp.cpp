#include "phonerec/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phonerec/error.hpp"
#include "phonerec/parallel.hpp"
#include "phonerec/rng.hpp"

namespace phonerec::mlp {

namespace {

constexpr int kGradShards = 8;

struct ForwardState {
  std::vector<double> hidden;  // post-ReLU
  std::vector<double> scores;  // softmax
};

ForwardState forward(const MlpModel& model, std::span<const double> x) {
  const MlpConfig& cfg = model.config;
  if (x.size() != static_cast<std::size_t>(cfg.input_dim)) {
    throw DataError("mlp input dimension mismatch: " + std::to_string(x.size()) + " vs " +
                    std::to_string(cfg.input_dim));
  }
  ForwardState st;
  st.hidden.assign(static_cast<std::size_t>(cfg.hidden_units), 0.0);
  for (int h = 0; h < cfg.hidden_units; ++h) st.hidden[static_cast<std::size_t>(h)] = model.hidden_bias[static_cast<std::size_t>(h)];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (v == 0.0) continue;
    const double* w = model.hidden_weights.row(i);
    for (int h = 0; h < cfg.hidden_units; ++h) st.hidden[static_cast<std::size_t>(h)] += v * w[h];
  }
  for (double& h : st.hidden) h = std::max(0.0, h);

  st.scores.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);
  for (int j = 0; j < cfg.num_classes; ++j) st.scores[static_cast<std::size_t>(j)] = model.output_bias[static_cast<std::size_t>(j)];
  for (int h = 0; h < cfg.hidden_units; ++h) {
    const double v = st.hidden[static_cast<std::size_t>(h)];
    if (v == 0.0) continue;
    const double* w = model.output_weights.row(static_cast<std::size_t>(h));
    for (int j = 0; j < cfg.num_classes; ++j) st.scores[static_cast<std::size_t>(j)] += v * w[j];
  }
  const double peak = *std::max_element(st.scores.begin(), st.scores.end());
  double sum = 0.0;
  for (double& s : st.scores) {
    s = std::exp(s - peak);
    sum += s;
  }
  for (double& s : st.scores) s /= sum;
  return st;
}

struct GradAccum {
  Matrix hidden_weights;
  std::vector<double> hidden_bias;
  Matrix output_weights;
  std::vector<double> output_bias;
  double loss = 0.0;

  explicit GradAccum(const MlpConfig& cfg)
      : hidden_weights(static_cast<std::size_t>(cfg.input_dim), static_cast<std::size_t>(cfg.hidden_units)),
        hidden_bias(static_cast<std::size_t>(cfg.hidden_units), 0.0),
        output_weights(static_cast<std::size_t>(cfg.hidden_units), static_cast<std::size_t>(cfg.num_classes)),
        output_bias(static_cast<std::size_t>(cfg.num_classes), 0.0) {}

  void add(const GradAccum& o) {
    for (std::size_t i = 0; i < hidden_weights.size(); ++i) hidden_weights.data()[i] += o.hidden_weights.data()[i];
    for (std::size_t i = 0; i < hidden_bias.size(); ++i) hidden_bias[i] += o.hidden_bias[i];
    for (std::size_t i = 0; i < output_weights.size(); ++i) output_weights.data()[i] += o.output_weights.data()[i];
    for (std::size_t i = 0; i < output_bias.size(); ++i) output_bias[i] += o.output_bias[i];
    loss += o.loss;
  }
};

void accumulate_example(const MlpModel& model, const double* x_ptr, int label, GradAccum& acc) {
  const MlpConfig& cfg = model.config;
  const std::span<const double> x{x_ptr, static_cast<std::size_t>(cfg.input_dim)};
  const ForwardState st = forward(model, x);
  acc.loss += -std::log(std::max(st.scores[static_cast<std::size_t>(label)], 1e-300));

  std::vector<double> du = st.scores;
  du[static_cast<std::size_t>(label)] -= 1.0;

  std::vector<double> dh(static_cast<std::size_t>(cfg.hidden_units), 0.0);
  for (int h = 0; h < cfg.hidden_units; ++h) {
    const double v = st.hidden[static_cast<std::size_t>(h)];
    double* gw = acc.output_weights.row(static_cast<std::size_t>(h));
    const double* w = model.output_weights.row(static_cast<std::size_t>(h));
    double g = 0.0;
    for (int j = 0; j < cfg.num_classes; ++j) {
      gw[j] += v * du[static_cast<std::size_t>(j)];
      g += w[j] * du[static_cast<std::size_t>(j)];
    }
    dh[static_cast<std::size_t>(h)] = v > 0.0 ? g : 0.0;  // ReLU mask
  }
  for (int j = 0; j < cfg.num_classes; ++j) acc.output_bias[static_cast<std::size_t>(j)] += du[static_cast<std::size_t>(j)];

  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (v == 0.0) continue;
    double* gw = acc.hidden_weights.row(i);
    for (int h = 0; h < cfg.hidden_units; ++h) gw[h] += v * dh[static_cast<std::size_t>(h)];
  }
  for (int h = 0; h < cfg.hidden_units; ++h) acc.hidden_bias[static_cast<std::size_t>(h)] += dh[static_cast<std::size_t>(h)];
}

}  // namespace

void MlpConfig::validate() const {
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
}

MlpModel mlp_init(const MlpConfig& cfg) {
  cfg.validate();
  MlpModel model;
  model.config = cfg;
  Rng rng(cfg.seed);
  const double h_limit = std::sqrt(3.0 / cfg.input_dim);
  model.hidden_weights = Matrix(static_cast<std::size_t>(cfg.input_dim), static_cast<std::size_t>(cfg.hidden_units));
  for (std::size_t i = 0; i < model.hidden_weights.size(); ++i) {
    model.hidden_weights.data()[i] = rng.uniform(-h_limit, h_limit);
  }
  model.hidden_bias.assign(static_cast<std::size_t>(cfg.hidden_units), 0.0);
  const double o_limit = std::sqrt(3.0 / cfg.hidden_units);
  model.output_weights = Matrix(static_cast<std::size_t>(cfg.hidden_units), static_cast<std::size_t>(cfg.num_classes));
  for (std::size_t i = 0; i < model.output_weights.size(); ++i) {
    model.output_weights.data()[i] = rng.uniform(-o_limit, o_limit);
  }
  model.output_bias.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);
  return model;
}

std::vector<double> mlp_scores(const MlpModel& model, std::span<const double> feature) {
  return forward(model, feature).scores;
}

double mlp_loss(const MlpModel& model, const Matrix& features, const std::vector<int>& labels) {
  if (features.rows() == 0) throw DataError("loss batch is empty");
  double total = 0.0;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto st = forward(model, {features.row(r), features.cols()});
    total += -std::log(std::max(st.scores[static_cast<std::size_t>(labels[r])], 1e-300));
  }
  return total / static_cast<double>(features.rows());
}

MlpGradients mlp_loss_gradients(const MlpModel& model, const Matrix& features,
                                const std::vector<int>& labels) {
  if (features.rows() == 0) throw DataError("gradient batch is empty");
  if (features.rows() != labels.size()) throw DataError("features/labels size mismatch");
  const std::size_t n = features.rows();
  const int shards = static_cast<int>(std::min<std::size_t>(kGradShards, n));
  std::vector<GradAccum> partial(static_cast<std::size_t>(shards), GradAccum(model.config));
  parallel_for(static_cast<std::size_t>(shards), [&](std::size_t s) {
    const std::size_t lo = n * s / static_cast<std::size_t>(shards);
    const std::size_t hi = n * (s + 1) / static_cast<std::size_t>(shards);
    for (std::size_t i = lo; i < hi; ++i) {
      accumulate_example(model, features.row(i), labels[i], partial[s]);
    }
  });
  for (int s = 1; s < shards; ++s) partial[0].add(partial[static_cast<std::size_t>(s)]);

  GradAccum& total = partial[0];
  const double inv_n = 1.0 / static_cast<double>(n);
  MlpGradients out;
  out.hidden_weights = std::move(total.hidden_weights);
  out.hidden_bias = std::move(total.hidden_bias);
  out.output_weights = std::move(total.output_weights);
  out.output_bias = std::move(total.output_bias);
  for (std::size_t i = 0; i < out.hidden_weights.size(); ++i) out.hidden_weights.data()[i] *= inv_n;
  for (auto& b : out.hidden_bias) b *= inv_n;
  for (std::size_t i = 0; i < out.output_weights.size(); ++i) out.output_weights.data()[i] *= inv_n;
  for (auto& b : out.output_bias) b *= inv_n;
  out.loss = total.loss * inv_n;
  return out;
}

MlpModel mlp_train(const Matrix& features, const std::vector<int>& labels, const MlpConfig& cfg,
                   std::vector<double>* epoch_loss) {
  cfg.validate();
  if (features.rows() == 0) throw DataError("mlp_train: no training features");
  if (features.rows() != labels.size()) throw DataError("features/labels size mismatch");
  for (int label : labels) {
    if (label < 0 || label >= cfg.num_classes) {
      throw DataError("label index " + std::to_string(label) + " out of range");
    }
  }

  MlpModel model = mlp_init(cfg);
  Rng rng(derive_seed(cfg.seed, "mlp.order"));
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), 0);

  if (epoch_loss) epoch_loss->clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t base = 0; base < order.size(); base += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), base + static_cast<std::size_t>(cfg.batch_size));
      Matrix batch(0, features.cols());
      std::vector<int> batch_labels;
      for (std::size_t i = base; i < end; ++i) {
        batch.append_row(features.row(order[i]));
        batch_labels.push_back(labels[order[i]]);
      }
      const MlpGradients grad = mlp_loss_gradients(model, batch, batch_labels);
      if (!std::isfinite(grad.loss)) {
        throw DataError("mlp training diverged (non-finite loss; lower the learning rate)");
      }
      loss_sum += grad.loss * static_cast<double>(end - base);
      const double lr = cfg.learning_rate;
      for (std::size_t i = 0; i < model.hidden_weights.size(); ++i) {
        model.hidden_weights.data()[i] -= lr * grad.hidden_weights.data()[i];
      }
      for (std::size_t i = 0; i < model.hidden_bias.size(); ++i) model.hidden_bias[i] -= lr * grad.hidden_bias[i];
      for (std::size_t i = 0; i < model.output_weights.size(); ++i) {
        model.output_weights.data()[i] -= lr * grad.output_weights.data()[i];
      }
      for (std::size_t i = 0; i < model.output_bias.size(); ++i) model.output_bias[i] -= lr * grad.output_bias[i];
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(order.size()));
  }
  return model;
}

int mlp_predict(const MlpModel& model, std::span<const double> feature) {
  const auto scores = mlp_scores(model, feature);
  int best = 0;
  for (int j = 1; j < model.config.num_classes; ++j) {
    if (scores[static_cast<std::size_t>(j)] > scores[static_cast<std::size_t>(best)]) best = j;
  }
  return best;
}

std::vector<int> mlp_predict_batch(const MlpModel& model, const Matrix& features) {
  std::vector<int> out(features.rows());
  parallel_for(features.rows(), [&](std::size_t r) {
    out[r] = mlp_predict(model, {features.row(r), features.cols()});
  });
  return out;
}

}  // namespace phonerec::mlp
