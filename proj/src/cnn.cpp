#include "phonerec/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phonerec/error.hpp"
#include "phonerec/parallel.hpp"
#include "phonerec/rng.hpp"

namespace phonerec::cnn {

namespace {

constexpr int kGradShards = 8;  // fixed so results never depend on the worker count

void check_image(const Matrix& image, const CnnConfig& cfg) {
  if (image.rows() != static_cast<std::size_t>(cfg.image_rows) ||
      image.cols() != static_cast<std::size_t>(cfg.image_cols)) {
    throw DataError("image dimensions " + std::to_string(image.rows()) + "x" +
                    std::to_string(image.cols()) + " do not match configured " +
                    std::to_string(cfg.image_rows) + "x" + std::to_string(cfg.image_cols));
  }
}

// Valid cross-correlation plus bias, no activation.
Matrix conv_raw(const Matrix& image, const Matrix& kernel, double bias) {
  const std::size_t out_r = image.rows() - kernel.rows() + 1;
  const std::size_t out_c = image.cols() - kernel.cols() + 1;
  Matrix out(out_r, out_c);
  for (std::size_t r = 0; r < out_r; ++r) {
    for (std::size_t c = 0; c < out_c; ++c) {
      double acc = bias;
      for (std::size_t u = 0; u < kernel.rows(); ++u) {
        const double* img_row = image.row(r + u) + c;
        const double* ker_row = kernel.row(u);
        for (std::size_t v = 0; v < kernel.cols(); ++v) acc += img_row[v] * ker_row[v];
      }
      out(r, c) = acc;
    }
  }
  return out;
}

void softmax_inplace(std::vector<double>& scores) {
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - peak);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

struct ExampleState {
  std::vector<Matrix> pre_act;  // conv + bias, before ReLU
  PoolResult pooled;
  std::vector<double> features;
  std::vector<double> scores;
};

ExampleState forward_state(const Matrix& image, const CnnModel& model) {
  const CnnConfig& cfg = model.config;
  check_image(image, cfg);
  ExampleState st;
  st.pre_act.reserve(static_cast<std::size_t>(cfg.num_maps));
  std::vector<Matrix> activated(static_cast<std::size_t>(cfg.num_maps));
  for (int m = 0; m < cfg.num_maps; ++m) {
    Matrix z = conv_raw(image, model.kernels[static_cast<std::size_t>(m)],
                        model.kernel_bias[static_cast<std::size_t>(m)]);
    Matrix a = z;
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = std::max(0.0, a.data()[i]);
    activated[static_cast<std::size_t>(m)] = std::move(a);
    st.pre_act.push_back(std::move(z));
  }
  st.pooled = max_pool(activated, cfg.pool_rows, cfg.pool_cols);

  st.features.reserve(static_cast<std::size_t>(cfg.feature_dim()));
  for (const auto& map : st.pooled.maps) {
    st.features.insert(st.features.end(), map.data(), map.data() + map.size());
  }

  st.scores.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);
  for (int j = 0; j < cfg.num_classes; ++j) st.scores[static_cast<std::size_t>(j)] = model.head_bias[static_cast<std::size_t>(j)];
  for (std::size_t i = 0; i < st.features.size(); ++i) {
    const double f = st.features[i];
    if (f == 0.0) continue;
    const double* w = model.head_weights.row(i);
    for (int j = 0; j < cfg.num_classes; ++j) st.scores[static_cast<std::size_t>(j)] += f * w[j];
  }
  softmax_inplace(st.scores);
  return st;
}

struct GradAccum {
  std::vector<Matrix> kernels;
  std::vector<double> kernel_bias;
  Matrix head_weights;
  std::vector<double> head_bias;
  double loss = 0.0;

  explicit GradAccum(const CnnConfig& cfg)
      : kernels(static_cast<std::size_t>(cfg.num_maps),
                Matrix(static_cast<std::size_t>(cfg.mask_rows), static_cast<std::size_t>(cfg.mask_cols))),
        kernel_bias(static_cast<std::size_t>(cfg.num_maps), 0.0),
        head_weights(static_cast<std::size_t>(cfg.feature_dim()), static_cast<std::size_t>(cfg.num_classes)),
        head_bias(static_cast<std::size_t>(cfg.num_classes), 0.0) {}

  void add(const GradAccum& o) {
    for (std::size_t m = 0; m < kernels.size(); ++m) {
      for (std::size_t i = 0; i < kernels[m].size(); ++i) kernels[m].data()[i] += o.kernels[m].data()[i];
      kernel_bias[m] += o.kernel_bias[m];
    }
    for (std::size_t i = 0; i < head_weights.size(); ++i) head_weights.data()[i] += o.head_weights.data()[i];
    for (std::size_t j = 0; j < head_bias.size(); ++j) head_bias[j] += o.head_bias[j];
    loss += o.loss;
  }
};

// Backpropagates one example into the accumulator (sums, no averaging).
void accumulate_example(const CnnModel& model, const Matrix& image, int label, GradAccum& acc) {
  const CnnConfig& cfg = model.config;
  ExampleState st = forward_state(image, model);
  const double p = st.scores[static_cast<std::size_t>(label)];
  acc.loss += -std::log(std::max(p, 1e-300));

  // d loss / d logits
  std::vector<double> du = st.scores;
  du[static_cast<std::size_t>(label)] -= 1.0;

  // head gradients and d loss / d features
  std::vector<double> df(st.features.size(), 0.0);
  for (std::size_t i = 0; i < st.features.size(); ++i) {
    const double f = st.features[i];
    double* gw = acc.head_weights.row(i);
    const double* w = model.head_weights.row(i);
    double acc_df = 0.0;
    for (int j = 0; j < cfg.num_classes; ++j) {
      gw[j] += f * du[static_cast<std::size_t>(j)];
      acc_df += w[j] * du[static_cast<std::size_t>(j)];
    }
    df[i] = acc_df;
  }
  for (int j = 0; j < cfg.num_classes; ++j) acc.head_bias[static_cast<std::size_t>(j)] += du[static_cast<std::size_t>(j)];

  // route through pooling argmax and the ReLU mask back to the kernels
  const int pooled_cells = cfg.pooled_rows() * cfg.pooled_cols();
  const std::size_t conv_cols = static_cast<std::size_t>(cfg.conv_cols());
  for (int m = 0; m < cfg.num_maps; ++m) {
    const Matrix& z = st.pre_act[static_cast<std::size_t>(m)];
    Matrix dz(z.rows(), z.cols());
    bool any = false;
    for (int cell = 0; cell < pooled_cells; ++cell) {
      const double g = df[static_cast<std::size_t>(m * pooled_cells + cell)];
      if (g == 0.0) continue;
      const int flat = st.pooled.argmax[static_cast<std::size_t>(m)][static_cast<std::size_t>(cell)];
      const std::size_t r = static_cast<std::size_t>(flat) / conv_cols;
      const std::size_t c = static_cast<std::size_t>(flat) % conv_cols;
      if (z(r, c) > 0.0) {
        dz(r, c) += g;
        any = true;
      }
    }
    if (!any) continue;
    Matrix& gk = acc.kernels[static_cast<std::size_t>(m)];
    double gb = 0.0;
    for (std::size_t r = 0; r < dz.rows(); ++r) {
      for (std::size_t c = 0; c < dz.cols(); ++c) {
        const double g = dz(r, c);
        if (g == 0.0) continue;
        gb += g;
        for (std::size_t u = 0; u < gk.rows(); ++u) {
          const double* img_row = image.row(r + u) + c;
          double* gk_row = gk.row(u);
          for (std::size_t v = 0; v < gk.cols(); ++v) gk_row[v] += g * img_row[v];
        }
      }
    }
    acc.kernel_bias[static_cast<std::size_t>(m)] += gb;
  }
}

template <bool Parallel>
CnnGradients gradients_impl(const CnnModel& model, const std::vector<Matrix>& images,
                            const std::vector<int>& labels) {
  if (images.empty()) throw DataError("gradient batch is empty");
  if (images.size() != labels.size()) throw DataError("images/labels size mismatch");
  const std::size_t n = images.size();
  const int shards = static_cast<int>(std::min<std::size_t>(kGradShards, n));
  std::vector<GradAccum> partial(static_cast<std::size_t>(shards), GradAccum(model.config));
  auto run_shard = [&](std::size_t s) {
    const std::size_t lo = n * s / static_cast<std::size_t>(shards);
    const std::size_t hi = n * (s + 1) / static_cast<std::size_t>(shards);
    for (std::size_t i = lo; i < hi; ++i) {
      accumulate_example(model, images[i], labels[i], partial[s]);
    }
  };
  if constexpr (Parallel) {
    parallel_for(static_cast<std::size_t>(shards), run_shard);
  } else {
    for (std::size_t s = 0; s < static_cast<std::size_t>(shards); ++s) run_shard(s);
  }
  for (int s = 1; s < shards; ++s) partial[0].add(partial[static_cast<std::size_t>(s)]);

  GradAccum& total = partial[0];
  const double inv_n = 1.0 / static_cast<double>(n);
  CnnGradients out;
  out.kernels = std::move(total.kernels);
  out.kernel_bias = std::move(total.kernel_bias);
  out.head_weights = std::move(total.head_weights);
  out.head_bias = std::move(total.head_bias);
  for (auto& k : out.kernels) {
    for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] *= inv_n;
  }
  for (auto& b : out.kernel_bias) b *= inv_n;
  for (std::size_t i = 0; i < out.head_weights.size(); ++i) out.head_weights.data()[i] *= inv_n;
  for (auto& b : out.head_bias) b *= inv_n;
  out.loss = total.loss * inv_n;
  return out;
}

template <bool Parallel>
Matrix features_impl(const std::vector<Matrix>& images, const CnnModel& model) {
  Matrix out(images.size(), static_cast<std::size_t>(model.feature_dim()));
  auto row = [&](std::size_t i) {
    const ForwardResult fwd = cnn_forward(images[i], model);
    std::copy(fwd.features.begin(), fwd.features.end(), out.row(i));
  };
  if constexpr (Parallel) {
    parallel_for(images.size(), row);
  } else {
    for (std::size_t i = 0; i < images.size(); ++i) row(i);
  }
  return out;
}

}  // namespace

void CnnConfig::validate() const {
  if (num_maps < 1) throw ConfigError("num_maps must be >= 1");
  if (mask_rows < 1 || mask_cols < 1) throw ConfigError("mask dimensions must be >= 1");
  if (conv_rows() < 1 || conv_cols() < 1) {
    throw ConfigError("mask larger than image: conv output would be " +
                      std::to_string(conv_rows()) + "x" + std::to_string(conv_cols()));
  }
  if (pool_rows < 1 || pool_cols < 1) throw ConfigError("pool dimensions must be >= 1");
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
}

CnnModel cnn_init(const CnnConfig& cfg) {
  cfg.validate();
  CnnModel model;
  model.config = cfg;
  Rng rng(cfg.seed);
  const double k_limit = std::sqrt(3.0 / (cfg.mask_rows * cfg.mask_cols));
  for (int m = 0; m < cfg.num_maps; ++m) {
    Matrix k(static_cast<std::size_t>(cfg.mask_rows), static_cast<std::size_t>(cfg.mask_cols));
    for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] = rng.uniform(-k_limit, k_limit);
    model.kernels.push_back(std::move(k));
  }
  model.kernel_bias.assign(static_cast<std::size_t>(cfg.num_maps), 0.0);
  const double h_limit = std::sqrt(3.0 / cfg.feature_dim());
  model.head_weights = Matrix(static_cast<std::size_t>(cfg.feature_dim()),
                              static_cast<std::size_t>(cfg.num_classes));
  for (std::size_t i = 0; i < model.head_weights.size(); ++i) {
    model.head_weights.data()[i] = rng.uniform(-h_limit, h_limit);
  }
  model.head_bias.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);
  return model;
}

std::vector<Matrix> conv_forward(const Matrix& image, const CnnModel& model) {
  check_image(image, model.config);
  std::vector<Matrix> maps;
  maps.reserve(static_cast<std::size_t>(model.config.num_maps));
  for (int m = 0; m < model.config.num_maps; ++m) {
    Matrix z = conv_raw(image, model.kernels[static_cast<std::size_t>(m)],
                        model.kernel_bias[static_cast<std::size_t>(m)]);
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = std::max(0.0, z.data()[i]);
    maps.push_back(std::move(z));
  }
  return maps;
}

PoolResult max_pool(const std::vector<Matrix>& maps, int pool_rows, int pool_cols) {
  if (maps.empty()) throw DataError("max_pool: no feature maps");
  if (pool_rows < 1 || pool_cols < 1) throw ConfigError("pool dimensions must be >= 1");
  PoolResult result;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (const auto& map : maps) {
    const std::size_t out_r = (map.rows() + static_cast<std::size_t>(pool_rows) - 1) / static_cast<std::size_t>(pool_rows);
    const std::size_t out_c = (map.cols() + static_cast<std::size_t>(pool_cols) - 1) / static_cast<std::size_t>(pool_cols);
    Matrix pooled(out_r, out_c);
    std::vector<int> argmax(out_r * out_c, 0);
    for (std::size_t pr = 0; pr < out_r; ++pr) {
      for (std::size_t pc = 0; pc < out_c; ++pc) {
        double best = neg_inf;
        int best_idx = -1;
        const std::size_t r_end = std::min(map.rows(), (pr + 1) * static_cast<std::size_t>(pool_rows));
        const std::size_t c_end = std::min(map.cols(), (pc + 1) * static_cast<std::size_t>(pool_cols));
        for (std::size_t r = pr * static_cast<std::size_t>(pool_rows); r < r_end; ++r) {
          for (std::size_t c = pc * static_cast<std::size_t>(pool_cols); c < c_end; ++c) {
            if (map(r, c) > best) {
              best = map(r, c);
              best_idx = static_cast<int>(r * map.cols() + c);
            }
          }
        }
        pooled(pr, pc) = best;
        argmax[pr * out_c + pc] = best_idx;
      }
    }
    result.maps.push_back(std::move(pooled));
    result.argmax.push_back(std::move(argmax));
  }
  return result;
}

ForwardResult cnn_forward(const Matrix& image, const CnnModel& model) {
  ExampleState st = forward_state(image, model);
  return {std::move(st.features), std::move(st.scores)};
}

double cnn_loss(const CnnModel& model, const std::vector<Matrix>& images,
                const std::vector<int>& labels) {
  if (images.empty()) throw DataError("loss batch is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ForwardResult fwd = cnn_forward(images[i], model);
    total += -std::log(std::max(fwd.scores[static_cast<std::size_t>(labels[i])], 1e-300));
  }
  return total / static_cast<double>(images.size());
}

CnnGradients cnn_loss_gradients(const CnnModel& model, const std::vector<Matrix>& images,
                                const std::vector<int>& labels) {
  return gradients_impl<true>(model, images, labels);
}

CnnGradients cnn_loss_gradients_serial(const CnnModel& model, const std::vector<Matrix>& images,
                                       const std::vector<int>& labels) {
  return gradients_impl<false>(model, images, labels);
}

CnnModel cnn_train(const std::vector<Matrix>& images, const std::vector<int>& labels,
                   const CnnConfig& cfg, std::vector<double>* epoch_loss) {
  cfg.validate();
  if (images.empty()) throw DataError("cnn_train: no training images");
  if (images.size() != labels.size()) throw DataError("images/labels size mismatch");
  for (int label : labels) {
    if (label < 0 || label >= cfg.num_classes) {
      throw DataError("label index " + std::to_string(label) + " out of range");
    }
  }

  CnnModel model = cnn_init(cfg);
  Rng rng(derive_seed(cfg.seed, "cnn.order"));
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<Matrix> batch_images;
  std::vector<int> batch_labels;
  if (epoch_loss) epoch_loss->clear();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t base = 0; base < order.size(); base += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), base + static_cast<std::size_t>(cfg.batch_size));
      batch_images.clear();
      batch_labels.clear();
      for (std::size_t i = base; i < end; ++i) {
        batch_images.push_back(images[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      const CnnGradients grad = cnn_loss_gradients(model, batch_images, batch_labels);
      if (!std::isfinite(grad.loss)) {
        throw DataError("cnn training diverged (non-finite loss; lower the learning rate)");
      }
      loss_sum += grad.loss * static_cast<double>(end - base);
      const double lr = cfg.learning_rate;
      for (int m = 0; m < cfg.num_maps; ++m) {
        Matrix& k = model.kernels[static_cast<std::size_t>(m)];
        const Matrix& gk = grad.kernels[static_cast<std::size_t>(m)];
        for (std::size_t i = 0; i < k.size(); ++i) k.data()[i] -= lr * gk.data()[i];
        model.kernel_bias[static_cast<std::size_t>(m)] -= lr * grad.kernel_bias[static_cast<std::size_t>(m)];
      }
      for (std::size_t i = 0; i < model.head_weights.size(); ++i) {
        model.head_weights.data()[i] -= lr * grad.head_weights.data()[i];
      }
      for (int j = 0; j < cfg.num_classes; ++j) {
        model.head_bias[static_cast<std::size_t>(j)] -= lr * grad.head_bias[static_cast<std::size_t>(j)];
      }
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(order.size()));
  }
  return model;
}

Matrix extract_features(const std::vector<Matrix>& images, const CnnModel& model) {
  return features_impl<true>(images, model);
}

Matrix extract_features_serial(const std::vector<Matrix>& images, const CnnModel& model) {
  return features_impl<false>(images, model);
}

}  // namespace phonerec::cnn
