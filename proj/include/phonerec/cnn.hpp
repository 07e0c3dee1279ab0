#pragma once

#include <cstdint>
#include <vector>

#include "phonerec/matrix.hpp"

namespace phonerec::cnn {

struct CnnConfig {
  int num_maps = 38;
  int mask_rows = 29;
  int mask_cols = 1;
  int pool_rows = 5;
  int pool_cols = 5;
  double learning_rate = 0.01;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int image_rows = 128;
  int image_cols = 5;
  int num_classes = 40;

  void validate() const;
  int conv_rows() const { return image_rows - mask_rows + 1; }
  int conv_cols() const { return image_cols - mask_cols + 1; }
  // Non-overlapping pooling; a ragged edge is padded with -inf, so the grid
  // rounds up.
  int pooled_rows() const { return (conv_rows() + pool_rows - 1) / pool_rows; }
  int pooled_cols() const { return (conv_cols() + pool_cols - 1) / pool_cols; }
  int feature_dim() const { return num_maps * pooled_rows() * pooled_cols(); }
};

// One convolution layer (valid cross-correlation + bias + ReLU), max pooling,
// and a softmax head. The pooled activations double as the feature vector.
struct CnnModel {
  CnnConfig config;
  std::vector<Matrix> kernels;      // num_maps of mask_rows x mask_cols
  std::vector<double> kernel_bias;  // one per map
  Matrix head_weights;              // feature_dim x num_classes
  std::vector<double> head_bias;    // num_classes

  int feature_dim() const { return config.feature_dim(); }
};

// Seeded initialization: uniform weights scaled by fan-in, zero biases.
CnnModel cnn_init(const CnnConfig& cfg);

// ReLU feature maps for one image.
std::vector<Matrix> conv_forward(const Matrix& image, const CnnModel& model);

struct PoolResult {
  std::vector<Matrix> maps;              // pooled_rows x pooled_cols each
  std::vector<std::vector<int>> argmax;  // flat index into the conv map, per cell
};

PoolResult max_pool(const std::vector<Matrix>& maps, int pool_rows, int pool_cols);

struct ForwardResult {
  std::vector<double> features;  // flattened pooled maps, length feature_dim
  std::vector<double> scores;    // softmax over num_classes
};

ForwardResult cnn_forward(const Matrix& image, const CnnModel& model);

// Mean cross-entropy over a batch.
double cnn_loss(const CnnModel& model, const std::vector<Matrix>& images,
                const std::vector<int>& labels);

struct CnnGradients {
  std::vector<Matrix> kernels;
  std::vector<double> kernel_bias;
  Matrix head_weights;
  std::vector<double> head_bias;
  double loss = 0.0;  // mean over the batch
};

// Mean-loss gradients for a batch. Accumulation runs over a fixed number of
// contiguous shards summed in shard order, so the result is identical for any
// worker count.
CnnGradients cnn_loss_gradients(const CnnModel& model, const std::vector<Matrix>& images,
                                const std::vector<int>& labels);
CnnGradients cnn_loss_gradients_serial(const CnnModel& model, const std::vector<Matrix>& images,
                                       const std::vector<int>& labels);

// Mini-batch SGD on cross-entropy. Deterministic given cfg.seed.
CnnModel cnn_train(const std::vector<Matrix>& images, const std::vector<int>& labels,
                   const CnnConfig& cfg, std::vector<double>* epoch_loss = nullptr);

// Row i is the feature vector of image i; the softmax head is not applied.
Matrix extract_features(const std::vector<Matrix>& images, const CnnModel& model);
Matrix extract_features_serial(const std::vector<Matrix>& images, const CnnModel& model);

}  // namespace phonerec::cnn
