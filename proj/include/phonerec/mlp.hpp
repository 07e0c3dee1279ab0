#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phonerec/matrix.hpp"

namespace phonerec::mlp {

struct MlpConfig {
  int hidden_units = 100;
  double learning_rate = 0.01;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int input_dim = 0;
  int num_classes = 0;

  void validate() const;
};

// One ReLU hidden layer and a softmax output, the reference classifier the
// tree is compared against.
struct MlpModel {
  MlpConfig config;
  Matrix hidden_weights;            // input_dim x hidden_units
  std::vector<double> hidden_bias;  // hidden_units
  Matrix output_weights;            // hidden_units x num_classes
  std::vector<double> output_bias;  // num_classes
};

MlpModel mlp_init(const MlpConfig& cfg);

std::vector<double> mlp_scores(const MlpModel& model, std::span<const double> feature);

double mlp_loss(const MlpModel& model, const Matrix& features, const std::vector<int>& labels);

struct MlpGradients {
  Matrix hidden_weights;
  std::vector<double> hidden_bias;
  Matrix output_weights;
  std::vector<double> output_bias;
  double loss = 0.0;
};

// Shard-deterministic mean gradients, same contract as the CNN trainer.
MlpGradients mlp_loss_gradients(const MlpModel& model, const Matrix& features,
                                const std::vector<int>& labels);

MlpModel mlp_train(const Matrix& features, const std::vector<int>& labels, const MlpConfig& cfg,
                   std::vector<double>* epoch_loss = nullptr);

// argmax of the output scores; ties go to the lowest class index.
int mlp_predict(const MlpModel& model, std::span<const double> feature);
std::vector<int> mlp_predict_batch(const MlpModel& model, const Matrix& features);

}  // namespace phonerec::mlp
