#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phonerec/cnn.hpp"
#include "phonerec/htsvm.hpp"
#include "phonerec/spectro.hpp"

namespace phonerec::cli {

// Everything a pipeline run needs, loadable from a `key = value` file with
// CLI overrides on top. Unknown keys are rejected before any compute starts.
struct PipelineConfig {
  std::filesystem::path corpus_root;
  std::filesystem::path workdir;
  std::filesystem::path model_file;
  std::filesystem::path taxonomy_file;
  std::filesystem::path fold_table;

  bool include_sa = false;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware default

  spectro::SpectroConfig spectro;

  int cnn_maps = 38;
  int cnn_mask_rows = 29;
  int cnn_mask_cols = 1;
  int cnn_pool_rows = 5;
  int cnn_pool_cols = 5;
  double cnn_learning_rate = 0.02;
  int cnn_epochs = 4;
  int cnn_batch = 32;

  double svm_c = 10000.0;
  int svm_degree = 4;
  double svm_coef0 = 1.0;
  double svm_scale = 0.0;  // 0 = auto (1 / feature_dim)
  double svm_tol = 1e-3;
  long long svm_max_iter = 10'000'000;
  std::size_t svm_cache_mb = 256;
  int ensemble_members = 5;

  int smote_k = 5;

  bool mlp_enabled = false;
  int mlp_hidden = 100;
  double mlp_learning_rate = 0.05;
  int mlp_epochs = 6;
  int mlp_batch = 32;

  bool eval_include_sil = false;
  int eval_top_confusions = 10;

  // Applies one `key = value` assignment; throws ConfigError on unknown keys
  // or unparsable values.
  void apply(const std::string& key, const std::string& value);

  static PipelineConfig load(const std::filesystem::path& file);
  void apply_overrides(const std::vector<std::pair<std::string, std::string>>& overrides);

  // Existence checks for whichever input paths are set.
  void check_input_paths() const;
};

}  // namespace phonerec::cli
