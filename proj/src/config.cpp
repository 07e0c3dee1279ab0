#include "phonerec/config.hpp"

#include <fstream>
#include <sstream>

#include "phonerec/error.hpp"

namespace phonerec::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return v;
}

}  // namespace

void PipelineConfig::apply(const std::string& key, const std::string& value) {
  if (key == "corpus_root") corpus_root = value;
  else if (key == "workdir") workdir = value;
  else if (key == "model_file") model_file = value;
  else if (key == "taxonomy_file") taxonomy_file = value;
  else if (key == "fold_table") fold_table = value;
  else if (key == "include_sa") include_sa = parse_bool(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "workers") workers = static_cast<int>(parse_int(key, value));
  else if (key == "spectro.window_ms") spectro.window_ms = parse_double(key, value);
  else if (key == "spectro.hop_ms") spectro.hop_ms = parse_double(key, value);
  else if (key == "spectro.sub_window") spectro.sub_window_samples = static_cast<int>(parse_int(key, value));
  else if (key == "spectro.sub_hop") spectro.sub_hop_samples = static_cast<int>(parse_int(key, value));
  else if (key == "spectro.fft_size") spectro.fft_size = static_cast<int>(parse_int(key, value));
  else if (key == "spectro.image_rows") spectro.image_rows = static_cast<int>(parse_int(key, value));
  else if (key == "spectro.image_cols") spectro.image_cols = static_cast<int>(parse_int(key, value));
  else if (key == "spectro.log_floor") spectro.log_floor = parse_double(key, value);
  else if (key == "cnn.maps") cnn_maps = static_cast<int>(parse_int(key, value));
  else if (key == "cnn.mask_rows") cnn_mask_rows = static_cast<int>(parse_int(key, value));
  else if (key == "cnn.mask_cols") cnn_mask_cols = static_cast<int>(parse_int(key, value));
  else if (key == "cnn.pool_rows") cnn_pool_rows = static_cast<int>(parse_int(key, value));
  else if (key == "cnn.pool_cols") cnn_pool_cols = static_cast<int>(parse_int(key, value));
  else if (key == "cnn.learning_rate") cnn_learning_rate = parse_double(key, value);
  else if (key == "cnn.epochs") cnn_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "cnn.batch") cnn_batch = static_cast<int>(parse_int(key, value));
  else if (key == "svm.c") svm_c = parse_double(key, value);
  else if (key == "svm.degree") svm_degree = static_cast<int>(parse_int(key, value));
  else if (key == "svm.coef0") svm_coef0 = parse_double(key, value);
  else if (key == "svm.scale") svm_scale = value == "auto" ? 0.0 : parse_double(key, value);
  else if (key == "svm.tol") svm_tol = parse_double(key, value);
  else if (key == "svm.max_iter") svm_max_iter = parse_int(key, value);
  else if (key == "svm.cache_mb") svm_cache_mb = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "ensemble.members") ensemble_members = static_cast<int>(parse_int(key, value));
  else if (key == "smote.k") smote_k = static_cast<int>(parse_int(key, value));
  else if (key == "mlp.enabled") mlp_enabled = parse_bool(key, value);
  else if (key == "mlp.hidden") mlp_hidden = static_cast<int>(parse_int(key, value));
  else if (key == "mlp.learning_rate") mlp_learning_rate = parse_double(key, value);
  else if (key == "mlp.epochs") mlp_epochs = static_cast<int>(parse_int(key, value));
  else if (key == "mlp.batch") mlp_batch = static_cast<int>(parse_int(key, value));
  else if (key == "eval.include_sil") eval_include_sil = parse_bool(key, value);
  else if (key == "eval.top_confusions") eval_top_confusions = static_cast<int>(parse_int(key, value));
  else throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    cfg.apply(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return cfg;
}

void PipelineConfig::apply_overrides(
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) apply(key, value);
}

void PipelineConfig::check_input_paths() const {
  namespace fs = std::filesystem;
  const auto check = [](const fs::path& p, const char* what) {
    if (!p.empty() && !fs::exists(p)) {
      throw ConfigError(std::string(what) + " does not exist: " + p.string());
    }
  };
  check(corpus_root, "corpus_root");
  check(taxonomy_file, "taxonomy_file");
  check(fold_table, "fold_table");
}

}  // namespace phonerec::cli
