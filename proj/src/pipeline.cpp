#include "phonerec/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "phonerec/cnn.hpp"
#include "phonerec/error.hpp"
#include "phonerec/htsvm.hpp"
#include "phonerec/mlp.hpp"
#include "phonerec/parallel.hpp"
#include "phonerec/spectro.hpp"
#include "phonerec/svm.hpp"
#include "phonerec/wav.hpp"

namespace phonerec::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void log_stage(const char* stage, double seconds) {
  std::fprintf(stderr, "[stage] %-16s %8.2fs\n", stage, seconds);
}

std::string sanitized_id(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (c == '/' || c == '\\') c = '_';
  }
  return out;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

io::FrameDataset dataset_from_corpus(const PipelineConfig& cfg, const std::string& split,
                                     const LabelMap& labels) {
  if (cfg.corpus_root.empty()) {
    throw ConfigError("split '" + split + "' is not prepared and no corpus_root is set");
  }
  corpus::ScanOptions options;
  options.fold = corpus::FoldTable::load(cfg.fold_table);
  options.include_sa = cfg.include_sa;
  const auto split_id = split == "train" ? corpus::Split::train : corpus::Split::test;
  const auto utts = corpus::scan_corpus(cfg.corpus_root, split_id, options);

  io::FrameDataset ds;
  ds.rows = cfg.spectro.image_rows;
  ds.cols = cfg.spectro.image_cols;
  for (const auto& utt : utts) {
    const auto images = spectro::extract_frame_images(utt, cfg.spectro);
    for (const auto& img : images) {
      for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        ds.pixels.push_back(static_cast<float>(img.pixels.data()[i]));
      }
      ds.labels.push_back(labels.index(img.label));
    }
    ds.utterances.emplace_back(sanitized_id(utt.id), images.size());
  }
  return ds;
}

struct UtteranceSequences {
  std::vector<std::vector<std::string>> pred;
  std::vector<std::vector<std::string>> truth;
};

UtteranceSequences split_by_utterance(const io::FrameDataset& ds,
                                      const std::vector<std::string>& pred,
                                      const LabelMap& labels) {
  UtteranceSequences seqs;
  std::size_t offset = 0;
  for (const auto& [id, count] : ds.utterances) {
    std::vector<std::string> p(pred.begin() + static_cast<std::ptrdiff_t>(offset),
                               pred.begin() + static_cast<std::ptrdiff_t>(offset + count));
    std::vector<std::string> t;
    t.reserve(count);
    for (std::size_t f = offset; f < offset + count; ++f) t.push_back(labels.symbol(ds.labels[f]));
    seqs.pred.push_back(std::move(p));
    seqs.truth.push_back(std::move(t));
    offset += count;
  }
  return seqs;
}

void write_reports(const eval::EvalReport& report, const std::filesystem::path& prefix,
                   const std::string& suffix) {
  write_text(prefix.string() + suffix + ".txt", eval::report_text(report));
  write_text(prefix.string() + suffix + ".json", eval::report_json(report));
  write_text(prefix.string() + suffix + "_confusion.csv", eval::confusion_csv(report));
}

}  // namespace

io::FrameDataset load_or_build_split(const PipelineConfig& cfg, const std::string& split,
                                     const LabelMap& labels) {
  if (!cfg.workdir.empty() && std::filesystem::exists(cfg.workdir / split)) {
    const LabelMap prepared = io::load_label_file(cfg.workdir / "labels.txt");
    if (prepared.symbols() != labels.symbols()) {
      throw DataError("label alphabet of the prepared frames does not match the model's");
    }
    return io::load_split(cfg.workdir, split);
  }
  return dataset_from_corpus(cfg, split, labels);
}

PrepareSummary cmd_prepare(const PipelineConfig& cfg, corpus::Split split) {
  namespace fs = std::filesystem;
  if (cfg.corpus_root.empty()) throw ConfigError("prepare needs corpus_root");
  if (cfg.workdir.empty()) throw ConfigError("prepare needs workdir");
  if (cfg.fold_table.empty()) throw ConfigError("prepare needs fold_table");
  cfg.spectro.validate();
  set_workers(cfg.workers);

  const auto start = Clock::now();
  corpus::ScanOptions options;
  options.fold = corpus::FoldTable::load(cfg.fold_table);
  options.include_sa = cfg.include_sa;
  const LabelMap labels = LabelMap::from_symbols(options.fold.folded_alphabet());

  const auto utts = corpus::scan_corpus(cfg.corpus_root, split, options);
  const fs::path split_dir = cfg.workdir / corpus::split_name(split);
  fs::create_directories(split_dir);
  io::write_label_file(cfg.workdir / "labels.txt", labels);

  PrepareSummary summary;
  summary.utterances = utts.size();
  for (const auto& utt : utts) {
    const auto images = spectro::extract_frame_images(utt, cfg.spectro);
    io::SpcfFile file;
    file.rows = static_cast<std::uint32_t>(cfg.spectro.image_rows);
    file.cols = static_cast<std::uint32_t>(cfg.spectro.image_cols);
    file.pixels.reserve(images.size() * static_cast<std::size_t>(cfg.spectro.image_rows) *
                        static_cast<std::size_t>(cfg.spectro.image_cols));
    for (const auto& img : images) {
      for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        file.pixels.push_back(static_cast<float>(img.pixels.data()[i]));
      }
      file.labels.push_back(static_cast<std::uint32_t>(labels.index(img.label)));
      summary.frames_per_phone[img.label]++;
    }
    summary.frames += images.size();
    io::write_spcf(split_dir / (sanitized_id(utt.id) + ".spcf"), file);
  }
  log_stage("prepare", seconds_since(start));

  std::printf("prepared %zu utterances, %zu frames into %s\n", summary.utterances, summary.frames,
              split_dir.string().c_str());
  std::printf("frames per phone:\n");
  for (const auto& [phone, count] : summary.frames_per_phone) {
    std::printf("  %-6s %lld\n", phone.c_str(), count);
  }
  return summary;
}

void cmd_train(const PipelineConfig& cfg) {
  if (cfg.workdir.empty()) throw ConfigError("train needs workdir");
  if (cfg.model_file.empty()) throw ConfigError("train needs model_file");
  if (cfg.taxonomy_file.empty()) throw ConfigError("train needs taxonomy_file");
  if (!std::filesystem::exists(cfg.taxonomy_file)) {
    throw ConfigError("taxonomy_file does not exist: " + cfg.taxonomy_file.string());
  }
  set_workers(cfg.workers);

  const LabelMap labels = io::load_label_file(cfg.workdir / "labels.txt");
  const io::FrameDataset ds = io::load_split(cfg.workdir, "train");
  const htsvm::Taxonomy taxonomy = htsvm::Taxonomy::load(cfg.taxonomy_file, labels.symbols());

  io::TrainedModel model;
  model.label_symbols = labels.symbols();
  model.spectro = cfg.spectro;

  auto stage = Clock::now();
  const std::vector<Matrix> images = ds.images();

  cnn::CnnConfig cnn_cfg;
  cnn_cfg.num_maps = cfg.cnn_maps;
  cnn_cfg.mask_rows = cfg.cnn_mask_rows;
  cnn_cfg.mask_cols = cfg.cnn_mask_cols;
  cnn_cfg.pool_rows = cfg.cnn_pool_rows;
  cnn_cfg.pool_cols = cfg.cnn_pool_cols;
  cnn_cfg.learning_rate = cfg.cnn_learning_rate;
  cnn_cfg.epochs = cfg.cnn_epochs;
  cnn_cfg.batch_size = cfg.cnn_batch;
  cnn_cfg.seed = cfg.seed;
  cnn_cfg.image_rows = ds.rows;
  cnn_cfg.image_cols = ds.cols;
  cnn_cfg.num_classes = labels.size();

  std::vector<double> epoch_loss;
  model.cnn = cnn::cnn_train(images, ds.labels, cnn_cfg, &epoch_loss);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    std::fprintf(stderr, "[cnn] epoch %zu loss %.4f\n", e + 1, epoch_loss[e]);
  }
  log_stage("cnn_train", seconds_since(stage));

  stage = Clock::now();
  const Matrix features = cnn::extract_features(images, model.cnn);
  log_stage("features", seconds_since(stage));

  stage = Clock::now();
  htsvm::HtsvmConfig tree_cfg;
  tree_cfg.C = cfg.svm_c;
  tree_cfg.kernel.degree = cfg.svm_degree;
  tree_cfg.kernel.coef0 = cfg.svm_coef0;
  tree_cfg.kernel.scale =
      cfg.svm_scale > 0.0 ? cfg.svm_scale : 1.0 / static_cast<double>(features.cols());
  tree_cfg.smo.tol = cfg.svm_tol;
  tree_cfg.smo.max_iter = cfg.svm_max_iter;
  tree_cfg.smo.cache_bytes = cfg.svm_cache_mb << 20;
  tree_cfg.smote.k_neighbors = cfg.smote_k;
  tree_cfg.seed = cfg.seed;
  tree_cfg.ensemble_members = cfg.ensemble_members;

  std::vector<std::string> phone_labels;
  phone_labels.reserve(ds.labels.size());
  for (int label : ds.labels) phone_labels.push_back(labels.symbol(label));
  model.htsvm = htsvm::train_tree(features, phone_labels, taxonomy, tree_cfg);
  log_stage("htsvm_train", seconds_since(stage));

  if (cfg.mlp_enabled) {
    stage = Clock::now();
    Matrix standardized = features;
    model.htsvm.standardization.apply(standardized);
    mlp::MlpConfig mlp_cfg;
    mlp_cfg.hidden_units = cfg.mlp_hidden;
    mlp_cfg.learning_rate = cfg.mlp_learning_rate;
    mlp_cfg.epochs = cfg.mlp_epochs;
    mlp_cfg.batch_size = cfg.mlp_batch;
    mlp_cfg.seed = cfg.seed;
    mlp_cfg.input_dim = static_cast<int>(features.cols());
    mlp_cfg.num_classes = labels.size();
    model.mlp = mlp::mlp_train(standardized, ds.labels, mlp_cfg);
    model.has_mlp = true;
    log_stage("mlp_train", seconds_since(stage));
  }

  io::pack_model(model).write(cfg.model_file);
  std::printf("model written to %s\n", cfg.model_file.string().c_str());
}

eval::EvalReport cmd_evaluate(const PipelineConfig& cfg, const std::string& split,
                              const std::filesystem::path& report_prefix) {
  if (cfg.model_file.empty()) throw ConfigError("evaluate needs model_file");
  set_workers(cfg.workers);

  const io::TrainedModel model = io::unpack_model(io::ModelContainer::read(cfg.model_file));
  const LabelMap labels = LabelMap::from_symbols(model.label_symbols);
  // frame geometry comes from the model, so a prepared dump is not required
  PipelineConfig frame_cfg = cfg;
  frame_cfg.spectro = model.spectro;
  const io::FrameDataset ds = load_or_build_split(frame_cfg, split, labels);
  if (ds.rows != model.cnn.config.image_rows || ds.cols != model.cnn.config.image_cols) {
    throw DataError("frame dimensions " + std::to_string(ds.rows) + "x" + std::to_string(ds.cols) +
                    " do not match the model's " + std::to_string(model.cnn.config.image_rows) +
                    "x" + std::to_string(model.cnn.config.image_cols));
  }

  auto stage = Clock::now();
  const std::vector<Matrix> images = ds.images();
  const Matrix features = cnn::extract_features(images, model.cnn);
  log_stage("features", seconds_since(stage));

  stage = Clock::now();
  const std::vector<std::string> pred = htsvm::predict_batch(model.htsvm, features);
  log_stage("predict", seconds_since(stage));

  const auto seqs = split_by_utterance(ds, pred, labels);
  const eval::EvalReport report = eval::evaluate_utterances(seqs.pred, seqs.truth, labels,
                                                            cfg.eval_include_sil,
                                                            cfg.eval_top_confusions);
  write_reports(report, report_prefix, "");
  std::printf("== htsvm ==\n%s", eval::report_text(report).c_str());

  if (model.has_mlp) {
    Matrix standardized = features;
    model.htsvm.standardization.apply(standardized);
    const std::vector<int> mlp_pred_idx = mlp::mlp_predict_batch(model.mlp, standardized);
    std::vector<std::string> mlp_pred;
    mlp_pred.reserve(mlp_pred_idx.size());
    for (int idx : mlp_pred_idx) mlp_pred.push_back(labels.symbol(idx));
    const auto mlp_seqs = split_by_utterance(ds, mlp_pred, labels);
    const eval::EvalReport mlp_report = eval::evaluate_utterances(
        mlp_seqs.pred, mlp_seqs.truth, labels, cfg.eval_include_sil, cfg.eval_top_confusions);
    write_reports(mlp_report, report_prefix, "_mlp");
    std::printf("== mlp baseline ==\n%s", eval::report_text(mlp_report).c_str());
  }
  return report;
}

std::vector<std::string> cmd_predict(const PipelineConfig& cfg,
                                     const std::filesystem::path& audio_file) {
  if (cfg.model_file.empty()) throw ConfigError("predict needs model_file");
  set_workers(cfg.workers);
  const io::TrainedModel model = io::unpack_model(io::ModelContainer::read(cfg.model_file));

  const io::AudioData audio = io::read_audio(audio_file);
  const auto frames =
      spectro::extract_frame_images_unlabeled(audio.samples, audio.sample_rate_hz, model.spectro);

  std::vector<Matrix> images;
  images.reserve(frames.size());
  for (const auto& f : frames) images.push_back(f.pixels);
  const Matrix features = cnn::extract_features(images, model.cnn);
  return htsvm::predict_batch(model.htsvm, features);
}

}  // namespace phonerec::cli
