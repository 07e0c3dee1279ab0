#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "phonerec/config.hpp"
#include "phonerec/container.hpp"
#include "phonerec/corpus.hpp"
#include "phonerec/eval.hpp"
#include "phonerec/spcf.hpp"

namespace phonerec::cli {

struct PrepareSummary {
  std::size_t utterances = 0;
  std::size_t frames = 0;
  std::map<std::string, long long> frames_per_phone;
};

// Corpus -> SPCF frame dump under workdir/<split>, plus workdir/labels.txt.
PrepareSummary cmd_prepare(const PipelineConfig& cfg, corpus::Split split);

// Prepared train split -> trained model container at cfg.model_file.
void cmd_train(const PipelineConfig& cfg);

// Scores a model on a split. Uses the prepared SPCF dump when present,
// otherwise extracts frames from the corpus directly. Writes
// <prefix>.txt/.json/<prefix>_confusion.csv (and _mlp variants when the model
// carries the baseline).
eval::EvalReport cmd_evaluate(const PipelineConfig& cfg, const std::string& split,
                              const std::filesystem::path& report_prefix);

// Per-frame phone sequence for one unlabeled audio file.
std::vector<std::string> cmd_predict(const PipelineConfig& cfg,
                                     const std::filesystem::path& audio_file);

// Shared by cmd_evaluate and tests: loads a split either from the prepared
// dump or straight from the corpus, indexing labels with `labels`.
io::FrameDataset load_or_build_split(const PipelineConfig& cfg, const std::string& split,
                                     const LabelMap& labels);

}  // namespace phonerec::cli
