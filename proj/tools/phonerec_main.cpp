#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phonerec/config.hpp"
#include "phonerec/error.hpp"
#include "phonerec/pipeline.hpp"
#include "phonerec/synth.hpp"

namespace {

using phonerec::cli::PipelineConfig;

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;  // key=value pairs
  std::string corpus, workdir, model, taxonomy, fold_table;
  int workers = -1;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "pipeline config file (key = value lines)");
  cmd->add_option("--set", flags.sets, "override any config key, e.g. --set cnn.epochs=6");
  cmd->add_option("--corpus", flags.corpus, "corpus root directory");
  cmd->add_option("--workdir", flags.workdir, "working directory for prepared frames");
  cmd->add_option("--model", flags.model, "model container path");
  cmd->add_option("--taxonomy", flags.taxonomy, "taxonomy config file");
  cmd->add_option("--fold-table", flags.fold_table, "phone fold table file");
  cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware default)");
  cmd->add_option("--seed", flags.seed, "master random seed");
}

PipelineConfig build_config(const CommonFlags& flags) {
  PipelineConfig cfg;
  if (!flags.config_file.empty()) cfg = PipelineConfig::load(flags.config_file);
  std::vector<std::pair<std::string, std::string>> overrides;
  if (!flags.corpus.empty()) overrides.emplace_back("corpus_root", flags.corpus);
  if (!flags.workdir.empty()) overrides.emplace_back("workdir", flags.workdir);
  if (!flags.model.empty()) overrides.emplace_back("model_file", flags.model);
  if (!flags.taxonomy.empty()) overrides.emplace_back("taxonomy_file", flags.taxonomy);
  if (!flags.fold_table.empty()) overrides.emplace_back("fold_table", flags.fold_table);
  if (flags.workers >= 0) overrides.emplace_back("workers", std::to_string(flags.workers));
  if (flags.seed >= 0) overrides.emplace_back("seed", std::to_string(flags.seed));
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw phonerec::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.apply_overrides(overrides);
  cfg.check_input_paths();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frame-level phoneme recognition: spectrogram frames -> shallow CNN features -> "
               "hierarchical tree SVM"};
  app.require_subcommand(1);

  CommonFlags prepare_flags, train_flags, eval_flags, predict_flags;

  auto* prepare = app.add_subcommand("prepare", "extract labeled frame images from a corpus");
  add_common(prepare, prepare_flags);
  std::string prepare_split = "train";
  prepare->add_option("--split", prepare_split, "corpus split: train or test")
      ->check(CLI::IsMember({"train", "test"}));
  bool include_sa = false;
  prepare->add_flag("--include-sa", include_sa, "keep SA-prefixed sentences");

  auto* train = app.add_subcommand("train", "train the CNN and the SVM tree on prepared frames");
  add_common(train, train_flags);
  bool with_mlp = false;
  train->add_flag("--mlp", with_mlp, "also train the MLP baseline");

  auto* evaluate = app.add_subcommand("evaluate", "score a model on a split");
  add_common(evaluate, eval_flags);
  std::string eval_split = "test";
  evaluate->add_option("--split", eval_split, "split to score")
      ->check(CLI::IsMember({"train", "test"}));
  std::string report_prefix = "report";
  evaluate->add_option("--report-prefix", report_prefix, "output path prefix for report files");
  bool include_sil = false;
  evaluate->add_flag("--include-sil", include_sil, "score silence frames as well");

  auto* predict = app.add_subcommand("predict", "per-frame phone sequence for unlabeled audio");
  add_common(predict, predict_flags);
  std::string audio_file;
  predict->add_option("--wav", audio_file, "input audio file")->required();
  std::string out_file;
  predict->add_option("--out", out_file, "write the sequence here instead of stdout");

  auto* gen = app.add_subcommand("gen-synth", "generate the synthetic test corpus");
  std::string gen_out;
  gen->add_option("--out", gen_out, "output corpus directory")->required();
  int train_utts = 200, test_utts = 50;
  long long gen_seed = 7;
  gen->add_option("--train-utts", train_utts, "utterances in the train split");
  gen->add_option("--test-utts", test_utts, "utterances in the test split");
  gen->add_option("--seed", gen_seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the usage message
    return code == 0 ? 0 : 1;
  }

  try {
    if (prepare->parsed()) {
      PipelineConfig cfg = build_config(prepare_flags);
      if (include_sa) cfg.include_sa = true;
      phonerec::cli::cmd_prepare(cfg, prepare_split == "train" ? phonerec::corpus::Split::train
                                                               : phonerec::corpus::Split::test);
    } else if (train->parsed()) {
      PipelineConfig cfg = build_config(train_flags);
      if (with_mlp) cfg.mlp_enabled = true;
      phonerec::cli::cmd_train(cfg);
    } else if (evaluate->parsed()) {
      PipelineConfig cfg = build_config(eval_flags);
      if (include_sil) cfg.eval_include_sil = true;
      phonerec::cli::cmd_evaluate(cfg, eval_split, report_prefix);
    } else if (predict->parsed()) {
      PipelineConfig cfg = build_config(predict_flags);
      const auto sequence = phonerec::cli::cmd_predict(cfg, audio_file);
      if (out_file.empty()) {
        for (const auto& phone : sequence) std::printf("%s\n", phone.c_str());
      } else {
        std::ofstream out(out_file);
        if (!out) throw phonerec::DataError("cannot write " + out_file);
        for (const auto& phone : sequence) out << phone << '\n';
      }
    } else if (gen->parsed()) {
      phonerec::cli::SynthConfig cfg;
      cfg.out_dir = gen_out;
      cfg.train_utts = train_utts;
      cfg.test_utts = test_utts;
      cfg.seed = static_cast<std::uint64_t>(gen_seed);
      phonerec::cli::generate_synthetic_corpus(cfg);
      std::printf("synthetic corpus written to %s\n", gen_out.c_str());
    }
  } catch (const phonerec::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const phonerec::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 0;
}
