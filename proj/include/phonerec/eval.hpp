#pragma once

#include <string>
#include <vector>

#include "phonerec/labels.hpp"

namespace phonerec::eval {

struct EditCounts {
  long long ins = 0;
  long long del = 0;
  long long sub = 0;
  long long total() const { return ins + del + sub; }
};

// Percent of frames whose prediction differs from truth. Frames whose truth
// is silence are excluded unless include_sil is set.
double frame_error_rate(const std::vector<std::string>& pred,
                        const std::vector<std::string>& truth,
                        bool include_sil = false);

// Unweighted mean of per-class F1 over the non-silence classes observed in
// either sequence. A class present only in the predictions scores 0.
double macro_f1(const std::vector<std::string>& pred,
                const std::vector<std::string>& truth,
                bool include_sil = false);

// Collapses maximal runs of identical frame labels to one token, then drops
// silence tokens. This is the smoothing step before sequence scoring.
std::vector<std::string> collapse_repeats(const std::vector<std::string>& frames);

// Unit-cost edit distance. Among minimal alignments the backtrace prefers
// substitution over insertion over deletion, which fixes the decomposition;
// the total is the usual Levenshtein distance.
EditCounts levenshtein(const std::vector<std::string>& ref,
                       const std::vector<std::string>& hyp);

// Both frame sequences are collapsed, then
// PER = 100 * (ins + del + sub) / |collapsed reference|.
double phone_error_rate(const std::vector<std::string>& ref_frames,
                        const std::vector<std::string>& hyp_frames);

struct ConfusionEntry {
  std::string truth;
  std::string pred;
  long long count = 0;
  double percent = 0.0;  // share of the true class predicted as `pred`
};

struct Confusion {
  std::vector<std::string> symbols;  // axis order of `counts`
  std::vector<long long> counts;     // K*K row-major, counts[true][pred]
  std::vector<ConfusionEntry> ranked;

  long long at(std::size_t t, std::size_t p) const { return counts[t * symbols.size() + p]; }
};

// counts[true][pred] over frames whose truth is not silence.
Confusion confusion_table(const std::vector<std::string>& pred,
                          const std::vector<std::string>& truth,
                          const LabelMap& labels, int top_n = 10);

struct PerClassScore {
  std::string phone;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long true_frames = 0;
};

struct EvalReport {
  double fer_percent = 0.0;
  double macro_f1 = 0.0;
  double per_percent = 0.0;
  EditCounts edits;
  long long scored_frames = 0;
  long long ref_phone_count = 0;  // summed collapsed reference lengths
  Confusion confusion;
  std::vector<PerClassScore> per_class;
};

// Scores one (pred, truth) frame sequence pair per utterance and merges the
// counts. PER uses per-utterance collapse; FER/F1/confusion use pooled frames.
EvalReport evaluate_utterances(const std::vector<std::vector<std::string>>& pred,
                               const std::vector<std::vector<std::string>>& truth,
                               const LabelMap& labels,
                               bool include_sil = false, int top_n = 10);

std::string report_text(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string confusion_csv(const EvalReport& report);

}  // namespace phonerec::eval
