#include "phonerec/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "phonerec/error.hpp"

namespace phonerec::eval {

namespace {

void require_equal_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DataError("sequence length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

struct ClassCounts {
  long long tp = 0, fp = 0, fn = 0;
};

std::map<std::string, ClassCounts> tally_classes(const std::vector<std::string>& pred,
                                                 const std::vector<std::string>& truth,
                                                 bool include_sil) {
  std::map<std::string, ClassCounts> counts;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == pred[i]) {
      counts[truth[i]].tp++;
    } else {
      counts[truth[i]].fn++;
      counts[pred[i]].fp++;
    }
  }
  if (!include_sil) counts.erase(kSilence);
  return counts;
}

double f1_of(const ClassCounts& c) {
  const double denom = 2.0 * c.tp + c.fp + c.fn;
  return denom > 0 ? 2.0 * c.tp / denom : 0.0;
}

}  // namespace

double frame_error_rate(const std::vector<std::string>& pred,
                        const std::vector<std::string>& truth,
                        bool include_sil) {
  require_equal_lengths(pred.size(), truth.size());
  long long scored = 0, wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!include_sil && truth[i] == kSilence) continue;
    ++scored;
    if (pred[i] != truth[i]) ++wrong;
  }
  if (scored == 0) throw DataError("frame_error_rate: no scored frames");
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(scored);
}

double macro_f1(const std::vector<std::string>& pred,
                const std::vector<std::string>& truth,
                bool include_sil) {
  require_equal_lengths(pred.size(), truth.size());
  auto counts = tally_classes(pred, truth, include_sil);
  if (counts.empty()) throw DataError("macro_f1: no scored classes");
  double sum = 0.0;
  for (const auto& [phone, c] : counts) sum += f1_of(c);
  return sum / static_cast<double>(counts.size());
}

std::vector<std::string> collapse_repeats(const std::vector<std::string>& frames) {
  // Silence goes first so that the result never holds adjacent duplicates,
  // which keeps the operation idempotent.
  std::vector<std::string> out;
  for (const auto& s : frames) {
    if (s == kSilence) continue;
    if (!out.empty() && out.back() == s) continue;
    out.push_back(s);
  }
  return out;
}

EditCounts levenshtein(const std::vector<std::string>& ref,
                       const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<long long> d((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> long long& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long long>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long long sub = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const long long ins = at(i, j - 1) + 1;
      const long long del = at(i - 1, j) + 1;
      at(i, j) = std::min({sub, ins, del});
    }
  }

  // Backtrace, preferring substitution/match > insertion > deletion on ties.
  EditCounts counts;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) counts.sub++;
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      counts.ins++;
      --j;
    } else {
      counts.del++;
      --i;
    }
  }
  return counts;
}

double phone_error_rate(const std::vector<std::string>& ref_frames,
                        const std::vector<std::string>& hyp_frames) {
  require_equal_lengths(ref_frames.size(), hyp_frames.size());
  const auto ref = collapse_repeats(ref_frames);
  const auto hyp = collapse_repeats(hyp_frames);
  if (ref.empty()) throw DataError("phone_error_rate: collapsed reference is empty");
  const auto edits = levenshtein(ref, hyp);
  return 100.0 * static_cast<double>(edits.total()) / static_cast<double>(ref.size());
}

Confusion confusion_table(const std::vector<std::string>& pred,
                          const std::vector<std::string>& truth,
                          const LabelMap& labels, int top_n) {
  require_equal_lengths(pred.size(), truth.size());
  Confusion table;
  table.symbols = labels.symbols();
  const std::size_t k = table.symbols.size();
  table.counts.assign(k * k, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kSilence) continue;
    table.counts[static_cast<std::size_t>(labels.index(truth[i])) * k +
                 static_cast<std::size_t>(labels.index(pred[i]))]++;
  }

  std::vector<long long> row_sums(k, 0);
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t p = 0; p < k; ++p) row_sums[t] += table.counts[t * k + p];

  std::vector<ConfusionEntry> entries;
  for (std::size_t t = 0; t < k; ++t) {
    if (row_sums[t] == 0) continue;
    for (std::size_t p = 0; p < k; ++p) {
      if (p == t || table.counts[t * k + p] == 0) continue;
      ConfusionEntry e;
      e.truth = table.symbols[t];
      e.pred = table.symbols[p];
      e.count = table.counts[t * k + p];
      e.percent = 100.0 * static_cast<double>(e.count) / static_cast<double>(row_sums[t]);
      entries.push_back(std::move(e));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const ConfusionEntry& a, const ConfusionEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.truth != b.truth) return a.truth < b.truth;
    return a.pred < b.pred;
  });
  if (top_n >= 0 && entries.size() > static_cast<std::size_t>(top_n)) entries.resize(static_cast<std::size_t>(top_n));
  table.ranked = std::move(entries);
  return table;
}

EvalReport evaluate_utterances(const std::vector<std::vector<std::string>>& pred,
                               const std::vector<std::vector<std::string>>& truth,
                               const LabelMap& labels,
                               bool include_sil, int top_n) {
  require_equal_lengths(pred.size(), truth.size());
  std::vector<std::string> all_pred, all_truth;
  EvalReport report;
  for (std::size_t u = 0; u < truth.size(); ++u) {
    require_equal_lengths(pred[u].size(), truth[u].size());
    all_pred.insert(all_pred.end(), pred[u].begin(), pred[u].end());
    all_truth.insert(all_truth.end(), truth[u].begin(), truth[u].end());
    const auto ref = collapse_repeats(truth[u]);
    const auto hyp = collapse_repeats(pred[u]);
    const auto edits = levenshtein(ref, hyp);
    report.edits.ins += edits.ins;
    report.edits.del += edits.del;
    report.edits.sub += edits.sub;
    report.ref_phone_count += static_cast<long long>(ref.size());
  }

  report.fer_percent = frame_error_rate(all_pred, all_truth, include_sil);
  report.macro_f1 = macro_f1(all_pred, all_truth, include_sil);
  if (report.ref_phone_count == 0) throw DataError("evaluate: collapsed reference is empty");
  report.per_percent =
      100.0 * static_cast<double>(report.edits.total()) / static_cast<double>(report.ref_phone_count);
  for (const auto& s : all_truth) {
    if (include_sil || s != kSilence) report.scored_frames++;
  }
  report.confusion = confusion_table(all_pred, all_truth, labels, top_n);

  auto counts = tally_classes(all_pred, all_truth, include_sil);
  for (const auto& [phone, c] : counts) {
    PerClassScore s;
    s.phone = phone;
    s.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    s.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    s.f1 = f1_of(c);
    s.true_frames = c.tp + c.fn;
    report.per_class.push_back(std::move(s));
  }
  return report;
}

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "FER      %.2f%%  (%lld scored frames)\n", r.fer_percent,
                r.scored_frames);
  os << line;
  std::snprintf(line, sizeof line, "macro F1 %.3f\n", r.macro_f1);
  os << line;
  std::snprintf(line, sizeof line, "PER      %.2f%%  (ins %lld, del %lld, sub %lld / %lld phones)\n",
                r.per_percent, r.edits.ins, r.edits.del, r.edits.sub, r.ref_phone_count);
  os << line;
  if (!r.confusion.ranked.empty()) {
    os << "\ntop confusions (true -> predicted, % of true class):\n";
    for (const auto& e : r.confusion.ranked) {
      std::snprintf(line, sizeof line, "  %-4s -> %-4s %7lld  %6.2f%%\n", e.truth.c_str(),
                    e.pred.c_str(), e.count, e.percent);
      os << line;
    }
  }
  os << "\nper-class F1:\n";
  for (const auto& s : r.per_class) {
    std::snprintf(line, sizeof line, "  %-4s P %.3f  R %.3f  F1 %.3f  (%lld frames)\n",
                  s.phone.c_str(), s.precision, s.recall, s.f1, s.true_frames);
    os << line;
  }
  return os.str();
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["fer"] = r.fer_percent;
  j["macro_f1"] = r.macro_f1;
  j["per"] = r.per_percent;
  j["ins"] = r.edits.ins;
  j["del"] = r.edits.del;
  j["sub"] = r.edits.sub;
  j["scored_frames"] = r.scored_frames;
  j["ref_phones"] = r.ref_phone_count;
  nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
  const std::size_t k = r.confusion.symbols.size();
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t p = 0; p < k; ++p) {
      const long long c = r.confusion.counts.empty() ? 0 : r.confusion.counts[t * k + p];
      if (c != 0) {
        confusion.push_back({r.confusion.symbols[t], r.confusion.symbols[p], c});
      }
    }
  }
  j["confusion"] = std::move(confusion);
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  for (const auto& s : r.per_class) {
    per_class.push_back({{"phone", s.phone},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"frames", s.true_frames}});
  }
  j["per_class"] = std::move(per_class);
  return j.dump(2) + "\n";
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "true\\pred";
  for (const auto& s : r.confusion.symbols) os << ',' << s;
  os << '\n';
  const std::size_t k = r.confusion.symbols.size();
  for (std::size_t t = 0; t < k; ++t) {
    os << r.confusion.symbols[t];
    for (std::size_t p = 0; p < k; ++p) os << ',' << r.confusion.counts[t * k + p];
    os << '\n';
  }
  return os.str();
}

}  // namespace phonerec::eval
