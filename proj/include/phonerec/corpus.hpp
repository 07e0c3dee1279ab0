#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "phonerec/error.hpp"

namespace phonerec::spectro {
struct FramePlan;
}

namespace phonerec::corpus {

// One labeled stretch of audio, sample-indexed, end exclusive.
struct PhoneSegment {
  long long start_sample = 0;
  long long end_sample = 0;
  std::string label;
};

struct Utterance {
  std::string id;  // split-relative path without extension, e.g. "dr1/fcjf0/sx127"
  std::vector<double> samples;  // normalized to [-1, 1]
  int sample_rate_hz = 16000;
  std::vector<PhoneSegment> segments;  // contiguous, post-fold when loaded via scan_corpus
};

// Source alphabet -> folded alphabet, loaded from a two-column text file.
class FoldTable {
 public:
  static FoldTable load(const std::filesystem::path& file);
  static FoldTable parse(const std::string& text);
  static FoldTable identity(const std::vector<std::string>& symbols);

  const std::string& fold(const std::string& phone) const;
  bool contains(const std::string& phone) const { return map_.count(phone) != 0; }

  std::vector<std::string> source_alphabet() const;
  // Sorted unique image of the mapping; this is the label alphabet downstream.
  std::vector<std::string> folded_alphabet() const;

  std::size_t size() const { return map_.size(); }

 private:
  std::map<std::string, std::string> map_;
};

// Parses ".PHN" text: one "start end label" triple per line, sample-indexed.
// Ordering and contiguity are validated; errors carry the line number.
std::vector<PhoneSegment> parse_phn(const std::string& text);

// Replaces labels through the table and merges adjacent segments that become
// identical. Unknown symbols raise DataError naming the symbol.
std::vector<PhoneSegment> fold_phones(const std::vector<PhoneSegment>& segments,
                                      const FoldTable& table);

// Labels each planned frame with the phone whose segment contains the frame's
// center sample (start + extent/2, rounded down).
std::vector<std::string> label_frames(const std::vector<PhoneSegment>& segments,
                                      const spectro::FramePlan& plan);

enum class Split { train, test };

const char* split_name(Split s);

struct ScanOptions {
  FoldTable fold;
  bool include_sa = false;  // SA-prefixed sentences are excluded by default
};

// Walks a TIMIT-layout directory (split/dialect/speaker/sentence.{wav,phn}),
// reads audio, parses and folds the transcriptions. Deterministic order.
std::vector<Utterance> scan_corpus(const std::filesystem::path& root, Split split,
                                   const ScanOptions& options);

}  // namespace phonerec::corpus
