#include "phonerec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "phonerec/parallel.hpp"
#include "phonerec/spectro.hpp"
#include "phonerec/wav.hpp"

namespace phonerec::corpus {

namespace {

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool parse_non_negative(const std::string& field, long long& out) {
  if (field.empty()) return false;
  for (char c : field) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  out = std::strtoll(field.c_str(), nullptr, 10);
  return true;
}

}  // namespace

FoldTable FoldTable::load(const std::filesystem::path& file) {
  return parse(read_text_file(file));
}

FoldTable FoldTable::parse(const std::string& text) {
  FoldTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // full-line comments only: '#' is a legal character inside phone symbols
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] == '#') continue;
    std::istringstream row(line);
    std::string source, folded, extra;
    if (!(row >> source)) continue;
    if (!(row >> folded) || (row >> extra)) {
      throw DataError("fold table line " + std::to_string(line_no) +
                      ": expected '<source> <folded>'");
    }
    if (table.map_.count(source)) {
      throw DataError("fold table line " + std::to_string(line_no) + ": duplicate symbol '" +
                      source + "'");
    }
    table.map_[source] = folded;
  }
  if (table.map_.empty()) throw DataError("fold table is empty");
  return table;
}

FoldTable FoldTable::identity(const std::vector<std::string>& symbols) {
  FoldTable table;
  for (const auto& s : symbols) table.map_[s] = s;
  return table;
}

const std::string& FoldTable::fold(const std::string& phone) const {
  auto it = map_.find(phone);
  if (it == map_.end()) throw DataError("unknown phone symbol '" + phone + "'");
  return it->second;
}

std::vector<std::string> FoldTable::source_alphabet() const {
  std::vector<std::string> out;
  out.reserve(map_.size());
  for (const auto& [k, v] : map_) out.push_back(k);
  return out;
}

std::vector<std::string> FoldTable::folded_alphabet() const {
  std::set<std::string> image;
  for (const auto& [k, v] : map_) image.insert(v);
  return {image.begin(), image.end()};
}

std::vector<PhoneSegment> parse_phn(const std::string& text) {
  std::vector<PhoneSegment> segments;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string start_s, end_s, label, extra;
    if (!(row >> start_s)) continue;  // blank line
    if (!(row >> end_s >> label) || (row >> extra)) {
      throw DataError("phn line " + std::to_string(line_no) + ": expected 'start end label'");
    }
    PhoneSegment seg;
    if (!parse_non_negative(start_s, seg.start_sample) ||
        !parse_non_negative(end_s, seg.end_sample)) {
      throw DataError("phn line " + std::to_string(line_no) +
                      ": start/end must be non-negative integers");
    }
    seg.label = label;
    if (seg.start_sample >= seg.end_sample) {
      throw DataError("phn line " + std::to_string(line_no) + ": empty or reversed segment");
    }
    if (!segments.empty()) {
      const long long prev_end = segments.back().end_sample;
      if (seg.start_sample < prev_end) {
        throw DataError("phn line " + std::to_string(line_no) + ": segment overlap (start " +
                        std::to_string(seg.start_sample) + " < previous end " +
                        std::to_string(prev_end) + ")");
      }
      if (seg.start_sample > prev_end) {
        throw DataError("phn line " + std::to_string(line_no) + ": gap before segment (start " +
                        std::to_string(seg.start_sample) + " > previous end " +
                        std::to_string(prev_end) + ")");
      }
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<PhoneSegment> fold_phones(const std::vector<PhoneSegment>& segments,
                                      const FoldTable& table) {
  std::vector<PhoneSegment> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    const std::string& folded = table.fold(seg.label);
    if (!out.empty() && out.back().label == folded && out.back().end_sample == seg.start_sample) {
      out.back().end_sample = seg.end_sample;
    } else {
      out.push_back({seg.start_sample, seg.end_sample, folded});
    }
  }
  return out;
}

std::vector<std::string> label_frames(const std::vector<PhoneSegment>& segments,
                                      const spectro::FramePlan& plan) {
  std::vector<std::string> labels;
  labels.reserve(plan.frame_count());
  std::size_t seg = 0;
  for (std::size_t f = 0; f < plan.frame_count(); ++f) {
    const long long center = plan.frame_starts[f] + plan.frame_extent(f) / 2;
    while (seg < segments.size() && segments[seg].end_sample <= center) ++seg;
    if (seg >= segments.size() || center < segments[seg].start_sample) {
      throw DataError("frame center " + std::to_string(center) + " not inside any segment");
    }
    labels.push_back(segments[seg].label);
  }
  return labels;
}

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

std::vector<Utterance> scan_corpus(const std::filesystem::path& root, Split split,
                                   const ScanOptions& options) {
  namespace fs = std::filesystem;
  const fs::path split_dir = root / split_name(split);
  if (!fs::exists(split_dir)) {
    throw DataError("corpus split directory not found: " + split_dir.string());
  }

  // Collect WAV paths first, sorted, so the utterance order never depends on
  // directory enumeration order.
  std::vector<fs::path> wavs;
  for (const auto& entry : fs::recursive_directory_iterator(split_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lowercase(entry.path().extension().string());
    if (ext != ".wav") continue;
    const std::string stem = lowercase(entry.path().stem().string());
    if (!options.include_sa && stem.rfind("sa", 0) == 0) continue;
    wavs.push_back(entry.path());
  }
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty()) {
    warn("no utterances found under " + split_dir.string());
    return {};
  }

  std::vector<Utterance> utts(wavs.size());
  parallel_for(wavs.size(), [&](std::size_t i) {
    const fs::path& wav = wavs[i];
    fs::path phn = wav;
    phn.replace_extension(".phn");
    if (!fs::exists(phn)) {
      phn.replace_extension(".PHN");
      if (!fs::exists(phn)) {
        throw DataError("missing .PHN transcription for " + wav.string());
      }
    }
    Utterance utt;
    utt.id = fs::relative(wav, split_dir).replace_extension("").generic_string();
    auto audio = io::read_audio(wav);
    if (audio.sample_rate_hz != 16000) {
      throw DataError("unsupported sample rate " + std::to_string(audio.sample_rate_hz) +
                      " in " + wav.string() + " (16 kHz expected)");
    }
    utt.samples = std::move(audio.samples);
    utt.sample_rate_hz = audio.sample_rate_hz;
    auto segments = parse_phn(read_text_file(phn));
    try {
      utt.segments = fold_phones(segments, options.fold);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " in " + phn.string());
    }
    if (!utt.segments.empty() &&
        utt.segments.back().end_sample > static_cast<long long>(utt.samples.size())) {
      throw DataError("transcription extends past audio in " + phn.string());
    }
    utts[i] = std::move(utt);
  });
  return utts;
}

}  // namespace phonerec::corpus
