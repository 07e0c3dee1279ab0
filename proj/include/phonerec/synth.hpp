#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace phonerec::cli {

// Desk-scale stand-in corpus: eight band-limited synthetic "phones" (four
// harmonic tones, four noise bands) plus silence, written in TIMIT layout with
// exact sample-aligned .phn files, an identity fold table and a matching
// taxonomy. Each utterance is exactly one second of 16 kHz audio.
struct SynthConfig {
  std::filesystem::path out_dir;
  int train_utts = 200;
  int test_utts = 50;
  std::uint64_t seed = 7;
};

const std::vector<std::string>& synthetic_phones();  // without sil

void generate_synthetic_corpus(const SynthConfig& cfg);

}  // namespace phonerec::cli
