#pragma once

#include <filesystem>
#include <vector>

namespace phonerec::io {

struct AudioData {
  std::vector<double> samples;  // [-1, 1], mono
  int sample_rate_hz = 0;
};

// Reads 16-bit PCM audio from either a RIFF WAV file or a NIST SPHERE file
// (the header variant TIMIT ships). Anything else is rejected.
AudioData read_audio(const std::filesystem::path& file);

// Plain mono 16-bit PCM RIFF writer; samples are clipped to [-1, 1].
void write_wav_pcm16(const std::filesystem::path& file, const std::vector<double>& samples,
                     int sample_rate_hz);

}  // namespace phonerec::io
