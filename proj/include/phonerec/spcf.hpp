#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phonerec/labels.hpp"
#include "phonerec/matrix.hpp"

namespace phonerec::io {

// SPCF frame dump: one file per utterance.
//   magic "SPCF", u32 version, u32 rows, u32 cols, u32 frame count,
//   f32 pixels row-major per frame, u32 label index per frame.
// Everything little-endian.
struct SpcfFile {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> pixels;         // frames * rows * cols
  std::vector<std::uint32_t> labels;  // one index per frame
};

void write_spcf(const std::filesystem::path& file, const SpcfFile& data);
SpcfFile read_spcf(const std::filesystem::path& file);

// A prepared split loaded back into memory, with utterance boundaries kept
// for sequence scoring.
struct FrameDataset {
  int rows = 0;
  int cols = 0;
  std::vector<float> pixels;
  std::vector<int> labels;
  std::vector<std::pair<std::string, std::size_t>> utterances;  // id, frame count

  std::size_t frame_count() const { return labels.size(); }
  Matrix image(std::size_t frame) const;
  std::vector<Matrix> images() const;
};

// Reads every .spcf under workdir/<split> (sorted) plus workdir/labels.txt.
FrameDataset load_split(const std::filesystem::path& workdir, const std::string& split);

LabelMap load_label_file(const std::filesystem::path& file);
void write_label_file(const std::filesystem::path& file, const LabelMap& labels);

}  // namespace phonerec::io
