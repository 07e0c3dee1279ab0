#include "phonerec/spcf.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phonerec/container.hpp"
#include "phonerec/error.hpp"

namespace phonerec::io {

namespace {
constexpr char kMagic[4] = {'S', 'P', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_spcf(const std::filesystem::path& file, const SpcfFile& data) {
  if (data.pixels.size() != static_cast<std::size_t>(data.rows) * data.cols * data.labels.size()) {
    throw DataError("spcf: pixel count does not match rows*cols*frames");
  }
  ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put_u32(kVersion);
  w.put_u32(data.rows);
  w.put_u32(data.cols);
  w.put_u32(static_cast<std::uint32_t>(data.labels.size()));
  for (float px : data.pixels) w.put_f32(px);
  for (std::uint32_t label : data.labels) w.put_u32(label);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

SpcfFile read_spcf(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("not an SPCF file: " + file.string());
  }
  ByteReader r(bytes, "spcf " + file.filename().string());
  char magic[4];
  r.raw(magic, 4);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported SPCF version " + std::to_string(version) + " in " + file.string());
  }
  SpcfFile data;
  data.rows = r.u32();
  data.cols = r.u32();
  const std::uint32_t frames = r.u32();
  data.pixels.resize(static_cast<std::size_t>(frames) * data.rows * data.cols);
  for (auto& px : data.pixels) px = r.f32();
  data.labels.resize(frames);
  for (auto& label : data.labels) label = r.u32();
  return data;
}

Matrix FrameDataset::image(std::size_t frame) const {
  const std::size_t px_per_frame = static_cast<std::size_t>(rows) * cols;
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  const float* src = pixels.data() + frame * px_per_frame;
  for (std::size_t i = 0; i < px_per_frame; ++i) m.data()[i] = static_cast<double>(src[i]);
  return m;
}

std::vector<Matrix> FrameDataset::images() const {
  std::vector<Matrix> out;
  out.reserve(frame_count());
  for (std::size_t f = 0; f < frame_count(); ++f) out.push_back(image(f));
  return out;
}

FrameDataset load_split(const std::filesystem::path& workdir, const std::string& split) {
  namespace fs = std::filesystem;
  const fs::path dir = workdir / split;
  if (!fs::exists(dir)) throw DataError("prepared split not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".spcf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .spcf files under " + dir.string());

  FrameDataset ds;
  for (const auto& file : files) {
    const SpcfFile one = read_spcf(file);
    if (ds.utterances.empty()) {
      ds.rows = static_cast<int>(one.rows);
      ds.cols = static_cast<int>(one.cols);
    } else if (ds.rows != static_cast<int>(one.rows) || ds.cols != static_cast<int>(one.cols)) {
      throw DataError("inconsistent frame dimensions in " + file.string());
    }
    ds.pixels.insert(ds.pixels.end(), one.pixels.begin(), one.pixels.end());
    for (auto label : one.labels) ds.labels.push_back(static_cast<int>(label));
    ds.utterances.emplace_back(file.stem().string(), one.labels.size());
  }
  return ds;
}

LabelMap load_label_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open label file: " + file.string());
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) symbols.push_back(line);
  }
  if (symbols.empty()) throw DataError("label file is empty: " + file.string());
  // file order is the index order and must already be sorted-unique
  LabelMap map = LabelMap::from_symbols(symbols);
  if (map.symbols() != symbols) {
    throw DataError("label file must list sorted unique symbols: " + file.string());
  }
  return map;
}

void write_label_file(const std::filesystem::path& file, const LabelMap& labels) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto& s : labels.symbols()) out << s << '\n';
}

}  // namespace phonerec::io
