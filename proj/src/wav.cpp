#include "phonerec/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phonerec/error.hpp"

namespace phonerec::io {

namespace {

std::string read_file_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open audio file: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint32_t le_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

AudioData decode_pcm16(const unsigned char* p, std::size_t n_samples, bool little_endian,
                       int rate) {
  AudioData audio;
  audio.sample_rate_hz = rate;
  audio.samples.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const unsigned char lo = little_endian ? p[2 * i] : p[2 * i + 1];
    const unsigned char hi = little_endian ? p[2 * i + 1] : p[2 * i];
    const std::int16_t v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo) |
                                                     static_cast<std::uint16_t>(hi) << 8);
    audio.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return audio;
}

AudioData read_riff(const std::string& bytes, const std::filesystem::path& file) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 44 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw DataError("not a WAVE file: " + file.string());
  }
  // Chunk walk: need fmt then data.
  std::size_t pos = 12;
  int rate = 0, channels = 0, bits = 0;
  std::uint16_t format = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.data() + pos, 4);
    const std::uint32_t size = le_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (body + 16 > bytes.size()) throw DataError("truncated fmt chunk: " + file.string());
      format = le_u16(p + body);
      channels = le_u16(p + body + 2);
      rate = static_cast<int>(le_u32(p + body + 4));
      bits = le_u16(p + body + 14);
    } else if (id == "data") {
      if (format != 1 || bits != 16) {
        throw DataError("unsupported sample format (want 16-bit PCM): " + file.string());
      }
      if (channels != 1) throw DataError("unsupported channel count (want mono): " + file.string());
      const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
      return decode_pcm16(p + body, avail / 2, /*little_endian=*/true, rate);
    }
    pos = body + size + (size & 1);
  }
  throw DataError("no data chunk in WAVE file: " + file.string());
}

AudioData read_sphere(const std::string& bytes, const std::filesystem::path& file) {
  // NIST_1A header: line 2 holds the header size, then "name -type value" rows.
  std::istringstream header(bytes.substr(0, std::min<std::size_t>(bytes.size(), 4096)));
  std::string line;
  std::getline(header, line);  // NIST_1A
  std::getline(header, line);
  long header_size = std::strtol(line.c_str(), nullptr, 10);
  if (header_size <= 0 || static_cast<std::size_t>(header_size) > bytes.size()) {
    throw DataError("bad SPHERE header size in " + file.string());
  }
  int rate = 16000, sample_bytes = 2, channels = 1;
  std::string byte_format = "01";
  std::string coding = "pcm";
  while (std::getline(header, line) && line.rfind("end_head", 0) != 0) {
    std::istringstream row(line);
    std::string name, type, value;
    row >> name >> type >> value;
    if (name == "sample_rate") rate = std::atoi(value.c_str());
    else if (name == "sample_n_bytes") sample_bytes = std::atoi(value.c_str());
    else if (name == "channel_count") channels = std::atoi(value.c_str());
    else if (name == "sample_byte_format") byte_format = value;
    else if (name == "sample_coding") coding = value;
  }
  if (sample_bytes != 2 || coding.rfind("pcm", 0) != 0) {
    throw DataError("unsupported SPHERE sample format in " + file.string());
  }
  if (channels != 1) throw DataError("unsupported channel count (want mono): " + file.string());
  const std::size_t body = static_cast<std::size_t>(header_size);
  const std::size_t n = (bytes.size() - body) / 2;
  return decode_pcm16(reinterpret_cast<const unsigned char*>(bytes.data()) + body, n,
                      byte_format == "01", rate);
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

}  // namespace

AudioData read_audio(const std::filesystem::path& file) {
  const std::string bytes = read_file_bytes(file);
  if (bytes.size() >= 7 && bytes.compare(0, 7, "NIST_1A") == 0) return read_sphere(bytes, file);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "RIFF") == 0) return read_riff(bytes, file);
  throw DataError("unrecognized audio container (want RIFF WAV or NIST SPHERE): " + file.string());
}

void write_wav_pcm16(const std::filesystem::path& file, const std::vector<double>& samples,
                     int sample_rate_hz) {
  std::string out;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  out.push_back(1);  // PCM
  out.push_back(0);
  out.push_back(1);  // mono
  out.push_back(0);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz * 2));
  out.push_back(2);  // block align
  out.push_back(0);
  out.push_back(16);  // bits per sample
  out.push_back(0);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const std::int16_t v = static_cast<std::int16_t>(std::lrint(clipped * 32767.0));
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
  }
  std::ofstream f(file, std::ios::binary);
  if (!f) throw DataError("cannot write " + file.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace phonerec::io
