#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phonerec/cnn.hpp"
#include "phonerec/htsvm.hpp"
#include "phonerec/mlp.hpp"
#include "phonerec/spectro.hpp"
#include "phonerec/svm.hpp"

namespace phonerec::io {

std::uint32_t crc32(const void* data, std::size_t n);

// Little-endian primitive encoder, used for every on-disk format.
class ByteWriter {
 public:
  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f64(double v);
  void put_f32(float v);
  void put_string(const std::string& s);  // u32 length prefix
  void put_bytes(const void* data, std::size_t n);

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string context)
      : data_(bytes), context_(std::move(context)) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  float f32();
  std::string string();
  void raw(void* out, std::size_t n);
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;
  const std::string& data_;
  std::string context_;
  std::size_t pos_ = 0;
};

// Versioned container of named, length-prefixed, CRC-protected sections.
class ModelContainer {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void add(std::string name, std::string payload);
  bool has(const std::string& name) const;
  const std::string& payload(const std::string& name) const;
  std::vector<std::string> section_names() const;  // insertion order

  std::string to_bytes() const;
  static ModelContainer from_bytes(const std::string& bytes);

  void write(const std::filesystem::path& file) const;
  static ModelContainer read(const std::filesystem::path& file);

 private:
  std::vector<std::pair<std::string, std::string>> sections_;
};

// Section codecs. Dimensions live in the payload headers; everything is
// little-endian 64-bit floats.
std::string serialize_cnn(const cnn::CnnModel& model);
cnn::CnnModel deserialize_cnn(const std::string& payload);

std::string serialize_standardizer(const htsvm::Standardizer& s);
htsvm::Standardizer deserialize_standardizer(const std::string& payload);

std::string serialize_binary_svm(const svm::BinarySvmModel& model);
svm::BinarySvmModel deserialize_binary_svm(const std::string& payload);

std::string serialize_node(const svm::NodeModel& model);
svm::NodeModel deserialize_node(const std::string& payload);

std::string serialize_mlp(const mlp::MlpModel& model);
mlp::MlpModel deserialize_mlp(const std::string& payload);

// Whole-model assembly: cnn + standardization + taxonomy text + one section
// per tree node + optional mlp + label alphabet + the frame geometry the
// model was trained with.
struct TrainedModel {
  std::vector<std::string> label_symbols;
  spectro::SpectroConfig spectro;
  cnn::CnnModel cnn;
  htsvm::HtsvmModel htsvm;
  bool has_mlp = false;
  mlp::MlpModel mlp;
};

ModelContainer pack_model(const TrainedModel& model);
TrainedModel unpack_model(const ModelContainer& container);

}  // namespace phonerec::io
