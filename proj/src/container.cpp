#include "phonerec/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phonerec/error.hpp"

namespace phonerec::io {

namespace {

constexpr char kMagic[4] = {'H', 'T', 'S', 'V'};

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t n) {
  static const auto table = make_crc_table();
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_string(const std::string& s) {
  put_u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void ByteWriter::put_bytes(const void* data, std::size_t n) {
  buf_.append(static_cast<const char*>(data), n);
}

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > data_.size()) {
    throw DataError(context_ + ": truncated (" + std::to_string(data_.size() - pos_) +
                    " bytes left, " + std::to_string(n) + " needed)");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::string ByteReader::string() {
  const std::uint32_t n = u32();
  need(n);
  std::string s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

void ByteReader::raw(void* out, std::size_t n) {
  need(n);
  std::memcpy(out, data_.data() + pos_, n);
  pos_ += n;
}

void ModelContainer::add(std::string name, std::string payload) {
  for (const auto& [existing, _] : sections_) {
    if (existing == name) throw DataError("duplicate container section '" + name + "'");
  }
  sections_.emplace_back(std::move(name), std::move(payload));
}

bool ModelContainer::has(const std::string& name) const {
  for (const auto& [existing, _] : sections_) {
    if (existing == name) return true;
  }
  return false;
}

const std::string& ModelContainer::payload(const std::string& name) const {
  for (const auto& [existing, body] : sections_) {
    if (existing == name) return body;
  }
  throw DataError("model container: missing section '" + name + "'");
}

std::vector<std::string> ModelContainer::section_names() const {
  std::vector<std::string> names;
  names.reserve(sections_.size());
  for (const auto& [name, _] : sections_) names.push_back(name);
  return names;
}

std::string ModelContainer::to_bytes() const {
  ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put_u32(kVersion);
  w.put_u32(static_cast<std::uint32_t>(sections_.size()));
  for (const auto& [name, payload] : sections_) {
    w.put_string(name);
    w.put_u64(payload.size());
    w.put_u32(crc32(payload.data(), payload.size()));
    w.put_bytes(payload.data(), payload.size());
  }
  return w.take();
}

ModelContainer ModelContainer::from_bytes(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("model container: bad magic");
  }
  ByteReader r(bytes, "model container");
  char magic[4];
  r.raw(magic, 4);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("model container: unsupported format version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  ModelContainer c;
  for (std::uint32_t s = 0; s < count; ++s) {
    std::string name;
    try {
      name = r.string();
    } catch (const DataError&) {
      throw DataError("model container: truncated section table");
    }
    const std::uint64_t len = r.u64();
    const std::uint32_t want_crc = r.u32();
    std::string payload(len, '\0');
    try {
      r.raw(payload.data(), len);
    } catch (const DataError&) {
      throw DataError("model container: truncated while reading section '" + name + "'");
    }
    if (crc32(payload.data(), payload.size()) != want_crc) {
      throw DataError("model container: CRC mismatch in section '" + name + "'");
    }
    c.add(std::move(name), std::move(payload));
  }
  return c;
}

void ModelContainer::write(const std::filesystem::path& file) const {
  const std::string bytes = to_bytes();
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelContainer ModelContainer::read(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_bytes(ss.str());
}

namespace {

void put_matrix(ByteWriter& w, const Matrix& m) {
  w.put_u64(m.rows());
  w.put_u64(m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) w.put_f64(m.data()[i]);
}

Matrix get_matrix(ByteReader& r) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  return m;
}

void put_doubles(ByteWriter& w, const std::vector<double>& v) {
  w.put_u64(v.size());
  for (double x : v) w.put_f64(x);
}

std::vector<double> get_doubles(ByteReader& r) {
  const std::uint64_t n = r.u64();
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

}  // namespace

std::string serialize_cnn(const cnn::CnnModel& model) {
  ByteWriter w;
  const auto& cfg = model.config;
  w.put_u32(static_cast<std::uint32_t>(cfg.num_maps));
  w.put_u32(static_cast<std::uint32_t>(cfg.mask_rows));
  w.put_u32(static_cast<std::uint32_t>(cfg.mask_cols));
  w.put_u32(static_cast<std::uint32_t>(cfg.pool_rows));
  w.put_u32(static_cast<std::uint32_t>(cfg.pool_cols));
  w.put_u32(static_cast<std::uint32_t>(cfg.image_rows));
  w.put_u32(static_cast<std::uint32_t>(cfg.image_cols));
  w.put_u32(static_cast<std::uint32_t>(cfg.num_classes));
  w.put_f64(cfg.learning_rate);
  w.put_u32(static_cast<std::uint32_t>(cfg.epochs));
  w.put_u32(static_cast<std::uint32_t>(cfg.batch_size));
  w.put_u64(cfg.seed);
  for (const auto& k : model.kernels) put_matrix(w, k);
  put_doubles(w, model.kernel_bias);
  put_matrix(w, model.head_weights);
  put_doubles(w, model.head_bias);
  return w.take();
}

cnn::CnnModel deserialize_cnn(const std::string& payload) {
  ByteReader r(payload, "cnn section");
  cnn::CnnModel model;
  auto& cfg = model.config;
  cfg.num_maps = static_cast<int>(r.u32());
  cfg.mask_rows = static_cast<int>(r.u32());
  cfg.mask_cols = static_cast<int>(r.u32());
  cfg.pool_rows = static_cast<int>(r.u32());
  cfg.pool_cols = static_cast<int>(r.u32());
  cfg.image_rows = static_cast<int>(r.u32());
  cfg.image_cols = static_cast<int>(r.u32());
  cfg.num_classes = static_cast<int>(r.u32());
  cfg.learning_rate = r.f64();
  cfg.epochs = static_cast<int>(r.u32());
  cfg.batch_size = static_cast<int>(r.u32());
  cfg.seed = r.u64();
  for (int m = 0; m < cfg.num_maps; ++m) model.kernels.push_back(get_matrix(r));
  model.kernel_bias = get_doubles(r);
  model.head_weights = get_matrix(r);
  model.head_bias = get_doubles(r);
  return model;
}

std::string serialize_standardizer(const htsvm::Standardizer& s) {
  ByteWriter w;
  put_doubles(w, s.mean);
  put_doubles(w, s.scale);
  return w.take();
}

htsvm::Standardizer deserialize_standardizer(const std::string& payload) {
  ByteReader r(payload, "standardization section");
  htsvm::Standardizer s;
  s.mean = get_doubles(r);
  s.scale = get_doubles(r);
  return s;
}

std::string serialize_binary_svm(const svm::BinarySvmModel& model) {
  ByteWriter w;
  w.put_u32(static_cast<std::uint32_t>(model.kernel.degree));
  w.put_f64(model.kernel.coef0);
  w.put_f64(model.kernel.scale);
  w.put_f64(model.C);
  w.put_f64(model.bias);
  w.put_u8(model.converged ? 1 : 0);
  w.put_f64(model.dual_objective);
  put_matrix(w, model.support_vectors);
  put_doubles(w, model.dual_coefs);
  return w.take();
}

svm::BinarySvmModel deserialize_binary_svm(const std::string& payload) {
  ByteReader r(payload, "svm section");
  svm::BinarySvmModel model;
  model.kernel.degree = static_cast<int>(r.u32());
  model.kernel.coef0 = r.f64();
  model.kernel.scale = r.f64();
  model.C = r.f64();
  model.bias = r.f64();
  model.converged = r.u8() != 0;
  model.dual_objective = r.f64();
  model.support_vectors = get_matrix(r);
  model.dual_coefs = get_doubles(r);
  return model;
}

std::string serialize_node(const svm::NodeModel& model) {
  ByteWriter w;
  w.put_u32(static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& c : model.classes) w.put_string(c);
  w.put_u32(static_cast<std::uint32_t>(model.pairwise.size()));
  for (const auto& pair : model.pairwise) w.put_string(serialize_binary_svm(pair));
  return w.take();
}

svm::NodeModel deserialize_node(const std::string& payload) {
  ByteReader r(payload, "node section");
  svm::NodeModel model;
  const std::uint32_t k = r.u32();
  for (std::uint32_t i = 0; i < k; ++i) model.classes.push_back(r.string());
  const std::uint32_t pairs = r.u32();
  for (std::uint32_t i = 0; i < pairs; ++i) model.pairwise.push_back(deserialize_binary_svm(r.string()));
  return model;
}

std::string serialize_mlp(const mlp::MlpModel& model) {
  ByteWriter w;
  const auto& cfg = model.config;
  w.put_u32(static_cast<std::uint32_t>(cfg.hidden_units));
  w.put_u32(static_cast<std::uint32_t>(cfg.input_dim));
  w.put_u32(static_cast<std::uint32_t>(cfg.num_classes));
  w.put_f64(cfg.learning_rate);
  w.put_u32(static_cast<std::uint32_t>(cfg.epochs));
  w.put_u32(static_cast<std::uint32_t>(cfg.batch_size));
  w.put_u64(cfg.seed);
  put_matrix(w, model.hidden_weights);
  put_doubles(w, model.hidden_bias);
  put_matrix(w, model.output_weights);
  put_doubles(w, model.output_bias);
  return w.take();
}

mlp::MlpModel deserialize_mlp(const std::string& payload) {
  ByteReader r(payload, "mlp section");
  mlp::MlpModel model;
  auto& cfg = model.config;
  cfg.hidden_units = static_cast<int>(r.u32());
  cfg.input_dim = static_cast<int>(r.u32());
  cfg.num_classes = static_cast<int>(r.u32());
  cfg.learning_rate = r.f64();
  cfg.epochs = static_cast<int>(r.u32());
  cfg.batch_size = static_cast<int>(r.u32());
  cfg.seed = r.u64();
  model.hidden_weights = get_matrix(r);
  model.hidden_bias = get_doubles(r);
  model.output_weights = get_matrix(r);
  model.output_bias = get_doubles(r);
  return model;
}

namespace {

std::string serialize_spectro(const spectro::SpectroConfig& cfg) {
  ByteWriter w;
  w.put_f64(cfg.window_ms);
  w.put_f64(cfg.hop_ms);
  w.put_u32(static_cast<std::uint32_t>(cfg.sub_window_samples));
  w.put_u32(static_cast<std::uint32_t>(cfg.sub_hop_samples));
  w.put_u32(static_cast<std::uint32_t>(cfg.fft_size));
  w.put_u32(static_cast<std::uint32_t>(cfg.image_rows));
  w.put_u32(static_cast<std::uint32_t>(cfg.image_cols));
  w.put_f64(cfg.log_floor);
  return w.take();
}

spectro::SpectroConfig deserialize_spectro(const std::string& payload) {
  ByteReader r(payload, "config section");
  spectro::SpectroConfig cfg;
  cfg.window_ms = r.f64();
  cfg.hop_ms = r.f64();
  cfg.sub_window_samples = static_cast<int>(r.u32());
  cfg.sub_hop_samples = static_cast<int>(r.u32());
  cfg.fft_size = static_cast<int>(r.u32());
  cfg.image_rows = static_cast<int>(r.u32());
  cfg.image_cols = static_cast<int>(r.u32());
  cfg.log_floor = r.f64();
  return cfg;
}

}  // namespace

ModelContainer pack_model(const TrainedModel& model) {
  ModelContainer c;
  ByteWriter labels;
  labels.put_u32(static_cast<std::uint32_t>(model.label_symbols.size()));
  for (const auto& s : model.label_symbols) labels.put_string(s);
  c.add("labels", labels.take());
  c.add("config", serialize_spectro(model.spectro));
  c.add("cnn", serialize_cnn(model.cnn));
  c.add("standardization", serialize_standardizer(model.htsvm.standardization));
  c.add("taxonomy", model.htsvm.taxonomy.text());
  for (std::size_t m = 0; m < model.htsvm.root_ensemble.size(); ++m) {
    c.add("htsvm.root." + std::to_string(m), serialize_node(model.htsvm.root_ensemble[m]));
  }
  for (const auto& [name, node] : model.htsvm.node_models) {
    c.add("htsvm.node." + name, serialize_node(node));
  }
  if (model.has_mlp) c.add("mlp", serialize_mlp(model.mlp));
  return c;
}

TrainedModel unpack_model(const ModelContainer& container) {
  TrainedModel model;
  {
    ByteReader r(container.payload("labels"), "labels section");
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) model.label_symbols.push_back(r.string());
  }
  model.spectro = deserialize_spectro(container.payload("config"));
  model.cnn = deserialize_cnn(container.payload("cnn"));
  model.htsvm.standardization = deserialize_standardizer(container.payload("standardization"));
  model.htsvm.taxonomy = htsvm::Taxonomy::parse(container.payload("taxonomy"), model.label_symbols);
  model.htsvm.feature_dim = model.cnn.config.feature_dim();
  for (const auto& name : container.section_names()) {
    if (name.rfind("htsvm.root.", 0) == 0) {
      model.htsvm.root_ensemble.push_back(deserialize_node(container.payload(name)));
    } else if (name.rfind("htsvm.node.", 0) == 0) {
      model.htsvm.node_models[name.substr(11)] = deserialize_node(container.payload(name));
    }
  }
  if (container.has("mlp")) {
    model.has_mlp = true;
    model.mlp = deserialize_mlp(container.payload("mlp"));
  }
  return model;
}

}  // namespace phonerec::io
