#include <cstdio>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <zlib.h>

#include "binary_io.hpp"
#include "lipdyn/error.hpp"
#include "lipdyn/verifier.hpp"

namespace lipdyn::verifier {

namespace {

constexpr char kModelMagic[8] = {'L', 'I', 'P', 'M', 'O', 'D', 'L', '1'};
constexpr std::uint32_t kModelFormat = 1;

std::uint32_t checksum(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

void write_body(detail::ByteWriter& w, const SiameseModel& m) {
  w.raw(kModelMagic, sizeof kModelMagic);
  w.u32(kModelFormat);
  w.i32(m.network.input_dim);
  w.i32(m.network.channels);
  w.i32(m.network.kernel);
  w.i32(m.network.pool_bins);
  w.i32(m.network.embedding_dim);
  w.f64(m.training.learning_rate);
  w.f64(m.training.momentum);
  w.i32(m.training.batch_size);
  w.i32(m.training.epochs);
  w.f64(m.training.margin);
  w.u64(m.training.seed);
  w.u64(m.schema);
  w.f64(m.threshold);
  w.f64(m.train_loss);
  w.u32(m.validation_loss ? 1 : 0);
  w.f64(m.validation_loss.value_or(0.0));
  w.u32(static_cast<std::uint32_t>(m.norm.mean.size()));
  for (double v : m.norm.mean) w.f64(v);
  for (double v : m.norm.stddev) w.f64(v);
  w.u32(static_cast<std::uint32_t>(m.pca.bases.size()));
  for (const auto& b : m.pca.bases) {
    for (double v : b.mean) w.f64(v);
    for (const auto& c : b.components) {
      for (double v : c) w.f64(v);
    }
    for (double v : b.variance) w.f64(v);
    w.u32(b.rank_deficient ? 1 : 0);
  }
  const auto params = m.net.parameters();
  w.u64(params.size());
  for (double v : params) w.f64(v);
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace

std::string SiameseModel::version() const {
  detail::ByteWriter w;
  write_body(w, *this);
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", checksum(w.bytes().data(), w.bytes().size()));
  return buf;
}

std::vector<std::uint8_t> serialize_model(const SiameseModel& model) {
  detail::ByteWriter w;
  write_body(w, model);
  w.u32(checksum(w.bytes().data(), w.bytes().size()));
  return w.bytes();
}

SiameseModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kModelMagic + 8 ||
      !std::equal(kModelMagic, kModelMagic + 8, reinterpret_cast<const char*>(bytes.data()))) {
    throw Error(ErrorCode::MalformedRecord, "not a model file");
  }
  const std::size_t body = bytes.size() - 4;
  detail::ByteReader tail(bytes.data() + body, 4);
  if (tail.u32() != checksum(bytes.data(), body)) {
    throw Error(ErrorCode::ChecksumMismatch, "model checksum does not match its contents");
  }
  detail::ByteReader r(bytes.data() + sizeof kModelMagic, body - sizeof kModelMagic);
  if (r.u32() != kModelFormat) throw Error(ErrorCode::VersionMismatch, "unsupported model format");

  SiameseModel m;
  m.network.input_dim = r.i32();
  m.network.channels = r.i32();
  m.network.kernel = r.i32();
  m.network.pool_bins = r.i32();
  m.network.embedding_dim = r.i32();
  m.training.learning_rate = r.f64();
  m.training.momentum = r.f64();
  m.training.batch_size = r.i32();
  m.training.epochs = r.i32();
  m.training.margin = r.f64();
  m.training.seed = r.u64();
  m.schema = r.u64();
  m.threshold = r.f64();
  m.train_loss = r.f64();
  const bool has_val = r.u32() != 0;
  const double val = r.f64();
  if (has_val) m.validation_loss = val;
  try {
    validate(m.network);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("model network config: ") + e.what());
  }
  const std::uint32_t nd = r.u32();
  if (static_cast<int>(nd) != layout::kFeatures) {
    throw Error(ErrorCode::DimensionMismatch, "model normalization has wrong dimension");
  }
  m.norm.mean.resize(nd);
  m.norm.stddev.resize(nd);
  for (double& v : m.norm.mean) v = r.f64();
  for (double& v : m.norm.stddev) v = r.f64();
  if (r.u32() != m.pca.bases.size()) {
    throw Error(ErrorCode::MalformedRecord, "model texture projection has wrong size");
  }
  for (auto& b : m.pca.bases) {
    for (double& v : b.mean) v = r.f64();
    for (auto& c : b.components) {
      for (double& v : c) v = r.f64();
    }
    for (double& v : b.variance) v = r.f64();
    b.rank_deficient = r.u32() != 0;
  }
  m.net = SiameseNetwork(m.network);
  auto params = m.net.parameters();
  if (r.u64() != params.size()) {
    throw Error(ErrorCode::DimensionMismatch, "model weight count does not match its network");
  }
  for (double& v : params) v = r.f64();
  if (r.remaining() != 0) throw Error(ErrorCode::MalformedRecord, "trailing bytes in model file");
  return m;
}

void save_model(const std::filesystem::path& path, const SiameseModel& model) {
  const auto bytes = serialize_model(model);
  write_all(path, bytes.data(), bytes.size());
}

SiameseModel load_model(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return deserialize_model(bytes);
}

void save_template(const std::filesystem::path& path, const Template& tpl) {
  nlohmann::ordered_json j;
  j["subject"] = tpl.subject;
  j["model_version"] = tpl.model_version;
  j["threshold"] = tpl.threshold;
  j["enrolled_windows"] = tpl.enrolled_windows;
  j["gallery"] = tpl.gallery;
  const std::string text = j.dump(1) + "\n";
  write_all(path, text.data(), text.size());
}

Template load_template(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  Template tpl;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    tpl.subject = j.at("subject").get<std::string>();
    tpl.model_version = j.at("model_version").get<std::string>();
    tpl.threshold = j.at("threshold").get<double>();
    tpl.enrolled_windows = j.at("enrolled_windows").get<std::size_t>();
    tpl.gallery = j.at("gallery").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("template: ") + e.what());
  }
  if (tpl.gallery.empty()) throw Error(ErrorCode::MalformedRecord, "template gallery is empty");
  if (!(tpl.threshold > 0.0)) {
    throw Error(ErrorCode::MalformedRecord, "template threshold must be positive");
  }
  return tpl;
}

}  // namespace lipdyn::verifier
