#pragma once

// Binary checkpoint container. All integers little-endian:
//
//   magic        8 bytes  "FEDTCKPT"
//   version      u32      1
//   model kind   u32      0 = facteditor, 1 = encdec
//   scalar size  u32      4 (float) or 8 (double)
//   header len   u64      byte length of the JSON header that follows
//   header       JSON     {"config": ..., "vocab": ...}
//   array count  u32
//   per array:   u32 name length, name bytes, u32 rows, u32 cols,
//                rows*cols scalars in column-major order
//
// Arrays appear in the model's parameter visiting order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "factedit/model/config.hpp"
#include "factedit/model/enc_dec.hpp"
#include "factedit/model/fact_editor.hpp"
#include "factedit/model/vocab.hpp"

namespace factedit {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'F', 'E', 'D', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class Model>
struct ModelKindOf;
template <class S>
struct ModelKindOf<FactEditor<S>> {
  static constexpr ModelKind value = ModelKind::FactEditor;
};
template <class S>
struct ModelKindOf<EncDec<S>> {
  static constexpr ModelKind value = ModelKind::EncDec;
};

struct CheckpointHeader {
  ModelKind kind = ModelKind::FactEditor;
  std::uint32_t scalar_bytes = 4;
  TrainConfig config;
  Vocabulary vocab;
};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError(std::string("truncated checkpoint: ") + what);
  return v;
}

inline std::string get_bytes(std::istream& is, std::uint64_t n, const char* what) {
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n)))
    throw CheckpointError(std::string("truncated checkpoint: ") + what);
  return s;
}

}  // namespace detail

/// The stored config's model kind, dims and precision are overwritten to
/// describe `model` itself.
template <class Model>
void save_checkpoint(std::ostream& os, Model& model, TrainConfig config) {
  using Scalar = typename Model::Vec::Scalar;
  config.model = ModelKindOf<Model>::value;
  config.dims = model.dims();
  config.double_precision = sizeof(Scalar) == 8;
  const std::string header = nlohmann::json{{"config", to_json(config)}, {"vocab", vocabulary_to_json(model.vocab())}}.dump();
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put<std::uint32_t>(os, kCheckpointVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(config.model));
  detail::put<std::uint32_t>(os, sizeof(Scalar));
  detail::put<std::uint64_t>(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::uint32_t count = 0;
  model.params.visit([&](const std::string&, nn::Mat<Scalar>&) { ++count; });
  detail::put<std::uint32_t>(os, count);
  model.params.visit([&](const std::string& name, nn::Mat<Scalar>& m) {
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
    os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar)));
  });
  if (!os) throw CheckpointError("failed writing checkpoint");
}

template <class Model>
void save_checkpoint(const std::string& path, Model& model, const TrainConfig& config) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open " + path + " for writing");
  save_checkpoint(os, model, config);
}

inline CheckpointHeader read_checkpoint_header(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = detail::get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  CheckpointHeader h;
  const auto kind = detail::get<std::uint32_t>(is, "model kind");
  if (kind > 1) throw CheckpointError("unknown model kind " + std::to_string(kind));
  h.kind = static_cast<ModelKind>(kind);
  h.scalar_bytes = detail::get<std::uint32_t>(is, "scalar size");
  if (h.scalar_bytes != 4 && h.scalar_bytes != 8) throw CheckpointError("bad scalar size " + std::to_string(h.scalar_bytes));
  const auto len = detail::get<std::uint64_t>(is, "header length");
  if (len > (1ULL << 32)) throw CheckpointError("implausible header length");
  try {
    const auto j = nlohmann::json::parse(detail::get_bytes(is, len, "header"));
    h.config = config_from_json(j.at("config"));
    h.vocab = vocabulary_from_json(j.at("vocab"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  if (h.config.model != h.kind) throw CheckpointError("header config disagrees with the stored model kind");
  if (h.config.double_precision != (h.scalar_bytes == 8))
    throw CheckpointError("header precision disagrees with the stored scalar size");
  return h;
}

/// Reads the parameter arrays that follow a header into a freshly built model.
/// Names, order and shapes must match what the config and vocabulary imply.
template <class Model>
Model read_checkpoint_body(std::istream& is, const CheckpointHeader& h) {
  using Scalar = typename Model::Vec::Scalar;
  if (h.kind != ModelKindOf<Model>::value)
    throw CheckpointError("checkpoint holds a " + model_kind_name(h.kind) + " model, expected " +
                          model_kind_name(ModelKindOf<Model>::value));
  if (h.scalar_bytes != sizeof(Scalar)) throw CheckpointError("checkpoint scalar size does not match the requested type");
  Model model(h.config.dims, h.vocab);
  std::uint32_t expected = 0;
  model.params.visit([&](const std::string&, nn::Mat<Scalar>&) { ++expected; });
  const auto count = detail::get<std::uint32_t>(is, "array count");
  if (count != expected)
    throw CheckpointError("checkpoint has " + std::to_string(count) + " arrays, model expects " + std::to_string(expected));
  model.params.visit([&](const std::string& name, nn::Mat<Scalar>& m) {
    const auto nlen = detail::get<std::uint32_t>(is, "array name length");
    if (nlen > 4096) throw CheckpointError("implausible array name length");
    const auto stored = detail::get_bytes(is, nlen, "array name");
    if (stored != name) throw CheckpointError("expected array '" + name + "', found '" + stored + "'");
    const auto rows = detail::get<std::uint32_t>(is, "rows");
    const auto cols = detail::get<std::uint32_t>(is, "cols");
    if (rows != m.rows() || cols != m.cols())
      throw CheckpointError("shape mismatch for '" + name + "': stored " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", config implies " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
    if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar))))
      throw CheckpointError("truncated data for '" + name + "'");
  });
  return model;
}

template <class Model>
Model load_checkpoint(std::istream& is, TrainConfig* config = nullptr) {
  const auto h = read_checkpoint_header(is);
  Model m = read_checkpoint_body<Model>(is, h);
  if (config) *config = h.config;
  return m;
}

template <class Model>
Model load_checkpoint(const std::string& path, TrainConfig* config = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path);
  return load_checkpoint<Model>(is, config);
}

}  // namespace factedit
