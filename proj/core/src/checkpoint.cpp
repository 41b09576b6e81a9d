#include "mcn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "mcn/errors.hpp"
#include "mcn/rng.hpp"

namespace mcn {

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'C', 'N', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path, const char* what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError(path + ": truncated at " + what);
  }
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

double read_f64(std::istream& in, const std::string& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw FormatError(path + ": truncated tensor payload");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::string& path, const RunConfig& config, ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);

  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  const std::string echo = config.to_text();
  write_u32(out, static_cast<std::uint32_t>(echo.size()));
  out.write(echo.data(), static_cast<std::streamsize>(echo.size()));

  const ParamRefs refs = params.named_tensors();
  write_u32(out, static_cast<std::uint32_t>(refs.size()));
  for (const auto& ref : refs) {
    write_u32(out, static_cast<std::uint32_t>(ref.name.size()));
    out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
    write_u32(out, static_cast<std::uint32_t>(ref.tensor->rows()));
    write_u32(out, static_cast<std::uint32_t>(ref.tensor->cols()));
    for (const double v : ref.tensor->raw()) write_f64(out, v);
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);

  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
    throw FormatError(path + ": bad magic");
  }
  const std::uint32_t version = read_u32(in, path, "version");
  if (version != kCheckpointVersion) {
    throw FormatError(path + ": unsupported version " + std::to_string(version));
  }

  const std::uint32_t echo_len = read_u32(in, path, "config length");
  std::string echo(echo_len, '\0');
  if (!in.read(echo.data(), echo_len)) throw FormatError(path + ": truncated config");

  Checkpoint ckpt;
  ckpt.config = RunConfig::from_text(echo);

  const std::uint32_t count = read_u32(in, path, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in, path, "tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw FormatError(path + ": truncated tensor name");
    const std::uint32_t rows = read_u32(in, path, "tensor rows");
    const std::uint32_t cols = read_u32(in, path, "tensor cols");
    Tensor2 t(rows, cols);
    for (double& v : t.raw()) v = read_f64(in, path);
    if (!ckpt.tensors.emplace(std::move(name), std::move(t)).second) {
      throw FormatError(path + ": duplicate tensor name");
    }
  }
  return ckpt;
}

ModelParams restore_model(const Checkpoint& ckpt) {
  RunConfig config = ckpt.config;
  config.validate();
  if (config.word_vectors.empty()) {
    throw DataError("checkpoint config names no word-vector file");
  }
  Vocabulary vocab = load_word_vectors(config.word_vectors);

  auto tensor = [&ckpt](const std::string& name) -> const Tensor2& {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw FormatError("checkpoint missing tensor " + name);
    return it->second;
  };
  const Tensor2& stored_embeddings = tensor("embeddings");
  if (stored_embeddings.rows() != vocab.table.rows() ||
      stored_embeddings.cols() != vocab.table.cols()) {
    throw DataError("word-vector file " + config.word_vectors + " gives a " +
                    vocab.table.shape_str() + " table but the checkpoint stored " +
                    stored_embeddings.shape_str());
  }

  // Feature widths are not in the config; recover them from the first-layer
  // input shape given the context flags.
  ContextFlags flags{config.use_global, config.use_tef, config.compact_input};
  auto feature_dim = [&flags](std::size_t input_dim) -> std::size_t {
    if (!flags.compact) return (input_dim - 2) / 2;
    std::size_t extra = flags.use_tef ? 2 : 0;
    return (input_dim - extra) / (flags.use_global ? 2 : 1);
  };
  const std::size_t rgb_dim = feature_dim(tensor("rgb.w1").cols());
  const std::size_t flow_dim = feature_dim(tensor("flow.w1").cols());

  Rng scratch(0);
  ModelParams params = build_model(config, std::move(vocab), rgb_dim, flow_dim, scratch);
  for (const auto& ref : params.named_tensors()) {
    const Tensor2& stored = tensor(ref.name);
    if (!ref.tensor->same_shape(stored)) {
      throw FormatError("checkpoint tensor " + ref.name + " is " + stored.shape_str() +
                        " but the config implies " + ref.tensor->shape_str());
    }
    *ref.tensor = stored;
  }
  return params;
}

}  // namespace mcn
