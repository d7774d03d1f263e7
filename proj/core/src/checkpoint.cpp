// SPDX-License-Identifier: Apache-2.0

#include "mgt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mgt/error.hpp"

namespace mgt::train {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'T', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::string get_bytes(std::size_t count) {
    need(count);
    std::string out = bytes_.substr(pos_, count);
    pos_ += count;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) throw ConfigError("checkpoint: truncated file");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const TrainConfig& cfg, const nn::ParamStore& store) {
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string config = to_json(run_identity(cfg));
  put_le<std::uint64_t>(out, config.size());
  out += config;
  put_le<std::uint64_t>(out, store.size());
  for (const auto& entry : store.entries()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entry.name.size()));
    out += entry.name;
    out.push_back(entry.trainable ? '\1' : '\0');
    auto values = entry.value.data();
    put_le<std::uint64_t>(out, values.size());
    for (double v : values) put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw ConfigError("checkpoint: bad magic");
  }
  const auto version = r.get_le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = parse_config(r.get_bytes(r.get_le<std::uint64_t>()));
  const auto count = r.get_le<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry entry;
    entry.name = r.get_bytes(r.get_le<std::uint32_t>());
    entry.trainable = r.get_le<std::uint8_t>() != 0;
    const auto n = r.get_le<std::uint64_t>();
    if (n > bytes.size() / 8) throw ConfigError("checkpoint: truncated file");
    entry.values.resize(n);
    for (double& v : entry.values) v = r.get_f64();
    ckpt.entries.push_back(std::move(entry));
  }
  if (!r.done()) throw ConfigError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const TrainConfig& cfg, const nn::ParamStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("checkpoint: cannot write " + path);
  const std::string bytes = encode_checkpoint(cfg, store);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path);
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return decode_checkpoint(bytes.str());
}

std::unique_ptr<model::MGTModel> restore_model(const Checkpoint& ckpt) {
  auto model = std::make_unique<model::MGTModel>(ckpt.config.model, ckpt.config.seed);
  auto& entries = model->params().entries();
  if (entries.size() != ckpt.entries.size()) {
    throw ConfigError("checkpoint: expected " + std::to_string(entries.size()) + " entries, found " +
                      std::to_string(ckpt.entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const CheckpointEntry& src = ckpt.entries[i];
    auto& dst = entries[i];
    if (src.name != dst.name) {
      throw ConfigError("checkpoint: entry " + std::to_string(i) + " is \"" + src.name +
                        "\", expected \"" + dst.name + "\"");
    }
    auto values = dst.value.mutable_data();
    if (src.values.size() != values.size()) {
      throw ConfigError("checkpoint: \"" + src.name + "\" has " + std::to_string(src.values.size()) +
                        " values, expected " + std::to_string(values.size()));
    }
    std::copy(src.values.begin(), src.values.end(), values.begin());
    dst.trainable = src.trainable;
  }
  return model;
}

}  // namespace mgt::train
