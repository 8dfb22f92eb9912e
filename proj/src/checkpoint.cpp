#include "s2f/checkpoint.hpp"

#include <bit>
#include <algorithm>
#include <array>
#include <cstring>
#include <map>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "s2f/config.hpp"
#include "s2f/errors.hpp"

namespace s2f {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', '2', 'F', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

struct RawCheckpoint {
  json header;
  std::string data;
};

RawCheckpoint read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(path + " is not an s2f checkpoint");
  }
  if (bytes.size() < sizeof kMagic + 8) throw CheckpointError(path + ": truncated header");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + sizeof kMagic, 8);
  header_len = to_little(header_len);
  const std::size_t header_begin = sizeof kMagic + 8;
  if (header_len > bytes.size() - header_begin) throw CheckpointError(path + ": truncated header");
  RawCheckpoint raw;
  raw.header = json::parse(bytes.substr(header_begin, header_len), nullptr, false);
  if (raw.header.is_discarded() || !raw.header.is_object()) {
    throw CheckpointError(path + ": corrupt header");
  }
  if (!raw.header.contains("version") || !raw.header["version"].is_number_integer()) {
    throw CheckpointError(path + ": header has no version");
  }
  const int version = raw.header["version"].get<int>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  raw.data = bytes.substr(header_begin + header_len);
  try {
    const std::size_t expected = raw.header.at("data_bytes").get<std::size_t>();
    if (raw.data.size() < expected) {
      throw CheckpointError(path + ": truncated data (" + std::to_string(raw.data.size()) + " of " +
                            std::to_string(expected) + " bytes)");
    }
    if (raw.data.size() > expected) throw CheckpointError(path + ": trailing bytes after data");
    if (raw.header.at("checksum").get<std::string>() != hex(fnv1a(raw.data))) {
      throw CheckpointError(path + ": checksum mismatch, file is corrupt");
    }
  } catch (const json::exception& e) {
    throw CheckpointError(path + ": corrupt header (" + e.what() + ")");
  }
  return raw;
}

void assign_tensors(const RawCheckpoint& raw, ParameterStore& params, const std::string& path) {
  std::map<std::string, const json*> manifest;
  try {
    for (const json& t : raw.header.at("tensors")) manifest[t.at("name").get<std::string>()] = &t;
  } catch (const json::exception& e) {
    throw CheckpointError(path + ": corrupt tensor manifest (" + e.what() + ")");
  }
  if (manifest.size() != params.size()) {
    throw CheckpointError(path + ": checkpoint has " + std::to_string(manifest.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamId id = params.id(i);
    const std::string& name = params.name(id);
    auto it = manifest.find(name);
    if (it == manifest.end()) throw CheckpointError(path + ": missing tensor '" + name + "'");
    const json& entry = *it->second;
    Tensor& target = params.value(id);
    std::size_t rows = 0, cols = 0, offset = 0;
    try {
      rows = entry.at("shape").at(0).get<std::size_t>();
      cols = entry.at("shape").at(1).get<std::size_t>();
      offset = entry.at("offset").get<std::size_t>();
      if (entry.at("dtype").get<std::string>() != "float32") {
        throw CheckpointError(path + ": tensor '" + name + "' has unsupported dtype");
      }
    } catch (const json::exception& e) {
      throw CheckpointError(path + ": corrupt manifest entry for '" + name + "'");
    }
    if (rows != target.rows() || cols != target.cols()) {
      throw CheckpointError(path + ": shape mismatch for tensor '" + name + "': checkpoint has " +
                            std::to_string(rows) + "x" + std::to_string(cols) + ", model expects " +
                            std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
    }
    const std::size_t bytes = rows * cols * sizeof(float);
    if (offset > raw.data.size() || bytes > raw.data.size() - offset) {
      throw CheckpointError(path + ": tensor '" + name + "' lies outside the data section");
    }
    for (std::size_t e = 0; e < target.size(); ++e) {
      std::uint32_t word = 0;
      std::memcpy(&word, raw.data.data() + offset + e * sizeof(float), sizeof word);
      target[e] = static_cast<double>(std::bit_cast<float>(to_little(word)));
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const S2fModel& model, const TrainingMetadata& meta) {
  const ParameterStore& params = model.params();
  std::string data;
  json tensors = json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamId id = params.id(i);
    const Tensor& t = params.value(id);
    tensors.push_back({{"name", params.name(id)},
                       {"shape", {t.rows(), t.cols()}},
                       {"dtype", "float32"},
                       {"offset", data.size()}});
    for (double v : t.values()) {
      const std::uint32_t word = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      data.append(reinterpret_cast<const char*>(&word), sizeof word);
    }
  }
  json header;
  header["format"] = "s2f-checkpoint";
  header["version"] = kCheckpointVersion;
  header["model"] = model_config_to_json(model.config());
  header["types"] = model.types().names();
  header["meta"] = {{"epoch", meta.epoch},
                    {"dev_f1", meta.dev_f1},
                    {"seed", meta.seed},
                    {"mode", to_string(meta.mode)},
                    {"decode", decode_config_to_json(meta.decode)}};
  header["tensors"] = tensors;
  header["data_bytes"] = data.size();
  header["checksum"] = hex(fnv1a(data));
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  const std::uint64_t len = to_little(static_cast<std::uint64_t>(text.size()));
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const RawCheckpoint raw = read_raw(path);
  try {
    const ModelConfig config = model_config_from_json(raw.header.at("model"));
    TypeInventory types(raw.header.at("types").get<std::vector<std::string>>());
    const json& m = raw.header.at("meta");
    TrainingMetadata meta;
    meta.epoch = m.at("epoch").get<std::size_t>();
    meta.dev_f1 = m.at("dev_f1").get<double>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.mode = parse_train_mode(m.at("mode").get<std::string>());
    meta.decode = decode_config_from_json(m.at("decode"));
    Checkpoint ck{S2fModel(config, std::move(types), 0), meta};
    assign_tensors(raw, ck.model.params(), path);
    return ck;
  } catch (const json::exception& e) {
    throw CheckpointError(path + ": corrupt header (" + e.what() + ")");
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": invalid configuration (" + e.what() + ")");
  } catch (const ValidationError& e) {
    throw CheckpointError(path + ": invalid type inventory (" + e.what() + ")");
  }
}

void load_parameters(const std::string& path, S2fModel& into) {
  assign_tensors(read_raw(path), into.params(), path);
}

}  // namespace s2f
