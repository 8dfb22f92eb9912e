#pragma once

#include <cstdint>
#include <string>

#include "s2f/model.hpp"
#include "s2f/training.hpp"

namespace s2f {

inline constexpr int kCheckpointVersion = 1;

struct TrainingMetadata {
  std::size_t epoch = 0;
  double dev_f1 = 0.0;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kDiscontinuous;
  DecodeConfig decode;
};

struct Checkpoint {
  S2fModel model;
  TrainingMetadata meta;
};

// Layout: 8-byte magic "S2FCKPT\0", little-endian u64 header length, JSON header
// (version, model config, types, metadata, tensor manifest with name, shape,
// dtype and byte offset, FNV-1a checksum of the data), then float32 LE data.
void save_checkpoint(const std::string& path, const S2fModel& model, const TrainingMetadata& meta);

// Throws CheckpointError on a bad magic, unsupported version, truncation,
// checksum mismatch, or a tensor missing or with the wrong shape.
Checkpoint load_checkpoint(const std::string& path);

// Copies the checkpoint's tensors into an existing model; shapes must match.
void load_parameters(const std::string& path, S2fModel& into);

}  // namespace s2f
