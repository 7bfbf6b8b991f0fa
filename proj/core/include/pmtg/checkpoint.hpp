#pragma once

// Policy checkpoints: one line of JSON metadata, then the flat parameter
// vector as little-endian float64.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "pmtg/normalizer.hpp"
#include "pmtg/policy.hpp"

namespace pmtg {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CorruptHeaderError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class LengthMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class HashMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class ShapeMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct Checkpoint {
  PolicyParams params;
  ActionBounds bounds;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::size_t iteration = 0;
  std::size_t total_rollouts = 0;
  RunningNormalizer normalizer;  // dim 0 when training did not normalize
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

struct LoadOptions {
  std::optional<std::uint64_t> expected_hash;
  std::optional<PolicyShape> expected_shape;
  bool force = false;  // downgrade a hash mismatch to a warning
  std::function<void(const std::string&)> warn;
};

Checkpoint load_checkpoint(const std::filesystem::path& path, const LoadOptions& options = {});

std::string hash_hex(std::uint64_t hash);

}  // namespace pmtg
