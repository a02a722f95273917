#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pairpred/diffcore/optim.hpp"

// Binary layout (all integers and reals little-endian):
//   8 bytes   magic "PAIRPRED"
//   u32       format version
//   u32 + n   metadata string (free-form, the model stores its config JSON)
//   u32       parameter count
//   per parameter:
//     u32 + n  name
//     u32      rank, then rank x u64 extents
//     f64 x numel(shape) values
namespace pairpred::diff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct CheckpointData {
  std::uint32_t version = kCheckpointVersion;
  std::string metadata;
  std::vector<NamedArray> arrays;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& metadata, const ParameterStore& params);
/// Throws ValidationError on bad magic, unknown version or truncation.
CheckpointData load_checkpoint(const std::filesystem::path& path);
/// Copies values into `params`; names, order and shapes must match exactly.
void restore_parameters(ParameterStore& params, const CheckpointData& data);

}  // namespace pairpred::diff
