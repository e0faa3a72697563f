#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "partclass/models.hpp"

namespace partclass {

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::uint32_t epochs = 0;
    double final_loss = 0.0;
};

// Binary checkpoint, little-endian:
//   magic "MCLS", format version u32,
//   architecture tag (u32 length + UTF-8),
//   config key=value text block (u32 length + UTF-8, one "key=value\n" per
//   line, model config first, then meta.* entries),
//   tensor count u32, then per tensor:
//     name (u32 length + UTF-8), rank u32, dims u64 each, f64 data row-major.
// Parameters are written first, then state buffers, in model order.
inline constexpr std::uint32_t checkpoint_version = 1;

void save_checkpoint(const std::filesystem::path& path, ClassifierModel& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    std::unique_ptr<ClassifierModel> model;
    CheckpointMeta meta;
};

// Rejects unknown magic or version, unknown tensors, missing tensors and
// shape mismatches (BadCheckpoint).
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace partclass
