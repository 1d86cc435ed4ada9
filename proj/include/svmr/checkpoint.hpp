#pragma once

#include "svmr/tensor.hpp"

#include <filesystem>
#include <string>

namespace svmr {

// Named-block parameter file: magic (e.g. "SVMR1"), u32 version = 1, u32 block
// count, then per block u32 name length, name bytes, u32 rank (= 2), u32 rows,
// u32 cols and rows * cols f32 values. Little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const std::string& magic, const ParamSet& params);
ParamSet decode_checkpoint(const std::string& magic, const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const std::string& magic, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path, const std::string& magic);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace svmr
