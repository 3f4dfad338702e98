#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gcat/matrix.hpp"

namespace gcat {

enum class StageTag : std::uint8_t { transe = 0, encoder = 1, decoder = 2 };

const char* stage_name(StageTag tag);

/// One named parameter block stored at checkpoint precision (binary32).
struct ParamBlock {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> values;

    std::size_t expected_count() const;
};

struct Checkpoint {
    static constexpr std::uint32_t kFormatVersion = 1;

    std::uint32_t format_version = kFormatVersion;
    StageTag stage = StageTag::transe;
    std::vector<ParamBlock> blocks;

    void add(std::string name, const Matrix& m);
    const ParamBlock& block(const std::string& name) const;
    /// Widens a rank-2 (or rank-1, as a row) block back to doubles.
    Matrix matrix(const std::string& name) const;
};

/// Bitwise comparison of every block, including NaN payloads and signed zero.
bool bit_equal(const Checkpoint& a, const Checkpoint& b);

/// Layout (all integers unsigned 32-bit little-endian):
///   "GCATCKPT" | format_version | stage byte | block count |
///   per block: name length, UTF-8 name, rank, dims..., float32 LE payload |
///   CRC-32 of every preceding byte.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);

/// Checks, in order: magic (FormatError), trailing CRC (ChecksumError),
/// block structure and payload lengths (ShapeError).
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes and fsyncs before returning. Throws IoError.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);
/// CRC-32 of a file's full contents, as 8 lowercase hex digits.
std::string file_crc32_hex(const std::filesystem::path& path);

}  // namespace gcat
