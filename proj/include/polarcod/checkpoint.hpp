#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace polarcod {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Blob {
    std::string name;
    std::string bytes;
};

// "PCKP", u32 version, u32 blob count, then per blob: u32 name length, name,
// u64 payload length, payload. All integers little-endian.
void write_checkpoint(const std::filesystem::path& path, const std::vector<Blob>& blobs);
// Throws ConfigError on a version mismatch and DataError on a damaged file.
std::vector<Blob> read_checkpoint(const std::filesystem::path& path);

std::string encode_doubles(const std::vector<double>& values);
std::vector<double> decode_doubles(const std::string& bytes);

// Payload of the named blob; DataError when absent.
const std::string& find_blob(const std::vector<Blob>& blobs, const std::string& name);

}  // namespace polarcod
