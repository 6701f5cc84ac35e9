#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace risklab {

// Reflected CRC-32 (polynomial 0xEDB88320). Pass the previous value to
// checksum a stream incrementally; 0 starts a fresh run.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t prev = 0);

// FNV-1a, 64-bit. Used for manifest file fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string fnv1a64_hex(const std::string& bytes);

// Fingerprint of a file's contents. Throws UsageError naming the path if
// it cannot be read.
std::string fnv1a64_file_hex(const std::string& path);

} // namespace risklab
