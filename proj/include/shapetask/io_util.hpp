#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shapetask::io {

// FNV-1a 64-bit over a byte buffer, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// Little-endian append helpers for binary payloads.
void append_f64le(std::string& out, double v);
void append_i32le(std::string& out, std::int32_t v);
double read_f64le(const std::string& in, size_t offset);
std::int32_t read_i32le(const std::string& in, size_t offset);

// Whole-file read; throws MissingFileError if absent.
std::string read_file(const std::filesystem::path& path);

// Write-then-rename so readers never observe partial files.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace shapetask::io
