#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ecladts {

using json = nlohmann::json;

std::string read_text(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

json read_json(const std::filesystem::path& path);
// Pretty-printed with sorted keys and a trailing newline; byte-stable.
void write_json(const std::filesystem::path& path, const json& doc);

// Little-endian IEEE-754 binary64 encoding.
void append_f64_le(std::vector<std::uint8_t>& out, std::span<const double> values);
std::vector<double> decode_f64_le(std::span<const std::uint8_t> bytes);
void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t value);
std::uint64_t decode_u64_le(std::span<const std::uint8_t> bytes);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace ecladts
