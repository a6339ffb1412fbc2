#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace papercast {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_file(const fs::path& path);
std::vector<std::uint8_t> read_binary(const fs::path& path);

// Writes through a temporary sibling and renames, so readers never observe a
// partially written file.
void write_file_atomic(const fs::path& path, std::string_view content);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& value);
void append_line(const fs::path& path, std::string_view line);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

// First 8 bytes of SHA-256, big endian. Stable across platforms and runs.
std::uint64_t stable_hash(std::string_view bytes);

}  // namespace papercast
