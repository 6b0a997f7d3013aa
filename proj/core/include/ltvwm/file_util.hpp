#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ltvwm {

/// Writes through a temporary file in the same directory, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Hex digest of the canonical (sorted-key, compact) serialization of a config.
std::string config_hash(const nlohmann::json& config);

}  // namespace ltvwm
