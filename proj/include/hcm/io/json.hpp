#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace hcm::io {

using Json = nlohmann::ordered_json;

/// Compact JSON with every floating-point number written as %.17g, which
/// round-trips IEEE doubles exactly.
std::string dump_exact(const Json& value);
/// Same as dump_exact with two-space indentation.
std::string dump_exact_pretty(const Json& value);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a; stable content hash for configs and files.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace hcm::io
