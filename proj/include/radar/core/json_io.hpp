#pragma once

#include <filesystem>

#include <json.hpp>

namespace radar {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed, with a trailing newline. Parent directories are created.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Throws if `j` has a key not in `allowed`; `where` names the object.
void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view where);

}  // namespace radar
