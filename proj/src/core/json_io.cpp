#include "radar/core/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "radar/core/types.hpp"

namespace radar {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view where) {
  if (!j.is_object()) throw Error(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace radar
