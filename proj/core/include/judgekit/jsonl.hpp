#pragma once

// JSONL record files: one JSON object per line, UTF-8, LF line endings.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "judgekit/errors.hpp"

namespace judgekit::jsonl {

/// Compact single-line dump (keys in sorted order, no whitespace).
inline std::string dump_line(const nlohmann::json& j) { return j.dump(); }

std::vector<nlohmann::json> read_raw(const std::filesystem::path& path);

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines);

template <typename T>
std::vector<T> read_file(const std::filesystem::path& path) {
  std::vector<T> out;
  std::size_t line_no = 0;
  for (auto& j : read_raw(path)) {
    ++line_no;
    try {
      out.push_back(j.template get<T>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": bad record: " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_file(const std::filesystem::path& path, const std::vector<T>& values) {
  std::vector<std::string> lines;
  lines.reserve(values.size());
  for (const auto& v : values) {
    lines.push_back(dump_line(nlohmann::json(v)));
  }
  write_lines(path, lines);
}

}  // namespace judgekit::jsonl
