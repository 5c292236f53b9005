#include "judgekit/jsonl.hpp"

namespace judgekit::jsonl {

std::vector<nlohmann::json> read_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": invalid JSON: " + e.what());
    }
  }
  return out;
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  for (const auto& line : lines) {
    out << line << '\n';
  }
  out.flush();
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

}  // namespace judgekit::jsonl
