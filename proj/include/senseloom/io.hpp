#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "senseloom/error.hpp"

namespace senseloom {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failed: " + path.string());
  return std::move(ss).str();
}

// Writes to a sibling temp file, then renames over `path`.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorKind::io, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::io, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

// Splits on '\n', stripping one trailing '\r' per line. Line numbers are
// 1-based. A final line without terminator is still reported.
inline void for_each_line(std::string_view bytes,
                          const std::function<void(std::size_t, std::string_view)>& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    ++line_no;
    std::size_t nl = bytes.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? bytes.substr(pos) : bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

inline bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\f\v") == std::string_view::npos;
}

// Parses a JSONL document, skipping blank lines. Errors name the line.
inline std::vector<std::pair<std::size_t, json>> parse_jsonl(std::string_view bytes,
                                                             std::string_view what) {
  std::vector<std::pair<std::size_t, json>> out;
  for_each_line(bytes, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      fail(ErrorKind::validation,
           std::string(what) + ": malformed JSON on line " + std::to_string(line_no),
           std::to_string(line_no));
    }
    out.emplace_back(line_no, std::move(j));
  });
  return out;
}

inline std::vector<std::pair<std::size_t, json>> read_jsonl(const fs::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

inline std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump(-1, ' ', false, json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

// Typed field access with errors naming the line and the field.
template <typename T>
T require_field(const json& j, const char* key, std::size_t line_no, std::string_view what) {
  auto it = j.find(key);
  if (it == j.end()) {
    fail(ErrorKind::validation, std::string(what) + " line " + std::to_string(line_no) +
                                    ": missing field \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::validation, std::string(what) + " line " + std::to_string(line_no) +
                                    ": field \"" + key + "\" has the wrong type");
  }
}

}  // namespace senseloom
