#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "senseloom/error.hpp"

namespace senseloom::utf8 {

// Byte offset of the first invalid sequence, or nullopt if `bytes` is
// well-formed UTF-8 (no overlongs, no surrogates, nothing above U+10FFFF).
inline std::optional<std::size_t> find_invalid(std::string_view bytes) {
  const auto* s = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    unsigned char lo = 0x80, hi = 0xBF;
    if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
    } else if (c >= 0xE0 && c <= 0xEF) {
      len = 3;
      if (c == 0xE0) lo = 0xA0;
      if (c == 0xED) hi = 0x9F;
    } else if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
      if (c == 0xF0) lo = 0x90;
      if (c == 0xF4) hi = 0x8F;
    } else {
      return i;
    }
    if (i + len > n) return i;
    if (s[i + 1] < lo || s[i + 1] > hi) return i;
    for (std::size_t k = 2; k < len; ++k) {
      if (s[i + k] < 0x80 || s[i + k] > 0xBF) return i;
    }
    i += len;
  }
  return std::nullopt;
}

inline bool is_valid(std::string_view bytes) { return !find_invalid(bytes); }

inline void require_valid(std::string_view bytes, std::string_view what) {
  if (auto bad = find_invalid(bytes)) {
    fail(ErrorKind::validation,
         std::string(what) + ": malformed UTF-8 at byte offset " + std::to_string(*bad),
         std::to_string(*bad));
  }
}

// Byte offset of the start of each scalar value, plus a final entry equal to
// bytes.size(). Input must be valid UTF-8.
inline std::vector<std::size_t> scalar_offsets(std::string_view bytes) {
  std::vector<std::size_t> out;
  out.reserve(bytes.size() + 1);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if ((static_cast<unsigned char>(bytes[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(bytes.size());
  return out;
}

inline std::size_t length(std::string_view bytes) {
  std::size_t n = 0;
  for (char c : bytes) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

// Bytes covering scalar values [start, end). Throws if out of range.
inline std::string_view slice(std::string_view bytes, std::size_t start, std::size_t end) {
  const auto offs = scalar_offsets(bytes);
  const std::size_t count = offs.size() - 1;
  if (start > end || end > count) {
    fail(ErrorKind::validation, "span [" + std::to_string(start) + ", " + std::to_string(end) +
                                    ") out of bounds for text of length " +
                                    std::to_string(count));
  }
  return bytes.substr(offs[start], offs[end] - offs[start]);
}

}  // namespace senseloom::utf8
