#pragma once

// Binary embedding interchange format ("SEMB"), one file per lemma.
//
//   magic      "SEMB"
//   u16 LE     version (1)
//   u32 LE     n (rows)
//   u32 LE     d (columns)
//   u16 LE + bytes   model_id (UTF-8)
//   u16 LE + bytes   lemma (UTF-8)
//   n x (u16 LE + bytes)   row ids (UTF-8)
//   n*d f32 LE       row-major matrix
//
// No padding, nothing after the matrix.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <iterator>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "senseloom/corpus.hpp"
#include "senseloom/error.hpp"
#include "senseloom/io.hpp"
#include "senseloom/utf8.hpp"

namespace senseloom {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

struct EmbeddingMatrix {
  std::string lemma;
  std::string model_id;
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> data;  // ids.size() x dim, row-major

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return dim; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  float at(std::size_t i, std::size_t j) const { return data[i * dim + j]; }

  // Exact comparison on float bit patterns.
  bool bitwise_equal(const EmbeddingMatrix& o) const {
    return lemma == o.lemma && model_id == o.model_id && ids == o.ids && dim == o.dim &&
           data.size() == o.data.size() &&
           (data.empty() || std::memcmp(data.data(), o.data.data(), data.size() * 4) == 0);
  }
};

enum class EmbeddingFormatError {
  bad_magic,
  version_mismatch,
  truncated,
  non_finite,
  bad_header,
  bad_string,
  duplicate_id,
  trailing_bytes,
};

inline const char* to_string(EmbeddingFormatError e) {
  switch (e) {
    case EmbeddingFormatError::bad_magic: return "bad magic";
    case EmbeddingFormatError::version_mismatch: return "version mismatch";
    case EmbeddingFormatError::truncated: return "truncated payload";
    case EmbeddingFormatError::non_finite: return "non-finite value";
    case EmbeddingFormatError::bad_header: return "bad header";
    case EmbeddingFormatError::bad_string: return "bad string";
    case EmbeddingFormatError::duplicate_id: return "duplicate id";
    case EmbeddingFormatError::trailing_bytes: return "trailing bytes";
  }
  return "?";
}

class EmbeddingFormatException : public Error {
 public:
  EmbeddingFormatException(EmbeddingFormatError code, const std::string& message)
      : Error(ErrorKind::validation, std::string(to_string(code)) + ": " + message,
              to_string(code)),
        code_(code) {}
  EmbeddingFormatError code() const noexcept { return code_; }

 private:
  EmbeddingFormatError code_;
};

inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;
inline constexpr char kEmbeddingMagic[4] = {'S', 'E', 'M', 'B'};

inline void check_invariants(const EmbeddingMatrix& m) {
  using E = EmbeddingFormatError;
  if (m.dim < 1) throw EmbeddingFormatException(E::bad_header, "d must be >= 1");
  if (m.data.size() != m.ids.size() * m.dim) {
    throw EmbeddingFormatException(E::bad_header, "data size " + std::to_string(m.data.size()) +
                                                      " != n*d = " +
                                                      std::to_string(m.ids.size() * m.dim));
  }
  if (m.ids.size() > UINT32_MAX || m.dim > UINT32_MAX) {
    throw EmbeddingFormatException(E::bad_header, "dimensions exceed u32");
  }
  auto check_str = [](std::string_view s, const std::string& what) {
    if (s.size() > UINT16_MAX) {
      throw EmbeddingFormatException(E::bad_string, what + " longer than 65535 bytes");
    }
    if (!utf8::is_valid(s)) throw EmbeddingFormatException(E::bad_string, what + " is not UTF-8");
  };
  check_str(m.model_id, "model_id");
  check_str(m.lemma, "lemma");
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    check_str(m.ids[i], "id " + std::to_string(i));
    if (!seen.insert(m.ids[i]).second) {
      throw EmbeddingFormatException(E::duplicate_id, "id \"" + m.ids[i] + "\" repeated");
    }
  }
  for (std::size_t k = 0; k < m.data.size(); ++k) {
    if (!std::isfinite(m.data[k])) {
      throw EmbeddingFormatException(E::non_finite, "at (row " + std::to_string(k / m.dim) +
                                                        ", col " + std::to_string(k % m.dim) +
                                                        ")");
    }
  }
}

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

class LeReader {
 public:
  explicit LeReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw EmbeddingFormatException(
          EmbeddingFormatError::truncated,
          std::string(what) + " at byte " + std::to_string(pos_) + ": expected " +
              std::to_string(n) + " bytes, " + std::to_string(bytes_.size() - pos_) +
              " available");
    }
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_embeddings(const EmbeddingMatrix& m) {
  check_invariants(m);
  std::string out;
  out.reserve(32 + m.model_id.size() + m.lemma.size() + m.data.size() * 4);
  out.append(kEmbeddingMagic, 4);
  detail::put_le<std::uint16_t>(out, kEmbeddingFormatVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.ids.size()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim));
  auto put_str = [&](std::string_view s) {
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.append(s);
  };
  put_str(m.model_id);
  put_str(m.lemma);
  for (const auto& id : m.ids) put_str(id);
  for (float f : m.data) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

inline EmbeddingMatrix decode_embeddings(std::string_view bytes) {
  using E = EmbeddingFormatError;
  detail::LeReader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    throw EmbeddingFormatException(E::bad_magic, "first 4 bytes are not \"SEMB\"");
  }
  in.take(4, "magic");
  const auto version = in.get<std::uint16_t>("version");
  if (version != kEmbeddingFormatVersion) {
    throw EmbeddingFormatException(E::version_mismatch,
                                   "file version " + std::to_string(version) + ", expected " +
                                       std::to_string(kEmbeddingFormatVersion));
  }
  EmbeddingMatrix m;
  const std::uint32_t n = in.get<std::uint32_t>("n");
  const std::uint32_t d = in.get<std::uint32_t>("d");
  if (d == 0) throw EmbeddingFormatException(E::bad_header, "d = 0");
  m.dim = d;
  auto get_str = [&](const char* what) {
    const auto len = in.get<std::uint16_t>(what);
    const std::size_t at = in.pos();
    auto s = in.take(len, what);
    if (!utf8::is_valid(s)) {
      throw EmbeddingFormatException(E::bad_string,
                                     std::string(what) + " at byte " + std::to_string(at) +
                                         " is not UTF-8");
    }
    return std::string(s);
  };
  m.model_id = get_str("model_id");
  m.lemma = get_str("lemma");
  // Each id needs at least its 2-byte length prefix.
  in.need(static_cast<std::size_t>(n) * 2, "id table");
  m.ids.reserve(n);
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    m.ids.push_back(get_str("id"));
    if (!seen.insert(m.ids.back()).second) {
      throw EmbeddingFormatException(E::duplicate_id,
                                     "row " + std::to_string(i) + " id \"" + m.ids.back() + "\"");
    }
  }
  const std::size_t payload = static_cast<std::size_t>(n) * d * 4;
  if (in.remaining() < payload) {
    throw EmbeddingFormatException(
        E::truncated, "matrix payload at byte " + std::to_string(in.pos()) + ": expected " +
                          std::to_string(payload) + " bytes, actual " +
                          std::to_string(in.remaining()));
  }
  m.data.resize(static_cast<std::size_t>(n) * d);
  for (std::size_t k = 0; k < m.data.size(); ++k) {
    const float f = std::bit_cast<float>(in.get<std::uint32_t>("matrix"));
    if (!std::isfinite(f)) {
      throw EmbeddingFormatException(E::non_finite, "at (row " + std::to_string(k / d) +
                                                        ", col " + std::to_string(k % d) + ")");
    }
    m.data[k] = f;
  }
  if (in.remaining() != 0) {
    throw EmbeddingFormatException(E::trailing_bytes,
                                   std::to_string(in.remaining()) + " bytes after matrix at byte " +
                                       std::to_string(in.pos()));
  }
  return m;
}

inline void write_embeddings(const EmbeddingMatrix& m, const fs::path& path) {
  write_file_atomic(path, encode_embeddings(m));
}

inline EmbeddingMatrix read_embeddings(const fs::path& path) {
  return decode_embeddings(read_file(path));
}

// Exhaustive report of how a matrix and a record list disagree.
struct AlignmentReport {
  std::vector<std::string> missing;  // record ids absent from the matrix
  std::vector<std::string> extra;    // matrix ids with no record
  std::vector<std::string> lemma_mismatch;  // record ids whose lemma differs
  bool ok() const { return missing.empty() && extra.empty() && lemma_mismatch.empty(); }
};

inline AlignmentReport check_alignment(const EmbeddingMatrix& m,
                                       const std::vector<SentenceRecord>& records) {
  AlignmentReport rep;
  std::set<std::string> matrix_ids(m.ids.begin(), m.ids.end());
  std::set<std::string> record_ids;
  for (const auto& r : records) {
    record_ids.insert(r.id);
    if (r.lemma != m.lemma) rep.lemma_mismatch.push_back(r.id);
  }
  std::set_difference(record_ids.begin(), record_ids.end(), matrix_ids.begin(), matrix_ids.end(),
                      std::back_inserter(rep.missing));
  std::set_difference(matrix_ids.begin(), matrix_ids.end(), record_ids.begin(), record_ids.end(),
                      std::back_inserter(rep.extra));
  return rep;
}

inline void validate_alignment(const EmbeddingMatrix& m,
                               const std::vector<SentenceRecord>& records) {
  const auto rep = check_alignment(m, records);
  if (rep.ok()) return;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return "{" + s + "}";
  };
  std::string msg = "embedding/record alignment failed:";
  json detail = json::object();
  if (!rep.missing.empty()) {
    msg += " missing " + join(rep.missing) + ";";
    detail["missing"] = rep.missing;
  }
  if (!rep.extra.empty()) {
    msg += " extra " + join(rep.extra) + ";";
    detail["extra"] = rep.extra;
  }
  if (!rep.lemma_mismatch.empty()) {
    msg += " lemma mismatch (matrix lemma \"" + m.lemma + "\") on " + join(rep.lemma_mismatch) +
           ";";
    detail["lemma_mismatch"] = rep.lemma_mismatch;
  }
  fail(ErrorKind::validation, msg, detail.dump());
}

}  // namespace senseloom
