#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf16.h>

#include "senseloom/error.hpp"

namespace senseloom {

// A word segment in scalar-value offsets. Whitespace and punctuation
// segments are dropped.
struct WordToken {
  std::size_t start = 0;
  std::size_t end = 0;
};

namespace detail {

inline icu::BreakIterator& word_break_iterator() {
  thread_local std::unique_ptr<icu::BreakIterator> it = [] {
    UErrorCode status = U_ZERO_ERROR;
    std::unique_ptr<icu::BreakIterator> bi(
        icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
    if (U_FAILURE(status) || !bi) {
      fail(ErrorKind::io, std::string("ICU word break iterator unavailable: ") +
                              u_errorName(status));
    }
    return bi;
  }();
  return *it;
}

}  // namespace detail

// Unicode default word boundaries (UAX #29). `text` must be valid UTF-8.
inline std::vector<WordToken> word_tokens(std::string_view text) {
  const icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));

  // utf16 index -> scalar index
  const int32_t len = u.length();
  std::vector<std::size_t> to_scalar(static_cast<std::size_t>(len) + 1, 0);
  {
    const UChar* buf = u.getBuffer();
    int32_t i = 0;
    std::size_t scalar = 0;
    while (i < len) {
      const int32_t begin = i;
      UChar32 c;
      U16_NEXT(buf, i, len, c);
      (void)c;
      for (int32_t k = begin; k < i; ++k) to_scalar[static_cast<std::size_t>(k)] = scalar;
      ++scalar;
    }
    to_scalar[static_cast<std::size_t>(len)] = scalar;
  }

  auto& bi = detail::word_break_iterator();
  bi.setText(u);
  std::vector<WordToken> out;
  int32_t prev = bi.first();
  for (int32_t pos = bi.next(); pos != icu::BreakIterator::DONE; prev = pos, pos = bi.next()) {
    if (bi.getRuleStatus() == UBRK_WORD_NONE) continue;
    out.push_back({to_scalar[static_cast<std::size_t>(prev)],
                   to_scalar[static_cast<std::size_t>(pos)]});
  }
  return out;
}

// Simple (full) Unicode case folding of a UTF-8 string.
inline std::string fold_case(std::string_view text) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace senseloom
