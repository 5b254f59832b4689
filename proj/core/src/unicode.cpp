#include "tokscope/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <mutex>

#include "tokscope/error.hpp"

namespace tokscope::unicode {

namespace {

// Expected continuation byte count and minimum scalar for each lead byte
// class; validation rejects overlongs, surrogates and > U+10FFFF.
inline bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

}  // namespace

std::optional<std::size_t> find_invalid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char b0 = s[i];
    if (b0 < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    char32_t min_scalar;
    char32_t scalar;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      min_scalar = 0x80;
      scalar = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      min_scalar = 0x800;
      scalar = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      min_scalar = 0x10000;
      scalar = b0 & 0x07;
    } else {
      return i;
    }
    if (i + len > n) return i;
    for (std::size_t k = 1; k < len; ++k) {
      if (!is_continuation(s[i + k])) return i;
      scalar = (scalar << 6) | (s[i + k] & 0x3F);
    }
    if (scalar < min_scalar) return i;
    if (scalar > 0x10FFFF || (scalar >= 0xD800 && scalar <= 0xDFFF)) return i;
    i += len;
  }
  return std::nullopt;
}

std::size_t scalar_count(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char b : text) {
    if (!is_continuation(b)) ++count;
  }
  return count;
}

std::vector<std::size_t> scalar_boundaries(std::string_view text) {
  std::vector<std::size_t> starts;
  starts.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(text[i]))) starts.push_back(i);
  }
  starts.push_back(text.size());
  return starts;
}

char32_t decode_scalar(std::string_view text, std::size_t& pos) {
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const unsigned char b0 = s[pos];
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  std::size_t len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : 4;
  char32_t scalar = b0 & (0xFF >> (len + 1));
  for (std::size_t k = 1; k < len; ++k) {
    scalar = (scalar << 6) | (s[pos + k] & 0x3F);
  }
  pos += len;
  return scalar;
}

void append_scalar(std::string& out, char32_t scalar) {
  if (scalar < 0x80) {
    out.push_back(static_cast<char>(scalar));
  } else if (scalar < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (scalar >> 6)));
    out.push_back(static_cast<char>(0x80 | (scalar & 0x3F)));
  } else if (scalar < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (scalar >> 12)));
    out.push_back(static_cast<char>(0x80 | ((scalar >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (scalar & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (scalar >> 18)));
    out.push_back(static_cast<char>(0x80 | ((scalar >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((scalar >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (scalar & 0x3F)));
  }
}

std::string nfkc(std::string_view text) {
  static const icu::Normalizer2* normalizer = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
      throw Error("ICU NFKC normalizer unavailable");
    }
    return n;
  }();

  const icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  const icu::UnicodeString normalized = normalizer->normalize(input, status);
  if (U_FAILURE(status)) {
    throw Error("NFKC normalization failed");
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

bool is_whitespace(char32_t scalar) {
  switch (scalar) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:    // NEL
    case 0x2028:  // LINE SEPARATOR
    case 0x2029:  // PARAGRAPH SEPARATOR
      return true;
    default:
      return false;
  }
}

}  // namespace tokscope::unicode
