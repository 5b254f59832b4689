#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tokscope::unicode {

/// Word-boundary meta-symbol U+2581, the marker substituted for whitespace.
inline constexpr std::string_view kBoundary = "\xE2\x96\x81";
inline constexpr char32_t kBoundaryScalar = 0x2581;

/// Returns the byte offset of the first invalid UTF-8 sequence, or nullopt
/// if the whole input is well-formed.
std::optional<std::size_t> find_invalid_utf8(std::string_view text);

/// Number of Unicode scalar values. Input must be valid UTF-8.
std::size_t scalar_count(std::string_view text);

/// Byte offsets of every scalar start, plus text.size() as a final sentinel.
/// boundaries(text).size() == scalar_count(text) + 1.
std::vector<std::size_t> scalar_boundaries(std::string_view text);

/// Decodes the scalar starting at byte `pos`; advances `pos` past it.
char32_t decode_scalar(std::string_view text, std::size_t& pos);

/// Appends the UTF-8 encoding of `scalar` to `out`.
void append_scalar(std::string& out, char32_t scalar);

/// Unicode NFKC normalization (ICU-backed). Input must be valid UTF-8.
std::string nfkc(std::string_view text);

/// Whitespace for the normalizer's collapse step: ASCII whitespace plus the
/// separators NFKC leaves intact (NEL, LS, PS). NFKC already folds the other
/// Unicode spaces (NBSP, EN SPACE, ideographic space, ...) to U+0020.
bool is_whitespace(char32_t scalar);

}  // namespace tokscope::unicode
