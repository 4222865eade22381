#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rhetoric {

// All indices in the task data are 0-based code-point offsets, so the
// library converts UTF-8 byte strings to code-point sequences at the
// boundaries and works on char32_t internally.

// Decodes UTF-8. Invalid byte sequences either throw (strict) or are
// replaced with U+FFFD (lenient, used on model output).
std::u32string decode_utf8(std::string_view s);
std::u32string decode_utf8_lenient(std::string_view s, bool* had_errors = nullptr);

std::string encode_utf8(std::u32string_view s);
std::string encode_utf8(char32_t cp);

// Number of code points in a UTF-8 string.
std::size_t cp_length(std::string_view s);

// Slice by inclusive code-point range [begin, end]; throws if out of range.
std::string cp_slice(std::string_view s, std::size_t begin, std::size_t end);

bool is_space(char32_t cp);

// Trims ASCII whitespace and U+3000 from both ends.
std::string trim(std::string_view s);

std::u32string to_u32(std::string_view s);

}  // namespace rhetoric
