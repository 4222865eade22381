#include "rhetoric/text.hpp"

#include <stdexcept>

namespace rhetoric {

namespace {

// Returns the code point starting at s[i] and advances i, or U+FFFD on
// malformed input (i is advanced by one byte in that case).
char32_t next_cp(std::string_view s, std::size_t& i, bool& ok) {
  ok = true;
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ok = false;
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ok = false;
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ok = false;
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong encodings and surrogates.
  static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ok = false;
    ++i;
    return 0xFFFD;
  }
  i += len;
  return cp;
}

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    bool ok = false;
    const std::size_t at = i;
    const char32_t cp = next_cp(s, i, ok);
    if (!ok) {
      throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(at));
    }
    out.push_back(cp);
  }
  return out;
}

std::u32string decode_utf8_lenient(std::string_view s, bool* had_errors) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  bool bad = false;
  while (i < s.size()) {
    bool ok = false;
    out.push_back(next_cp(s, i, ok));
    bad = bad || !ok;
  }
  if (had_errors) *had_errors = bad;
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size() * 3);
  for (const char32_t cp : s) out += encode_utf8(cp);
  return out;
}

std::size_t cp_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    if (b < 0x80) {
      i += 1;
    } else if ((b & 0xE0) == 0xC0) {
      i += 2;
    } else if ((b & 0xF0) == 0xE0) {
      i += 3;
    } else if ((b & 0xF8) == 0xF0) {
      i += 4;
    } else {
      throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(i));
    }
    ++n;
  }
  return n;
}

std::string cp_slice(std::string_view s, std::size_t begin, std::size_t end) {
  if (end < begin) throw std::out_of_range("cp_slice: end < begin");
  const std::u32string u = decode_utf8(s);
  if (end >= u.size()) throw std::out_of_range("cp_slice: range past end of string");
  return encode_utf8(std::u32string_view(u).substr(begin, end - begin + 1));
}

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == U'　' || cp == U'﻿';
}

std::string trim(std::string_view s) {
  std::u32string u = decode_utf8_lenient(s);
  std::size_t b = 0;
  std::size_t e = u.size();
  while (b < e && is_space(u[b])) ++b;
  while (e > b && is_space(u[e - 1])) --e;
  return encode_utf8(std::u32string_view(u).substr(b, e - b));
}

std::u32string to_u32(std::string_view s) { return decode_utf8(s); }

}  // namespace rhetoric
