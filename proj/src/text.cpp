#include "depsev/text.hpp"

#include <cstdint>

namespace depsev::text {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t len;
  bool valid;
};

Decoded decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
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
    return {0, 1, false};
  }
  if (i + len > s.size()) return {0, 1, false};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {0, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len, true};
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

char32_t lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0xC0) return c;
  if (c <= 0xDE) return c == 0xD7 ? c : c + 32;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  return c;
}

bool is_space(char32_t c) {
  return c == U' ' || (c >= 0x09 && c <= 0x0D) || c == 0xA0 || c == 0x3000 ||
         (c >= 0x2000 && c <= 0x200B) || c == 0x2028 || c == 0x2029;
}

bool is_apostrophe(char32_t c) {
  return c == U'\'' || c == 0x2018 || c == 0x2019 || c == 0x02BC;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E) || c < 0x20 ||
           c == 0x7F;
  }
  if (c >= 0xA1 && c <= 0xBF) return c != 0xAA && c != 0xB5 && c != 0xBA;
  if (c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x2000 && c <= 0x206F) return true;
  if (c >= 0x3000 && c <= 0x303F) return true;
  if (c >= 0xFF01 && c <= 0xFF0F) return true;
  return false;
}

bool is_word(const Decoded& d) {
  return !d.valid || (!is_space(d.cp) && !is_punct(d.cp) && !is_apostrophe(d.cp));
}

bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

}  // namespace

bool is_url_token(std::string_view token) {
  if (token.find("://") != std::string_view::npos) return true;
  if (token.size() >= 4) {
    const std::string head = to_lower(token.substr(0, 4));
    if (head == "www.") return true;
  }
  return false;
}

std::string to_lower(std::string_view input) {
  std::string out;
  out.reserve(input.size());
  for (std::size_t i = 0; i < input.size();) {
    const Decoded d = decode(input, i);
    if (d.valid) {
      encode(lower(d.cp), out);
    } else {
      out += input[i];
    }
    i += d.len;
  }
  return out;
}

std::vector<std::string> normalize_tokens(std::string_view input) {
  // Hyperlinks are removed on the raw text, before punctuation would split
  // them into innocuous-looking fragments.
  std::string kept;
  kept.reserve(input.size());
  for (auto tok : split_whitespace(input)) {
    if (is_url_token(tok)) continue;
    kept.append(tok);
    kept += ' ';
  }
  const std::string lowered = to_lower(kept);

  std::vector<std::string> tokens;
  std::string current;
  bool prev_word = false;
  for (std::size_t i = 0; i < lowered.size();) {
    const Decoded d = decode(lowered, i);
    if (is_word(d)) {
      current.append(lowered, i, d.len);
      prev_word = true;
    } else if (d.valid && is_apostrophe(d.cp) && prev_word &&
               i + d.len < lowered.size() &&
               is_word(decode(lowered, i + d.len))) {
      // "can't" -> "cant"
    } else {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      prev_word = false;
    }
    i += d.len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string join(const std::vector<std::string>& tokens, char sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view input) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < input.size()) {
    while (i < input.size() && ascii_space(input[i])) ++i;
    std::size_t j = i;
    while (j < input.size() && !ascii_space(input[j])) ++j;
    if (j > i) out.push_back(input.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && ascii_space(s[b])) ++b;
  while (e > b && ascii_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace depsev::text
