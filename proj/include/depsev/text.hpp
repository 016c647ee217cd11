#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace depsev::text {

/// True for whitespace-delimited tokens that look like hyperlinks
/// ("scheme://..." anywhere in the token, or a leading "www.").
bool is_url_token(std::string_view token);

/// UTF-8 lowercase. ASCII plus Latin-1, Latin Extended-A, Greek and Cyrillic
/// capitals are folded; other bytes pass through unchanged.
std::string to_lower(std::string_view input);

/// Lowercases, drops URL tokens, turns punctuation into separators (an
/// apostrophe between two word characters is deleted instead) and splits on
/// whitespace.
std::vector<std::string> normalize_tokens(std::string_view input);

std::string join(const std::vector<std::string>& tokens, char sep = ' ');

/// Splits on ASCII whitespace.
std::vector<std::string_view> split_whitespace(std::string_view input);

std::string_view trim(std::string_view s);

}  // namespace depsev::text
