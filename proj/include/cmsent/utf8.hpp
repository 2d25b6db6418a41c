#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cmsent::utf8 {

/// Decodes a UTF-8 string into code points. Rejects overlong encodings,
/// surrogates, values above U+10FFFF and truncated sequences; the error
/// message names the byte offset of the first offending byte.
std::vector<char32_t> decode(std::string_view bytes);

/// Appends one code point to a UTF-8 string.
void append(std::string& out, char32_t cp);

/// Encodes cps[begin, begin+count) back to UTF-8.
std::string encode(const std::vector<char32_t>& cps, size_t begin, size_t count);

}  // namespace cmsent::utf8
