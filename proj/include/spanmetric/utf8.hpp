#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace spanmetric::utf8 {

// Decodes UTF-8 into Unicode scalar values. Invalid sequences decode to
// U+FFFD, one replacement per offending byte.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);

// Length in Unicode scalar values.
std::size_t length(std::string_view text);

// Substring by scalar-value offsets [start, end).
std::string substr(std::string_view text, std::size_t start, std::size_t end);

bool is_space(char32_t c);

}  // namespace spanmetric::utf8
