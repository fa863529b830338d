#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loomcast {

/// Lowercases, removes punctuation and splits on whitespace. Digits are kept
/// and empty tokens dropped. Input is UTF-8; invalid bytes are dropped.
std::vector<std::string> normalize(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

/// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains_run(std::span<const std::string> haystack, std::span<const std::string> needle);

}  // namespace loomcast
