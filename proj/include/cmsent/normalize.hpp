#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cmsent {

/// Settings shared by both preprocessing pipelines.
///
/// The default punctuation set is ASCII punctuation plus the Unicode general
/// punctuation block (U+2000..U+206F); punctuation is replaced by spaces so
/// "word,word" splits into two tokens. The default stopword list is empty.
struct NormalizeConfig {
  std::unordered_set<char32_t> punctuation;
  std::unordered_set<std::string> stopwords;  // lowercase UTF-8
  int max_repeat = 2;

  NormalizeConfig();
};

/// Lowercases (ASCII), replaces punctuation with spaces, splits on
/// whitespace runs and drops stopwords. Token order is preserved.
std::vector<std::string> normalize_basic(std::string_view text,
                                         const NormalizeConfig& config);

/// Shortens every run of one repeated character longer than max_repeat down
/// to exactly max_repeat occurrences ("yehhhhh" -> "yehh").
std::string collapse_repeats(std::string_view token, int max_repeat = 2);

/// Wraps a token in '#' markers ("main" -> "#main#"). Throws ArgumentError
/// if the token is empty or already contains '#'.
std::string delimit(std::string_view token);

/// The extended pipeline feeding the character-trigram path:
/// normalize_basic, then collapse_repeats, then delimit, per token.
std::vector<std::string> preprocess_for_lstm(std::string_view text,
                                             const NormalizeConfig& config);

/// Reads a stopword file: UTF-8, one word per line. Words are lowercased.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

}  // namespace cmsent
