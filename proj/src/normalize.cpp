#include "cmsent/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "cmsent/errors.hpp"
#include "cmsent/utf8.hpp"

namespace cmsent {

namespace {

bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x85: case 0xA0: case 0x1680: case 0x3000:
      return true;
    default:
      return false;
  }
}

char32_t lower_ascii(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  return cp;
}

}  // namespace

NormalizeConfig::NormalizeConfig() : max_repeat(2) {
  for (char32_t cp = 0x21; cp <= 0x7E; ++cp) {
    bool alnum = (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
                 (cp >= U'A' && cp <= U'Z');
    if (!alnum) punctuation.insert(cp);
  }
  for (char32_t cp = 0x2000; cp <= 0x206F; ++cp) {
    punctuation.insert(cp);
  }
}

std::vector<std::string> normalize_basic(std::string_view text,
                                         const NormalizeConfig& config) {
  std::vector<char32_t> cps = utf8::decode(text);
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      if (!config.stopwords.contains(current)) tokens.push_back(current);
      current.clear();
    }
  };
  for (char32_t cp : cps) {
    if (is_space_cp(cp) || config.punctuation.contains(cp)) {
      flush();
    } else {
      utf8::append(current, lower_ascii(cp));
    }
  }
  flush();
  return tokens;
}

std::string collapse_repeats(std::string_view token, int max_repeat) {
  if (max_repeat < 1) {
    throw ArgumentError("collapse_repeats: max_repeat must be >= 1");
  }
  std::vector<char32_t> cps = utf8::decode(token);
  std::string out;
  out.reserve(token.size());
  int run = 0;
  for (size_t i = 0; i < cps.size(); ++i) {
    run = (i > 0 && cps[i] == cps[i - 1]) ? run + 1 : 1;
    if (run <= max_repeat) utf8::append(out, cps[i]);
  }
  return out;
}

std::string delimit(std::string_view token) {
  if (token.empty()) {
    throw ArgumentError("delimit: token must be non-empty");
  }
  if (token.find('#') != std::string_view::npos) {
    throw ArgumentError("delimit: token contains the delimiter '#': \"" +
                        std::string(token) + "\"");
  }
  std::string out;
  out.reserve(token.size() + 2);
  out.push_back('#');
  out.append(token);
  out.push_back('#');
  return out;
}

std::vector<std::string> preprocess_for_lstm(std::string_view text,
                                             const NormalizeConfig& config) {
  std::vector<std::string> out;
  for (const std::string& token : normalize_basic(text, config)) {
    out.push_back(delimit(collapse_repeats(token, config.max_repeat)));
  }
  return out;
}

std::unordered_set<std::string> load_stopwords(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open stopword file: " + path.string());
  }
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    utf8::decode(line);
    std::transform(line.begin(), line.end(), line.begin(), [](unsigned char ch) {
      return std::tolower(ch);
    });
    if (!line.empty()) words.insert(line);
  }
  return words;
}

}  // namespace cmsent
