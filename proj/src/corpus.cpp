#include "cmsent/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cmsent/errors.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/utf8.hpp"

namespace cmsent {

const char* class_name(SentimentClass c) {
  switch (c) {
    case SentimentClass::Negative: return "negative";
    case SentimentClass::Neutral: return "neutral";
    case SentimentClass::Positive: return "positive";
  }
  return "?";
}

std::optional<SentimentClass> parse_class_label(std::string_view token) {
  std::string lower(token);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "negative" || lower == "-1") return SentimentClass::Negative;
  if (lower == "neutral" || lower == "0") return SentimentClass::Neutral;
  if (lower == "positive" || lower == "1") return SentimentClass::Positive;
  return std::nullopt;
}

int argmax_class(const ProbTriple& values) {
  size_t best = 0;
  for (size_t i = 1; i < kNumClasses; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

namespace {

std::string_view trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw IoError("failed reading dataset file: " + path.string());
  }
  std::string content = std::move(buf).str();
  utf8::decode(content);  // whole-file validation, errors name the byte offset

  std::vector<LabeledExample> examples;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= content.size()) {
    size_t nl = content.find('\n', pos);
    std::string_view line(content.data() + pos,
                          (nl == std::string::npos ? content.size() : nl) - pos);
    pos = (nl == std::string::npos) ? content.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected `text<TAB>label`");
    }
    std::string_view text = trim(line.substr(0, tab));
    std::string_view label_token = trim(line.substr(tab + 1));
    auto label = parse_class_label(label_token);
    if (!label) {
      throw ParseError("line " + std::to_string(line_no) + ": unknown label \"" +
                       std::string(label_token) + "\"");
    }
    if (text.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty text field");
    }
    examples.push_back({std::string(text), *label});
  }
  return examples;
}

namespace {

struct SplitSizes {
  size_t train;
  size_t dev;
};

SplitSizes split_sizes(size_t n) {
  auto train = static_cast<size_t>(std::llround(0.70 * static_cast<double>(n)));
  auto dev = static_cast<size_t>(std::llround(0.10 * static_cast<double>(n)));
  if (train > n) train = n;
  if (train + dev > n) dev = n - train;
  return {train, dev};
}

void append_sliced(const std::vector<LabeledExample>& shuffled,
                   DatasetSplit& out) {
  auto [n_train, n_dev] = split_sizes(shuffled.size());
  out.train.insert(out.train.end(), shuffled.begin(), shuffled.begin() + n_train);
  out.dev.insert(out.dev.end(), shuffled.begin() + n_train,
                 shuffled.begin() + n_train + n_dev);
  out.test.insert(out.test.end(), shuffled.begin() + n_train + n_dev,
                  shuffled.end());
}

}  // namespace

DatasetSplit split_dataset(const std::vector<LabeledExample>& examples,
                           uint64_t seed) {
  if (examples.empty()) {
    throw ArgumentError("split_dataset: examples must be non-empty");
  }
  std::vector<LabeledExample> shuffled = examples;
  SplitMix64 rng(seed);
  fisher_yates_shuffle(shuffled, rng);
  DatasetSplit split;
  split.seed = seed;
  append_sliced(shuffled, split);
  return split;
}

DatasetSplit split_dataset_stratified(const std::vector<LabeledExample>& examples,
                                      uint64_t seed) {
  if (examples.empty()) {
    throw ArgumentError("split_dataset: examples must be non-empty");
  }
  DatasetSplit split;
  split.seed = seed;
  SplitMix64 rng(seed);
  for (SentimentClass c : kClassOrder) {
    std::vector<LabeledExample> group;
    for (const auto& ex : examples) {
      if (ex.label == c) group.push_back(ex);
    }
    if (group.empty()) continue;
    fisher_yates_shuffle(group, rng);
    append_sliced(group, split);
  }
  return split;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<LabeledExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open file for writing: " + path.string());
  }
  for (const auto& ex : examples) {
    out << ex.text << '\t' << class_name(ex.label) << '\n';
  }
  if (!out) {
    throw IoError("failed writing file: " + path.string());
  }
}

}  // namespace cmsent
