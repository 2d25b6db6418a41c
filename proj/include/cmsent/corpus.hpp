#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cmsent/types.hpp"

namespace cmsent {

struct LabeledExample {
  std::string text;  // non-empty after trimming
  SentimentClass label;

  bool operator==(const LabeledExample&) const = default;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
  uint64_t seed = 0;
};

/// Loads a UTF-8 TSV file, one `text<TAB>label` example per non-empty line.
/// Throws IoError when the file cannot be read and ParseError for invalid
/// UTF-8 or malformed lines (the message carries the 1-based line number and
/// the offending label token).
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);

/// Seeded Fisher-Yates shuffle followed by a 70/10/20 slice:
/// |train| = round(0.70 N), |dev| = round(0.10 N), remainder to test.
/// Deterministic given (examples, seed). Throws ArgumentError on empty input.
DatasetSplit split_dataset(const std::vector<LabeledExample>& examples,
                           uint64_t seed);

/// Stratified variant: applies the same shuffle-and-slice rule within each
/// class, then concatenates the slices in class order.
DatasetSplit split_dataset_stratified(const std::vector<LabeledExample>& examples,
                                      uint64_t seed);

/// Writes examples back out in the dataset TSV format.
void save_dataset(const std::filesystem::path& path,
                  const std::vector<LabeledExample>& examples);

}  // namespace cmsent
