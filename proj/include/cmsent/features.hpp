#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cmsent/normalize.hpp"

namespace cmsent {

/// Which word-ngram orders go into the MNB feature vector.
struct NgramOrders {
  bool unigrams = true;
  bool bigrams = true;
};

/// Sparse ngram counts of one document. Bigram keys are the two tokens
/// joined by a single space. total is the sum of all counts.
struct NgramCounts {
  std::unordered_map<std::string, int64_t> counts;
  int64_t total = 0;
};

NgramCounts extract_word_ngrams(const std::vector<std::string>& tokens,
                                const NgramOrders& orders);

/// The (|s|-2) contiguous 3-character windows of a delimited token, in
/// order. Characters are Unicode code points. Throws ArgumentError for
/// inputs shorter than 3 characters.
std::vector<std::string> char_trigrams(std::string_view delimited);

/// Bijection between the character trigrams seen in training and [0, K).
/// Indices are assigned in first-occurrence order, so construction is
/// deterministic given the training texts.
struct TrigramVocabulary {
  std::unordered_map<std::string, int32_t> index_of;
  std::vector<std::string> by_index;

  int32_t size() const { return static_cast<int32_t>(by_index.size()); }
};

/// Union of char_trigrams over preprocess_for_lstm of every training text.
/// Throws ArgumentError when the texts are empty or yield no trigrams.
TrigramVocabulary build_trigram_vocab(const std::vector<std::string>& train_texts,
                                      const NormalizeConfig& config);

/// Sentinel index for padded positions; deliberately outside [0, K).
inline constexpr int32_t kPadIndex = -1;

/// Fixed-length trigram index sequence. mask[i] is 1 for the first `length`
/// positions and 0 after; padded positions hold kPadIndex.
struct TrigramSequence {
  std::vector<int32_t> indices;
  std::vector<uint8_t> mask;
  int length = 0;
};

/// What to do with trigrams that are not in the vocabulary at encode time.
/// Drop is the default; Unk maps them to index K and requires an embedding
/// with K+1 rows.
enum class OovPolicy { Drop, MapToUnk };

/// Runs preprocess_for_lstm, concatenates each token's trigrams, keeps the
/// first max_len in-vocabulary indices and pads the tail. Fully-unknown text
/// yields length 0.
TrigramSequence encode_sequence(std::string_view text,
                                const TrigramVocabulary& vocab,
                                const NormalizeConfig& config,
                                int max_len = 100,
                                OovPolicy oov = OovPolicy::Drop);

/// Vocabulary file format: UTF-8 text, one `trigram<TAB>index` per line,
/// sorted by index.
void save_trigram_vocab(const std::filesystem::path& path,
                        const TrigramVocabulary& vocab);
TrigramVocabulary load_trigram_vocab(const std::filesystem::path& path);

/// (De)serializes the vocabulary to the same line format as the file.
std::string vocab_to_text(const TrigramVocabulary& vocab);
TrigramVocabulary vocab_from_text(std::string_view text);

}  // namespace cmsent
