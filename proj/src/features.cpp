#include "cmsent/features.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cmsent/errors.hpp"
#include "cmsent/utf8.hpp"

namespace cmsent {

NgramCounts extract_word_ngrams(const std::vector<std::string>& tokens,
                                const NgramOrders& orders) {
  NgramCounts out;
  if (orders.unigrams) {
    for (const auto& tok : tokens) {
      ++out.counts[tok];
      ++out.total;
    }
  }
  if (orders.bigrams && tokens.size() >= 2) {
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
      ++out.counts[tokens[i] + " " + tokens[i + 1]];
      ++out.total;
    }
  }
  return out;
}

std::vector<std::string> char_trigrams(std::string_view delimited) {
  std::vector<char32_t> cps = utf8::decode(delimited);
  if (cps.size() < 3) {
    throw ArgumentError("char_trigrams: input shorter than 3 characters: \"" +
                        std::string(delimited) + "\"");
  }
  std::vector<std::string> grams;
  grams.reserve(cps.size() - 2);
  for (size_t i = 0; i + 2 < cps.size(); ++i) {
    grams.push_back(utf8::encode(cps, i, 3));
  }
  return grams;
}

TrigramVocabulary build_trigram_vocab(const std::vector<std::string>& train_texts,
                                      const NormalizeConfig& config) {
  if (train_texts.empty()) {
    throw ArgumentError("build_trigram_vocab: train_texts must be non-empty");
  }
  TrigramVocabulary vocab;
  for (const auto& text : train_texts) {
    for (const auto& word : preprocess_for_lstm(text, config)) {
      for (auto& gram : char_trigrams(word)) {
        if (vocab.index_of.emplace(gram, vocab.size()).second) {
          vocab.by_index.push_back(std::move(gram));
        }
      }
    }
  }
  if (vocab.by_index.empty()) {
    throw ArgumentError(
        "build_trigram_vocab: no trigrams (all texts empty after normalization)");
  }
  return vocab;
}

TrigramSequence encode_sequence(std::string_view text,
                                const TrigramVocabulary& vocab,
                                const NormalizeConfig& config, int max_len,
                                OovPolicy oov) {
  if (vocab.by_index.empty()) {
    throw ArgumentError("encode_sequence: vocabulary is empty");
  }
  if (max_len < 1) {
    throw ArgumentError("encode_sequence: max_len must be >= 1");
  }
  TrigramSequence seq;
  seq.indices.assign(static_cast<size_t>(max_len), kPadIndex);
  seq.mask.assign(static_cast<size_t>(max_len), 0);
  for (const auto& word : preprocess_for_lstm(text, config)) {
    if (seq.length == max_len) break;
    for (const auto& gram : char_trigrams(word)) {
      if (seq.length == max_len) break;
      auto it = vocab.index_of.find(gram);
      int32_t index;
      if (it != vocab.index_of.end()) {
        index = it->second;
      } else if (oov == OovPolicy::MapToUnk) {
        index = vocab.size();
      } else {
        continue;
      }
      seq.indices[static_cast<size_t>(seq.length)] = index;
      seq.mask[static_cast<size_t>(seq.length)] = 1;
      ++seq.length;
    }
  }
  return seq;
}

std::string vocab_to_text(const TrigramVocabulary& vocab) {
  std::string out;
  for (int32_t i = 0; i < vocab.size(); ++i) {
    out += vocab.by_index[static_cast<size_t>(i)];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

TrigramVocabulary vocab_from_text(std::string_view text) {
  TrigramVocabulary vocab;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, (nl == std::string_view::npos ? text.size() : nl) - pos);
    pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": expected `trigram<TAB>index`");
    }
    std::string gram(line.substr(0, tab));
    std::string_view index_str = line.substr(tab + 1);
    int32_t index = -1;
    auto [ptr, ec] = std::from_chars(index_str.data(),
                                     index_str.data() + index_str.size(), index);
    if (ec != std::errc() || ptr != index_str.data() + index_str.size() ||
        index != vocab.size()) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": indices must be consecutive from 0");
    }
    if (utf8::decode(gram).size() != 3) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": key is not a 3-character trigram");
    }
    if (!vocab.index_of.emplace(gram, index).second) {
      throw ParseError("vocabulary line " + std::to_string(line_no) +
                       ": duplicate trigram");
    }
    vocab.by_index.push_back(std::move(gram));
  }
  return vocab;
}

void save_trigram_vocab(const std::filesystem::path& path,
                        const TrigramVocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open vocabulary file for writing: " + path.string());
  }
  out << vocab_to_text(vocab);
  if (!out) {
    throw IoError("failed writing vocabulary file: " + path.string());
  }
}

TrigramVocabulary load_trigram_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open vocabulary file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return vocab_from_text(buf.str());
}

}  // namespace cmsent
