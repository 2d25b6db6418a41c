#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/mnb.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/types.hpp"

namespace cmsent::testsupport {

/// Brute-force reference for the smoothed log-posterior. Everything — ngram
/// counting, class totals, the shared vocabulary, the smoothed conditionals —
/// is recomputed here with naive loops and ordered containers, independent of
/// the library's bookkeeping, so the two implementations can only agree by
/// computing the same quantity.
struct OracleDoc {
  std::vector<std::string> tokens;
  size_t label = 0;  // class index in the fixed class order
};

inline std::map<std::string, int64_t> oracle_ngrams(
    const std::vector<std::string>& tokens, bool unigrams, bool bigrams) {
  std::map<std::string, int64_t> counts;
  if (unigrams) {
    for (const std::string& token : tokens) ++counts[token];
  }
  if (bigrams) {
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
      ++counts[tokens[i] + " " + tokens[i + 1]];
    }
  }
  return counts;
}

/// log P(c) + sum_t n_t * log((count(t,c) + alpha) / (T_c + alpha |V|)),
/// skipping query terms outside the training vocabulary; -inf for classes
/// with no training documents.
inline ProbTriple oracle_scores(const std::vector<OracleDoc>& train,
                                const std::map<std::string, int64_t>& query,
                                double alpha, bool unigrams, bool bigrams) {
  std::array<int64_t, kNumClasses> n_docs{};
  std::array<int64_t, kNumClasses> totals{};
  std::map<std::string, std::array<int64_t, kNumClasses>> counts;
  std::set<std::string> vocab;
  for (const OracleDoc& doc : train) {
    ++n_docs[doc.label];
    for (const auto& [ngram, n] : oracle_ngrams(doc.tokens, unigrams, bigrams)) {
      counts[ngram][doc.label] += n;
      totals[doc.label] += n;
      vocab.insert(ngram);
    }
  }
  int64_t n_total = 0;
  for (int64_t n : n_docs) n_total += n;

  ProbTriple scores{};
  for (size_t c = 0; c < kNumClasses; ++c) {
    if (n_docs[c] == 0) {
      scores[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double s = std::log(static_cast<double>(n_docs[c]) /
                        static_cast<double>(n_total));
    for (const auto& [ngram, n] : query) {
      if (vocab.count(ngram) == 0) continue;
      const auto it = counts.find(ngram);
      const int64_t in_class = it == counts.end() ? 0 : it->second[c];
      const double p =
          (static_cast<double>(in_class) + alpha) /
          (static_cast<double>(totals[c]) +
           alpha * static_cast<double>(vocab.size()));
      s += static_cast<double>(n) * std::log(p);
    }
    scores[c] = s;
  }
  return scores;
}

/// Randomized comparison harness: tiny corpora (at most 5 docs over a pool
/// small enough to keep the ngram vocabulary at 6 or fewer entries), random
/// alpha, random query — the trained model's scores must match the oracle.
/// Returns the worst absolute difference over all finite scores; infinity
/// signals a finite-vs-infinite disagreement.
inline double run_oracle_trials(int trials, uint64_t seed) {
  SplitMix64 rng(seed);
  const std::vector<std::string> uni_pool = {"aa", "bb", "cc",
                                             "dd", "ee", "ff"};
  const std::vector<std::string> bi_pool = {"aa", "bb"};
  const double alphas[] = {0.3, 0.5, 1.0, 2.0};

  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const bool bigrams = rng.next_below(2) == 1;
    const auto& pool = bigrams ? bi_pool : uni_pool;
    const double alpha = rng.next_below(4) == 0 ? rng.next_uniform(0.05, 3.0)
                                                : alphas[rng.next_below(4)];

    std::vector<OracleDoc> docs;
    std::vector<LabeledExample> examples;
    const int n_docs = 1 + static_cast<int>(rng.next_below(5));
    for (int d = 0; d < n_docs; ++d) {
      OracleDoc doc;
      doc.label = rng.next_below(kNumClasses);
      const int n_tokens = 1 + static_cast<int>(rng.next_below(4));
      std::string text;
      for (int i = 0; i < n_tokens; ++i) {
        doc.tokens.push_back(pool[rng.next_below(pool.size())]);
        if (!text.empty()) text += ' ';
        text += doc.tokens.back();
      }
      examples.push_back({text, kClassOrder[doc.label]});
      docs.push_back(std::move(doc));
    }

    const MnbModel model = train_mnb(examples, NormalizeConfig(),
                                     {true, bigrams}, alpha);

    std::vector<std::string> q_tokens;
    const int n_query = static_cast<int>(rng.next_below(4));
    for (int i = 0; i < n_query; ++i) {
      // "zz" is never in the pool, exercising the unknown-term skip.
      q_tokens.push_back(rng.next_below(5) == 0
                             ? std::string("zz")
                             : pool[rng.next_below(pool.size())]);
    }
    const auto query = oracle_ngrams(q_tokens, true, bigrams);
    NgramCounts doc_counts;
    for (const auto& [ngram, n] : query) {
      doc_counts.counts[ngram] = n;
      doc_counts.total += n;
    }

    const ProbTriple scores = score_log_posterior(model, doc_counts);
    const ProbTriple expected = oracle_scores(docs, query, alpha, true, bigrams);
    for (size_t c = 0; c < kNumClasses; ++c) {
      const bool lib_inf = std::isinf(scores[c]);
      const bool ref_inf = std::isinf(expected[c]);
      if (lib_inf || ref_inf) {
        if (lib_inf != ref_inf) {
          return std::numeric_limits<double>::infinity();
        }
        continue;
      }
      worst = std::max(worst, std::abs(scores[c] - expected[c]));
    }
  }
  return worst;
}

}  // namespace cmsent::testsupport
