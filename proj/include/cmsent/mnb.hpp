#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/features.hpp"
#include "cmsent/normalize.hpp"
#include "cmsent/types.hpp"

namespace cmsent {

/// Multinomial Naive Bayes over word uni/bigram counts with add-alpha
/// (Laplace) smoothing. Conditionals are derived from the stored raw counts,
/// so alpha can be re-specified on load without retraining.
struct MnbModel {
  ProbTriple log_prior{};                      // log(N_c / N); -inf for empty classes
  std::unordered_map<std::string, std::array<int64_t, kNumClasses>> counts;
  std::unordered_map<std::string, ProbTriple> log_cond;
  std::array<int64_t, kNumClasses> class_token_totals{};  // T_c
  std::array<int64_t, kNumClasses> class_doc_counts{};    // N_c
  int64_t n_docs = 0;
  double alpha = 1.0;
  NgramOrders orders;

  // Provenance embedded in the serialized artifact.
  uint64_t seed = 0;
  std::string config_hash;
};

/// Trains the model: log_prior(c) = log(N_c/N) and
/// log_cond(t,c) = log((count(t,c) + alpha) / (T_c + alpha |V|)) with the
/// vocabulary shared across classes. Throws ArgumentError for an empty
/// training set or non-positive alpha.
MnbModel train_mnb(const std::vector<LabeledExample>& train,
                   const NormalizeConfig& config, const NgramOrders& orders,
                   double alpha = 1.0);

/// log_prior(c) + sum over in-vocabulary doc terms of count * log_cond.
/// Ngrams outside the training vocabulary are skipped.
ProbTriple score_log_posterior(const MnbModel& model, const NgramCounts& doc);

/// Softmax of the log-posterior scores, log-sum-exp stabilized. Class order
/// is fixed (Negative, Neutral, Positive).
ProbTriple predict_proba_mnb(const MnbModel& model, std::string_view text,
                             const NormalizeConfig& config);

/// MAP class; ties break to the lowest class index.
SentimentClass predict_mnb(const MnbModel& model, std::string_view text,
                           const NormalizeConfig& config);

/// Versioned JSON artifact: {format, version, alpha, class_order, orders,
/// priors, per-class counts, seed, config_hash}. Serialization is
/// byte-deterministic (vocabulary keys are sorted).
void save_mnb(const std::filesystem::path& path, const MnbModel& model);

/// Loads the artifact and recomputes conditionals from the stored counts.
/// alpha_override, when given, replaces the stored alpha.
MnbModel load_mnb(const std::filesystem::path& path,
                  std::optional<double> alpha_override = std::nullopt);

}  // namespace cmsent
