#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cmsent/types.hpp"

namespace cmsent {

/// How the two members' probability triples are fused.
enum class EnsembleMode { WeightedLinear, Multiplicative };

const char* mode_name(EnsembleMode mode);
EnsembleMode parse_mode(std::string_view name);

/// (w_a * a + w_b * b) / (w_a + w_b). Weights are the members' development
/// accuracies; they must be nonnegative and not both zero.
ProbTriple combine_weighted_linear(const ProbTriple& a, const ProbTriple& b,
                                   double w_a, double w_b);

/// Entrywise product renormalized to sum 1. When every product entry is zero
/// the result falls back to the uniform distribution and, if given,
/// *uniform_fallback is set.
ProbTriple combine_multiplicative(const ProbTriple& a, const ProbTriple& b,
                                  bool* uniform_fallback = nullptr);

/// Fusion recipe plus references to the member artifacts. The paths are
/// stored relative to the manifest file's directory.
struct EnsembleModel {
  EnsembleMode mode = EnsembleMode::Multiplicative;
  double weight_mnb = 0.0;   // dev accuracy of the word-ngram member
  double weight_lstm = 0.0;  // dev accuracy of the character member
  std::string mnb_path = "mnb.json";
  std::string lstm_path = "lstm.bin";
  uint64_t seed = 0;
  std::string config_hash = "0000000000000000";

  ProbTriple combine(const ProbTriple& mnb_probs, const ProbTriple& lstm_probs,
                     bool* uniform_fallback = nullptr) const;
};

/// JSON manifest with a fixed key order, so saves are byte-deterministic.
void save_ensemble(const std::filesystem::path& path,
                   const EnsembleModel& model);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace cmsent
