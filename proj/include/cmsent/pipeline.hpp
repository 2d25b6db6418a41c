#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/ensemble.hpp"
#include "cmsent/eval.hpp"
#include "cmsent/lstm.hpp"
#include "cmsent/mnb.hpp"
#include "cmsent/normalize.hpp"

namespace cmsent {

const char* direction_name(Direction direction);
Direction parse_direction(std::string_view name);

/// Every knob of a full run in one place. The canonical JSON form of this
/// struct is hashed into the artifacts, so two artifacts with the same
/// config_hash were produced by identical settings.
struct RunConfig {
  uint64_t seed = 42;
  bool stratify = false;

  // Shared preprocessing.
  int max_repeat = 2;
  std::string stopwords_path;  // empty disables stopword filtering

  // Word-ngram member.
  double alpha = 1.0;
  NgramOrders orders;

  // Character member.
  int batch_size = 32;
  int max_len = 100;
  int embed_dim = 128;
  int hidden_dim = 64;
  double learning_rate = 0.01;
  int epochs = 30;
  std::optional<double> clip_norm = 5.0;
  Direction direction = Direction::Unidirectional;

  // Fusion.
  EnsembleMode mode = EnsembleMode::Multiplicative;

  /// Builds the preprocessing settings; reads the stopword file when set.
  NormalizeConfig normalize_config() const;
  LstmConfig lstm_config() const;
};

/// Parses a JSON config file. Every key is optional and overrides the
/// default; unknown keys are rejected so typos fail loudly.
RunConfig load_run_config(const std::filesystem::path& path);

/// FNV-1a over the canonical JSON dump of the config, as 16 lowercase hex
/// characters.
uint64_t fnv1a64(std::string_view bytes);
std::string config_hash(const RunConfig& config);

enum class ArtifactKind { Mnb, Lstm, Ensemble };

/// Identifies a model file by content: the binary magic for LSTM models,
/// the JSON "format" field otherwise.
ArtifactKind detect_artifact(const std::filesystem::path& path);

/// A loaded artifact of any kind behind one prediction interface. Ensemble
/// manifests pull in their member artifacts relative to the manifest path.
class SentimentModel {
 public:
  static SentimentModel load(const std::filesystem::path& path,
                             const NormalizeConfig& config = NormalizeConfig());

  ArtifactKind kind() const { return kind_; }
  ProbTriple predict_proba(std::string_view text) const;
  SentimentClass predict(std::string_view text) const;

 private:
  SentimentModel() = default;

  ArtifactKind kind_ = ArtifactKind::Mnb;
  NormalizeConfig normalize_;
  std::optional<MnbModel> mnb_;
  std::optional<LstmArtifact> lstm_;
  std::optional<EnsembleModel> manifest_;
};

/// 70/10/20 split honoring config.seed and config.stratify.
DatasetSplit split_corpus(const std::vector<LabeledExample>& examples,
                          const RunConfig& config);

/// Loads the corpus, splits it, and writes train.tsv / dev.tsv / test.tsv
/// into out_dir. Returns the written paths.
std::vector<std::filesystem::path> run_split(
    const std::filesystem::path& data_path,
    const std::filesystem::path& out_dir, const RunConfig& config);

enum class TrainTarget { Mnb, Lstm, Ensemble };

/// Full training driver: split the corpus, write the split files, train the
/// requested member(s), snapshot on dev accuracy, and serialize everything
/// into out_dir (mnb.json / lstm.bin / ensemble.json plus an append-only
/// train_log.jsonl). Returns the written artifact paths.
std::vector<std::filesystem::path> run_train(
    TrainTarget target, const std::filesystem::path& data_path,
    const std::filesystem::path& out_dir, const RunConfig& config);

/// Loads the artifact and scores it on the given examples.
EvalReport evaluate_artifact(const std::filesystem::path& model_path,
                             const std::vector<LabeledExample>& examples,
                             const NormalizeConfig& config = NormalizeConfig(),
                             Averaging averaging = Averaging::Macro);

/// One randomized finite-difference sweep over small model instances,
/// unidirectional and bidirectional. `worst` is the maximum relative
/// difference over all cases and `passed` is simply worst < tolerance;
/// injecting a fault is expected to blow the tolerance and fail the check.
struct GradCheckReport {
  std::vector<double> case_max_rel;
  double worst = 0.0;
  double tolerance = 1e-4;
  bool passed = false;
};

GradCheckReport run_gradient_checks(uint64_t seed,
                                    GradCheckFault fault = GradCheckFault::None,
                                    size_t cases = 8);

}  // namespace cmsent
