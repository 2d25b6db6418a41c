#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cmsent/corpus.hpp"
#include "cmsent/features.hpp"
#include "cmsent/normalize.hpp"
#include "cmsent/rng.hpp"
#include "cmsent/types.hpp"

namespace cmsent {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Direction { Unidirectional, Bidirectional };

/// Training hyperparameters. The defaults are the tuned configuration:
/// batch 32, max length 100, embedding 128, 64 cells, learning rate 0.01,
/// Adagrad.
struct LstmConfig {
  int batch_size = 32;
  int max_len = 100;
  int embed_dim = 128;
  int hidden_dim = 64;
  double learning_rate = 0.01;
  int epochs = 30;
  uint64_t seed = 0;
  double adagrad_epsilon = 1e-8;
  std::optional<double> clip_norm = 5.0;  // global-norm clip; nullopt disables
  Direction direction = Direction::Unidirectional;
};

/// Gate order used everywhere (parameter arrays, serialization).
inline constexpr size_t kInputGate = 0;
inline constexpr size_t kForgetGate = 1;
inline constexpr size_t kCellGate = 2;
inline constexpr size_t kOutputGate = 3;
inline constexpr size_t kNumGates = 4;

/// One direction's recurrent parameters. Gate pre-activations are
/// z_k = W[k]^T x + U[k]^T h_prev + b[k], so W is embed_dim x hidden_dim and
/// U is hidden_dim x hidden_dim.
struct LstmCell {
  std::array<Mat, kNumGates> W;
  std::array<Mat, kNumGates> U;
  std::array<Vec, kNumGates> b;
};

/// All trainable tensors. The same struct doubles as the gradient bundle and
/// the Adagrad accumulator bundle since the shapes match entry for entry.
struct LstmParams {
  Mat embedding;                 // K x embed_dim
  LstmCell fwd;
  std::optional<LstmCell> bwd;   // present only for bidirectional models
  Mat W_out;                     // head_dim x 3 (head_dim = hidden or 2*hidden)
  Vec b_out;                     // 3

  bool bidirectional() const { return bwd.has_value(); }
  int vocab_rows() const { return static_cast<int>(embedding.rows()); }
  int embed_dim() const { return static_cast<int>(embedding.cols()); }
  int hidden_dim() const { return static_cast<int>(fwd.b[0].size()); }
  bool all_finite() const;
};

using LstmGradients = LstmParams;

struct AdagradState {
  LstmParams accumulators;  // entrywise nondecreasing over training
};

/// Glorot-uniform gate weights, zero biases with forget bias 1, embedding
/// uniform in +/-0.05. All draws come from the given generator in a fixed
/// order, so initialization is reproducible.
LstmParams init_lstm_params(int vocab_size, const LstmConfig& config,
                            SplitMix64& rng);
LstmParams make_zero_like(const LstmParams& params);

/// Max-subtracted softmax; throws ArgumentError on non-finite logits.
ProbTriple softmax(const ProbTriple& logits);

/// Categorical cross-entropy -sum t_i log(o_i + 1e-12). The floor guards
/// log(0), so the result is bounded by -log(1e-12).
double cross_entropy(const ProbTriple& target_onehot, const ProbTriple& probs);

ProbTriple onehot(SentimentClass c);

struct StepState {
  Vec h;
  Vec c;
};

/// One LSTM step: i = sigm(zi), f = sigm(zf), g = tanh(zg), o = sigm(zo),
/// c = f.*c_prev + i.*g, h = o.*tanh(c).
StepState lstm_step(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                    const LstmCell& cell);

/// Activations recorded for one processed timestep.
struct StepCache {
  int32_t index;  // embedding row
  Vec x, i, f, g, o, c, h, tanh_c;
};

struct ForwardCache {
  std::vector<StepCache> fwd_steps;  // masked timesteps only, forward order
  std::vector<StepCache> bwd_steps;  // reverse pass, processing order
  Vec head_input;                    // last real hidden state(s); zero when empty
  Vec logits;
  ProbTriple probs{};
  int embed_dim = 0;
  int hidden_dim = 0;
  bool bidirectional = false;
};

/// Runs the recurrence over the masked timesteps only; padded positions are
/// never touched. Zero-length sequences use h = 0, so probs = softmax(b_out).
ForwardCache forward(const TrigramSequence& seq, const LstmParams& params);

/// Exact gradients of cross_entropy(target, forward(seq)) via
/// backpropagation through time, accumulated into `grads` (embedding rows
/// actually used are recorded in `used_rows` when given). Throws
/// ArgumentError when the cache does not match the parameters.
void accumulate_backward(const LstmParams& params, const ForwardCache& cache,
                         SentimentClass target, LstmGradients& grads,
                         std::vector<int32_t>* used_rows = nullptr);
LstmGradients backward(const LstmParams& params, const ForwardCache& cache,
                       SentimentClass target);

/// state += grad.^2; param -= lr * grad ./ (sqrt(state) + eps).
/// Throws ArgumentError on shape mismatch.
void adagrad_update(Mat& param, const Mat& grad, Mat& accum, double lr,
                    double eps);
void adagrad_update(Vec& param, const Vec& grad, Vec& accum, double lr,
                    double eps);

/// Deliberate gradient corruption for negative-control tests.
enum class GradCheckFault { None, ZeroUGateGrads };

struct GradCheckOptions {
  double epsilon = 1e-5;
  size_t exhaustive_limit = 5000;  // check every coordinate below this total
  size_t sample_size = 2000;       // coordinates sampled otherwise
  uint64_t seed = 12345;
  GradCheckFault fault = GradCheckFault::None;
};

/// Central finite-difference check of backward(). Returns
/// max |a - n| / max(|a| + |n|, 1e-8) over the checked coordinates.
double gradient_check(const LstmParams& params, const TrigramSequence& seq,
                      SentimentClass target, const GradCheckOptions& opts = {});

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct LstmTrainResult {
  LstmParams params;  // snapshot from the best dev-accuracy epoch
  std::vector<EpochStats> log;
  int best_epoch = 0;  // 1-based; equals the final epoch when dev is empty
  double best_dev_accuracy = 0.0;
};

/// Deterministic mini-batch training: seeded init, seeded epoch shuffles,
/// per-batch mean gradients, optional global-norm clipping, Adagrad updates.
/// The last partial batch is kept. Throws TrainingError with epoch/batch
/// diagnostics when the loss or a parameter turns non-finite.
LstmTrainResult train_lstm(const std::vector<LabeledExample>& train,
                           const std::vector<LabeledExample>& dev,
                           const TrigramVocabulary& vocab,
                           const LstmConfig& config,
                           const NormalizeConfig& normalize_config);

ProbTriple predict_proba_lstm(const LstmParams& params,
                              const TrigramVocabulary& vocab,
                              std::string_view text,
                              const NormalizeConfig& normalize_config,
                              int max_len = 100);

/// A trained model plus everything inference needs.
struct LstmArtifact {
  LstmParams params;
  TrigramVocabulary vocab;
  int max_len = 100;
  uint64_t seed = 0;
  std::string config_hash = "0000000000000000";  // 16 hex chars
};

/// Binary container: header {magic "CMSL", version, flags, K, embed_dim,
/// hidden_dim, class count, max_len, seed, config hash}, little-endian
/// float64 tensors in a fixed documented order, the trigram vocabulary in
/// its text format, and a CRC-32 trailer over the whole payload.
void save_lstm(const std::filesystem::path& path, const LstmArtifact& artifact);
LstmArtifact load_lstm(const std::filesystem::path& path);

}  // namespace cmsent
