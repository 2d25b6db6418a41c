#include "cmsent/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <zlib.h>

#include "cmsent/errors.hpp"

namespace cmsent {

namespace {

constexpr double kLogFloor = 1e-12;
constexpr uint32_t kLstmFormatVersion = 1;
constexpr uint32_t kFlagBidirectional = 1u << 0;
constexpr size_t kConfigHashChars = 16;

Vec sigmoid(const Vec& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

void check_same_shape(const Eigen::Index rows_a, const Eigen::Index cols_a,
                      const Eigen::Index rows_b, const Eigen::Index cols_b,
                      const char* what) {
  if (rows_a != rows_b || cols_a != cols_b) {
    throw ArgumentError(std::string("adagrad_update: shape mismatch for ") +
                        what);
  }
}

}  // namespace

bool LstmParams::all_finite() const {
  auto cell_finite = [](const LstmCell& cell) {
    for (size_t g = 0; g < kNumGates; ++g) {
      if (!cell.W[g].allFinite() || !cell.U[g].allFinite() ||
          !cell.b[g].allFinite()) {
        return false;
      }
    }
    return true;
  };
  if (!embedding.allFinite() || !W_out.allFinite() || !b_out.allFinite()) {
    return false;
  }
  if (!cell_finite(fwd)) return false;
  if (bwd && !cell_finite(*bwd)) return false;
  return true;
}

namespace {

Mat glorot_uniform(int rows, int cols, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = rng.next_uniform(-limit, limit);
    }
  }
  return m;
}

LstmCell init_cell(int embed_dim, int hidden_dim, SplitMix64& rng) {
  LstmCell cell;
  for (size_t g = 0; g < kNumGates; ++g) {
    cell.W[g] = glorot_uniform(embed_dim, hidden_dim, rng);
  }
  for (size_t g = 0; g < kNumGates; ++g) {
    cell.U[g] = glorot_uniform(hidden_dim, hidden_dim, rng);
  }
  for (size_t g = 0; g < kNumGates; ++g) {
    cell.b[g] = Vec::Zero(hidden_dim);
  }
  // Forget bias of 1 keeps early memory open, which matters on small data.
  cell.b[kForgetGate].setConstant(1.0);
  return cell;
}

}  // namespace

LstmParams init_lstm_params(int vocab_size, const LstmConfig& config,
                            SplitMix64& rng) {
  if (vocab_size < 1 || config.embed_dim < 1 || config.hidden_dim < 1) {
    throw ArgumentError("init_lstm_params: dimensions must be positive");
  }
  LstmParams params;
  params.embedding = Mat(vocab_size, config.embed_dim);
  for (int r = 0; r < vocab_size; ++r) {
    for (int c = 0; c < config.embed_dim; ++c) {
      params.embedding(r, c) = rng.next_uniform(-0.05, 0.05);
    }
  }
  params.fwd = init_cell(config.embed_dim, config.hidden_dim, rng);
  int head_dim = config.hidden_dim;
  if (config.direction == Direction::Bidirectional) {
    params.bwd = init_cell(config.embed_dim, config.hidden_dim, rng);
    head_dim *= 2;
  }
  params.W_out = glorot_uniform(head_dim, static_cast<int>(kNumClasses), rng);
  params.b_out = Vec::Zero(static_cast<int>(kNumClasses));
  return params;
}

LstmParams make_zero_like(const LstmParams& params) {
  LstmParams zero;
  zero.embedding = Mat::Zero(params.embedding.rows(), params.embedding.cols());
  auto zero_cell = [](const LstmCell& cell) {
    LstmCell z;
    for (size_t g = 0; g < kNumGates; ++g) {
      z.W[g] = Mat::Zero(cell.W[g].rows(), cell.W[g].cols());
      z.U[g] = Mat::Zero(cell.U[g].rows(), cell.U[g].cols());
      z.b[g] = Vec::Zero(cell.b[g].size());
    }
    return z;
  };
  zero.fwd = zero_cell(params.fwd);
  if (params.bwd) zero.bwd = zero_cell(*params.bwd);
  zero.W_out = Mat::Zero(params.W_out.rows(), params.W_out.cols());
  zero.b_out = Vec::Zero(params.b_out.size());
  return zero;
}

ProbTriple softmax(const ProbTriple& logits) {
  for (double z : logits) {
    if (!std::isfinite(z)) {
      throw ArgumentError("softmax: logits must be finite");
    }
  }
  double max_z = *std::max_element(logits.begin(), logits.end());
  ProbTriple probs{};
  double sum = 0.0;
  for (size_t c = 0; c < kNumClasses; ++c) {
    probs[c] = std::exp(logits[c] - max_z);
    sum += probs[c];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double cross_entropy(const ProbTriple& target_onehot, const ProbTriple& probs) {
  double loss = 0.0;
  for (size_t c = 0; c < kNumClasses; ++c) {
    if (target_onehot[c] != 0.0) {
      loss -= target_onehot[c] * std::log(probs[c] + kLogFloor);
    }
  }
  return loss;
}

ProbTriple onehot(SentimentClass c) {
  ProbTriple t{};
  t[static_cast<size_t>(c)] = 1.0;
  return t;
}

namespace {

/// Fills i, f, g, o, c, h, tanh_c of `s` from s.x and the previous state.
void step_full(const LstmCell& cell, StepCache& s, const Vec& h_prev,
               const Vec& c_prev) {
  std::array<Vec, kNumGates> z;
  for (size_t g = 0; g < kNumGates; ++g) {
    z[g] = cell.W[g].transpose() * s.x + cell.U[g].transpose() * h_prev +
           cell.b[g];
  }
  s.i = sigmoid(z[kInputGate]);
  s.f = sigmoid(z[kForgetGate]);
  s.g = z[kCellGate].array().tanh().matrix();
  s.o = sigmoid(z[kOutputGate]);
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
}

}  // namespace

StepState lstm_step(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                    const LstmCell& cell) {
  if (x.size() != cell.W[0].rows() || h_prev.size() != cell.U[0].rows() ||
      c_prev.size() != cell.b[0].size()) {
    throw ArgumentError("lstm_step: input dimensions do not match the cell");
  }
  StepCache s;
  s.index = -1;
  s.x = x;
  step_full(cell, s, h_prev, c_prev);
  return {s.h, s.c};
}

ForwardCache forward(const TrigramSequence& seq, const LstmParams& params) {
  const int hidden = params.hidden_dim();
  if (seq.length < 0 ||
      static_cast<size_t>(seq.length) > seq.indices.size()) {
    throw ArgumentError("forward: sequence length exceeds the index buffer");
  }
  ForwardCache cache;
  cache.embed_dim = params.embed_dim();
  cache.hidden_dim = hidden;
  cache.bidirectional = params.bidirectional();

  auto run_direction = [&](const LstmCell& cell, bool reverse,
                           std::vector<StepCache>& steps) {
    Vec h = Vec::Zero(hidden);
    Vec c = Vec::Zero(hidden);
    steps.reserve(static_cast<size_t>(seq.length));
    for (int k = 0; k < seq.length; ++k) {
      const int t = reverse ? seq.length - 1 - k : k;
      const int32_t idx = seq.indices[static_cast<size_t>(t)];
      if (idx < 0 || idx >= params.vocab_rows()) {
        throw ArgumentError("forward: trigram index " + std::to_string(idx) +
                            " out of embedding range [0, " +
                            std::to_string(params.vocab_rows()) + ")");
      }
      StepCache s;
      s.index = idx;
      s.x = params.embedding.row(idx).transpose();
      step_full(cell, s, h, c);
      h = s.h;
      c = s.c;
      steps.push_back(std::move(s));
    }
  };

  run_direction(params.fwd, false, cache.fwd_steps);
  if (params.bidirectional()) {
    run_direction(*params.bwd, true, cache.bwd_steps);
  }

  const int head_dim = params.bidirectional() ? 2 * hidden : hidden;
  cache.head_input = Vec::Zero(head_dim);
  if (!cache.fwd_steps.empty()) {
    cache.head_input.head(hidden) = cache.fwd_steps.back().h;
  }
  if (params.bidirectional() && !cache.bwd_steps.empty()) {
    cache.head_input.tail(hidden) = cache.bwd_steps.back().h;
  }

  cache.logits = params.W_out.transpose() * cache.head_input + params.b_out;
  cache.probs =
      softmax({cache.logits[0], cache.logits[1], cache.logits[2]});
  return cache;
}

namespace {

void backprop_direction(const LstmCell& cell,
                        const std::vector<StepCache>& steps, const Vec& dh_last,
                        LstmCell& cell_grads, Mat& embedding_grads,
                        std::vector<int32_t>* used_rows) {
  const Eigen::Index hidden = dh_last.size();
  const Vec zero = Vec::Zero(hidden);
  Vec dh = dh_last;
  Vec dc = Vec::Zero(hidden);
  for (size_t k = steps.size(); k-- > 0;) {
    const StepCache& s = steps[k];
    const Vec& h_prev = k > 0 ? steps[k - 1].h : zero;
    const Vec& c_prev = k > 0 ? steps[k - 1].c : zero;

    const Vec d_o = dh.cwiseProduct(s.tanh_c);
    dc += (dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square()))
              .matrix();
    const Vec d_i = dc.cwiseProduct(s.g);
    const Vec d_g = dc.cwiseProduct(s.i);
    const Vec d_f = dc.cwiseProduct(c_prev);

    std::array<Vec, kNumGates> dz;
    dz[kInputGate] = (d_i.array() * s.i.array() * (1.0 - s.i.array())).matrix();
    dz[kForgetGate] =
        (d_f.array() * s.f.array() * (1.0 - s.f.array())).matrix();
    dz[kCellGate] = (d_g.array() * (1.0 - s.g.array().square())).matrix();
    dz[kOutputGate] =
        (d_o.array() * s.o.array() * (1.0 - s.o.array())).matrix();

    Vec dx = Vec::Zero(s.x.size());
    Vec dh_prev = Vec::Zero(hidden);
    for (size_t g = 0; g < kNumGates; ++g) {
      cell_grads.W[g].noalias() += s.x * dz[g].transpose();
      cell_grads.U[g].noalias() += h_prev * dz[g].transpose();
      cell_grads.b[g] += dz[g];
      dx.noalias() += cell.W[g] * dz[g];
      dh_prev.noalias() += cell.U[g] * dz[g];
    }
    embedding_grads.row(s.index) += dx.transpose();
    if (used_rows) used_rows->push_back(s.index);

    dh = std::move(dh_prev);
    dc = dc.cwiseProduct(s.f);
  }
}

}  // namespace

void accumulate_backward(const LstmParams& params, const ForwardCache& cache,
                         SentimentClass target, LstmGradients& grads,
                         std::vector<int32_t>* used_rows) {
  if (cache.embed_dim != params.embed_dim() ||
      cache.hidden_dim != params.hidden_dim() ||
      cache.bidirectional != params.bidirectional() ||
      cache.head_input.size() != params.W_out.rows()) {
    throw ArgumentError("backward: cache does not match the parameters");
  }
  const int hidden = params.hidden_dim();

  Vec dlogits(static_cast<Eigen::Index>(kNumClasses));
  const ProbTriple target_vec = onehot(target);
  for (size_t c = 0; c < kNumClasses; ++c) {
    dlogits[static_cast<Eigen::Index>(c)] = cache.probs[c] - target_vec[c];
  }

  grads.W_out.noalias() += cache.head_input * dlogits.transpose();
  grads.b_out += dlogits;
  const Vec dhead = params.W_out * dlogits;

  if (!params.bidirectional()) {
    if (!cache.fwd_steps.empty()) {
      backprop_direction(params.fwd, cache.fwd_steps, dhead, grads.fwd,
                         grads.embedding, used_rows);
    }
  } else {
    if (!cache.fwd_steps.empty()) {
      backprop_direction(params.fwd, cache.fwd_steps, dhead.head(hidden),
                         grads.fwd, grads.embedding, used_rows);
    }
    if (!cache.bwd_steps.empty()) {
      backprop_direction(*params.bwd, cache.bwd_steps, dhead.tail(hidden),
                         *grads.bwd, grads.embedding, used_rows);
    }
  }
}

LstmGradients backward(const LstmParams& params, const ForwardCache& cache,
                       SentimentClass target) {
  LstmGradients grads = make_zero_like(params);
  accumulate_backward(params, cache, target, grads);
  return grads;
}

void adagrad_update(Mat& param, const Mat& grad, Mat& accum, double lr,
                    double eps) {
  check_same_shape(param.rows(), param.cols(), grad.rows(), grad.cols(),
                   "param/grad");
  check_same_shape(param.rows(), param.cols(), accum.rows(), accum.cols(),
                   "param/accum");
  accum.array() += grad.array().square();
  param.array() -= lr * grad.array() / (accum.array().sqrt() + eps);
}

void adagrad_update(Vec& param, const Vec& grad, Vec& accum, double lr,
                    double eps) {
  check_same_shape(param.size(), 1, grad.size(), 1, "param/grad");
  check_same_shape(param.size(), 1, accum.size(), 1, "param/accum");
  accum.array() += grad.array().square();
  param.array() -= lr * grad.array() / (accum.array().sqrt() + eps);
}

namespace {

struct TensorView {
  double* data;
  size_t size;
};

std::vector<TensorView> tensor_views(LstmParams& p) {
  std::vector<TensorView> views;
  auto add = [&](auto& tensor) {
    views.push_back({tensor.data(), static_cast<size_t>(tensor.size())});
  };
  add(p.embedding);
  auto add_cell = [&](LstmCell& cell) {
    for (auto& m : cell.W) add(m);
    for (auto& m : cell.U) add(m);
    for (auto& v : cell.b) add(v);
  };
  add_cell(p.fwd);
  if (p.bwd) add_cell(*p.bwd);
  add(p.W_out);
  add(p.b_out);
  return views;
}

// The finite-difference side of the gradient check runs in long double.
// With the loss evaluated in double, its ~1 ulp rounding noise divided by
// 2 epsilon is around 1e-11, which a coordinate with a true gradient near
// 1e-9 turns into a relative difference far above the 1e-4 bound even when
// the analytic gradient is exact. Extended precision pushes that noise
// floor three orders of magnitude down; the check formula is unchanged.
using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct CellL {
  std::array<MatL, kNumGates> W;
  std::array<MatL, kNumGates> U;
  std::array<VecL, kNumGates> b;
};

struct ParamsL {
  MatL embedding;
  CellL fwd;
  std::optional<CellL> bwd;
  MatL W_out;
  VecL b_out;
};

ParamsL to_long_double(const LstmParams& p) {
  ParamsL out;
  auto cell = [](const LstmCell& c) {
    CellL z;
    for (size_t g = 0; g < kNumGates; ++g) {
      z.W[g] = c.W[g].cast<long double>();
      z.U[g] = c.U[g].cast<long double>();
      z.b[g] = c.b[g].cast<long double>();
    }
    return z;
  };
  out.embedding = p.embedding.cast<long double>();
  out.fwd = cell(p.fwd);
  if (p.bwd) out.bwd = cell(*p.bwd);
  out.W_out = p.W_out.cast<long double>();
  out.b_out = p.b_out.cast<long double>();
  return out;
}

struct TensorViewL {
  long double* data;
  size_t size;
};

// Same tensor order as tensor_views, so (tensor, offset) pairs line up.
std::vector<TensorViewL> tensor_views_l(ParamsL& p) {
  std::vector<TensorViewL> views;
  auto add = [&](auto& tensor) {
    views.push_back({tensor.data(), static_cast<size_t>(tensor.size())});
  };
  add(p.embedding);
  auto add_cell = [&](CellL& cell) {
    for (auto& m : cell.W) add(m);
    for (auto& m : cell.U) add(m);
    for (auto& v : cell.b) add(v);
  };
  add_cell(p.fwd);
  if (p.bwd) add_cell(*p.bwd);
  add(p.W_out);
  add(p.b_out);
  return views;
}

long double loss_long_double(const TrigramSequence& seq, const ParamsL& p,
                             SentimentClass target) {
  const Eigen::Index hidden = p.fwd.b[0].size();
  auto run_direction = [&](const CellL& cell, bool reverse) {
    VecL h = VecL::Zero(hidden);
    VecL c = VecL::Zero(hidden);
    for (int k = 0; k < seq.length; ++k) {
      const int t = reverse ? seq.length - 1 - k : k;
      const auto idx = seq.indices[static_cast<size_t>(t)];
      const VecL x = p.embedding.row(idx).transpose();
      std::array<VecL, kNumGates> z;
      for (size_t g = 0; g < kNumGates; ++g) {
        z[g] = cell.W[g].transpose() * x + cell.U[g].transpose() * h + cell.b[g];
      }
      const VecL i = (1.0L + (-z[kInputGate].array()).exp()).inverse().matrix();
      const VecL f = (1.0L + (-z[kForgetGate].array()).exp()).inverse().matrix();
      const VecL g = z[kCellGate].array().tanh().matrix();
      const VecL o = (1.0L + (-z[kOutputGate].array()).exp()).inverse().matrix();
      c = f.cwiseProduct(c) + i.cwiseProduct(g);
      h = o.cwiseProduct(c.array().tanh().matrix());
    }
    return h;
  };

  const Eigen::Index head_dim = p.bwd ? 2 * hidden : hidden;
  VecL head = VecL::Zero(head_dim);
  if (seq.length > 0) {
    head.head(hidden) = run_direction(p.fwd, false);
    if (p.bwd) head.tail(hidden) = run_direction(*p.bwd, true);
  }
  const VecL logits = p.W_out.transpose() * head + p.b_out;

  long double max_z = logits[0];
  for (Eigen::Index c = 1; c < logits.size(); ++c) max_z = std::max(max_z, logits[c]);
  long double sum = 0.0L;
  std::array<long double, kNumClasses> probs{};
  for (size_t c = 0; c < kNumClasses; ++c) {
    probs[c] = std::exp(logits[static_cast<Eigen::Index>(c)] - max_z);
    sum += probs[c];
  }
  return -std::log(probs[static_cast<size_t>(target)] / sum +
                   static_cast<long double>(kLogFloor));
}

}  // namespace

double gradient_check(const LstmParams& params, const TrigramSequence& seq,
                      SentimentClass target, const GradCheckOptions& opts) {
  if (!(opts.epsilon > 0.0)) {
    throw ArgumentError("gradient_check: epsilon must be positive");
  }
  LstmGradients analytic = backward(params, forward(seq, params), target);
  if (opts.fault == GradCheckFault::ZeroUGateGrads) {
    for (auto& m : analytic.fwd.U) m.setZero();
    if (analytic.bwd) {
      for (auto& m : analytic.bwd->U) m.setZero();
    }
  }

  ParamsL work = to_long_double(params);
  auto param_views = tensor_views_l(work);
  auto grad_views = tensor_views(analytic);

  size_t total = 0;
  for (const auto& v : param_views) total += v.size;

  std::vector<std::pair<size_t, size_t>> coords;  // (tensor, offset)
  if (total < opts.exhaustive_limit) {
    for (size_t t = 0; t < param_views.size(); ++t) {
      for (size_t i = 0; i < param_views[t].size; ++i) coords.emplace_back(t, i);
    }
  } else {
    SplitMix64 rng(opts.seed);
    for (size_t n = 0; n < opts.sample_size; ++n) {
      size_t flat = static_cast<size_t>(rng.next_below(total));
      size_t t = 0;
      while (flat >= param_views[t].size) {
        flat -= param_views[t].size;
        ++t;
      }
      coords.emplace_back(t, flat);
    }
  }

  const auto epsilon = static_cast<long double>(opts.epsilon);
  double max_rel = 0.0;
  for (auto [t, i] : coords) {
    long double* slot = param_views[t].data + i;
    const long double original = *slot;
    *slot = original + epsilon;
    const long double loss_plus = loss_long_double(seq, work, target);
    *slot = original - epsilon;
    const long double loss_minus = loss_long_double(seq, work, target);
    *slot = original;
    const double numeric =
        static_cast<double>((loss_plus - loss_minus) / (2.0L * epsilon));
    const double analytic_value = grad_views[t].data[i];
    const double rel = std::abs(analytic_value - numeric) /
                       std::max(std::abs(analytic_value) + std::abs(numeric),
                                1e-8);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

namespace {

struct EncodedExample {
  TrigramSequence seq;
  SentimentClass label;
};

double global_grad_norm(const LstmGradients& grads,
                        const std::vector<int32_t>& rows) {
  double sq = 0.0;
  for (int32_t r : rows) sq += grads.embedding.row(r).squaredNorm();
  auto add_cell = [&](const LstmCell& cell) {
    for (const auto& m : cell.W) sq += m.squaredNorm();
    for (const auto& m : cell.U) sq += m.squaredNorm();
    for (const auto& v : cell.b) sq += v.squaredNorm();
  };
  add_cell(grads.fwd);
  if (grads.bwd) add_cell(*grads.bwd);
  sq += grads.W_out.squaredNorm();
  sq += grads.b_out.squaredNorm();
  return std::sqrt(sq);
}

void scale_grads(LstmGradients& grads, const std::vector<int32_t>& rows,
                 double factor) {
  for (int32_t r : rows) grads.embedding.row(r) *= factor;
  auto scale_cell = [&](LstmCell& cell) {
    for (auto& m : cell.W) m *= factor;
    for (auto& m : cell.U) m *= factor;
    for (auto& v : cell.b) v *= factor;
  };
  scale_cell(grads.fwd);
  if (grads.bwd) scale_cell(*grads.bwd);
  grads.W_out *= factor;
  grads.b_out *= factor;
}

void apply_adagrad(LstmParams& params, const LstmGradients& grads,
                   AdagradState& state, const std::vector<int32_t>& rows,
                   double lr, double eps) {
  for (int32_t r : rows) {
    auto g = grads.embedding.row(r).array();
    state.accumulators.embedding.row(r).array() += g.square();
    params.embedding.row(r).array() -=
        lr * g / (state.accumulators.embedding.row(r).array().sqrt() + eps);
  }
  auto& acc = state.accumulators;
  for (size_t g = 0; g < kNumGates; ++g) {
    adagrad_update(params.fwd.W[g], grads.fwd.W[g], acc.fwd.W[g], lr, eps);
    adagrad_update(params.fwd.U[g], grads.fwd.U[g], acc.fwd.U[g], lr, eps);
    adagrad_update(params.fwd.b[g], grads.fwd.b[g], acc.fwd.b[g], lr, eps);
  }
  if (params.bwd) {
    for (size_t g = 0; g < kNumGates; ++g) {
      adagrad_update(params.bwd->W[g], grads.bwd->W[g], acc.bwd->W[g], lr, eps);
      adagrad_update(params.bwd->U[g], grads.bwd->U[g], acc.bwd->U[g], lr, eps);
      adagrad_update(params.bwd->b[g], grads.bwd->b[g], acc.bwd->b[g], lr, eps);
    }
  }
  adagrad_update(params.W_out, grads.W_out, acc.W_out, lr, eps);
  adagrad_update(params.b_out, grads.b_out, acc.b_out, lr, eps);
}

void zero_grads(LstmGradients& grads, const std::vector<int32_t>& rows) {
  for (int32_t r : rows) grads.embedding.row(r).setZero();
  auto zero_cell = [&](LstmCell& cell) {
    for (auto& m : cell.W) m.setZero();
    for (auto& m : cell.U) m.setZero();
    for (auto& v : cell.b) v.setZero();
  };
  zero_cell(grads.fwd);
  if (grads.bwd) zero_cell(*grads.bwd);
  grads.W_out.setZero();
  grads.b_out.setZero();
}

}  // namespace

LstmTrainResult train_lstm(const std::vector<LabeledExample>& train,
                           const std::vector<LabeledExample>& dev,
                           const TrigramVocabulary& vocab,
                           const LstmConfig& config,
                           const NormalizeConfig& normalize_config) {
  if (train.empty()) {
    throw ArgumentError("train_lstm: training set must be non-empty");
  }
  if (vocab.by_index.empty()) {
    throw ArgumentError("train_lstm: vocabulary must be non-empty");
  }
  if (config.batch_size < 1 || config.epochs < 1 || config.max_len < 1) {
    throw ArgumentError("train_lstm: batch_size, epochs and max_len must be >= 1");
  }
  if (!(config.learning_rate > 0.0)) {
    throw ArgumentError("train_lstm: learning_rate must be positive");
  }
  if (config.clip_norm && !(*config.clip_norm > 0.0)) {
    throw ArgumentError("train_lstm: clip_norm must be positive when set");
  }

  SplitMix64 rng(config.seed);
  LstmParams params = init_lstm_params(vocab.size(), config, rng);
  AdagradState state{make_zero_like(params)};
  LstmGradients grads = make_zero_like(params);

  auto encode_all = [&](const std::vector<LabeledExample>& examples) {
    std::vector<EncodedExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
      out.push_back({encode_sequence(ex.text, vocab, normalize_config,
                                     config.max_len),
                     ex.label});
    }
    return out;
  };
  const std::vector<EncodedExample> train_enc = encode_all(train);
  const std::vector<EncodedExample> dev_enc = encode_all(dev);

  std::vector<size_t> order(train_enc.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  LstmTrainResult result;
  double best_dev = -1.0;

  const size_t n = train_enc.size();
  const size_t batch_size = static_cast<size_t>(config.batch_size);
  std::vector<int32_t> batch_rows;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    fisher_yates_shuffle(order, rng);
    double loss_sum = 0.0;
    int batch_no = 0;
    for (size_t start = 0; start < n; start += batch_size) {
      ++batch_no;
      const size_t end = std::min(start + batch_size, n);
      const size_t count = end - start;
      batch_rows.clear();
      double batch_loss = 0.0;
      try {
        for (size_t k = start; k < end; ++k) {
          const EncodedExample& ex = train_enc[order[k]];
          ForwardCache cache = forward(ex.seq, params);
          batch_loss += cross_entropy(onehot(ex.label), cache.probs);
          accumulate_backward(params, cache, ex.label, grads, &batch_rows);
        }
      } catch (const ArgumentError& e) {
        // Inside the loop the contracts (index range, matching shapes) hold
        // by construction, so an ArgumentError here means the parameters
        // diverged into non-finite territory — report it as such.
        throw TrainingError("train_lstm: diverged at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no) + ": " + e.what());
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("train_lstm: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no));
      }
      loss_sum += batch_loss;

      std::sort(batch_rows.begin(), batch_rows.end());
      batch_rows.erase(std::unique(batch_rows.begin(), batch_rows.end()),
                       batch_rows.end());

      scale_grads(grads, batch_rows, 1.0 / static_cast<double>(count));
      if (config.clip_norm) {
        const double norm = global_grad_norm(grads, batch_rows);
        if (norm > *config.clip_norm) {
          scale_grads(grads, batch_rows, *config.clip_norm / norm);
        }
      }
      apply_adagrad(params, grads, state, batch_rows, config.learning_rate,
                    config.adagrad_epsilon);
      zero_grads(grads, batch_rows);
    }

    if (!params.all_finite()) {
      throw TrainingError("train_lstm: non-finite parameter after epoch " +
                          std::to_string(epoch));
    }

    double dev_accuracy = 0.0;
    if (!dev_enc.empty()) {
      size_t correct = 0;
      for (const auto& ex : dev_enc) {
        ForwardCache cache = forward(ex.seq, params);
        if (argmax_class(cache.probs) == static_cast<int>(ex.label)) ++correct;
      }
      dev_accuracy =
          static_cast<double>(correct) / static_cast<double>(dev_enc.size());
    }

    result.log.push_back(
        {epoch, loss_sum / static_cast<double>(n), dev_accuracy});

    if (!dev_enc.empty() && dev_accuracy > best_dev) {
      best_dev = dev_accuracy;
      result.params = params;
      result.best_epoch = epoch;
      result.best_dev_accuracy = dev_accuracy;
    }
  }

  if (dev_enc.empty()) {
    result.params = std::move(params);
    result.best_epoch = config.epochs;
    result.best_dev_accuracy = 0.0;
  }
  return result;
}

ProbTriple predict_proba_lstm(const LstmParams& params,
                              const TrigramVocabulary& vocab,
                              std::string_view text,
                              const NormalizeConfig& normalize_config,
                              int max_len) {
  TrigramSequence seq = encode_sequence(text, vocab, normalize_config, max_len);
  return forward(seq, params).probs;
}

// ---------------------------------------------------------------------------
// Binary serialization.
//
// Layout (all integers and floats little-endian):
//   "CMSL" | u32 version | u32 flags | u32 K | u32 embed_dim | u32 hidden_dim
//   | u32 n_classes | u32 max_len | u64 seed | 16 bytes config hash (hex)
//   | tensors as f64, row-major, in order: embedding, then per direction
//     W_i W_f W_g W_o, U_i U_f U_g U_o, b_i b_f b_g b_o (forward direction
//     first, reverse direction only when flags bit 0 is set), then W_out and
//     b_out | u32 vocab byte count | vocabulary text ("trigram\tindex\n",
//     sorted by index) | u32 CRC-32 of every preceding byte.
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& buf, uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

void put_f64(std::string& buf, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(buf, bits);
}

void put_mat(std::string& buf, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(buf, m(r, c));
  }
}

void put_vec(std::string& buf, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(buf, v[i]);
}

void put_cell(std::string& buf, const LstmCell& cell) {
  for (const auto& m : cell.W) put_mat(buf, m);
  for (const auto& m : cell.U) put_mat(buf, m);
  for (const auto& v : cell.b) put_vec(buf, v);
}

class Reader {
 public:
  Reader(const std::string& data, std::string path)
      : data_(data), path_(std::move(path)) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_ + static_cast<size_t>(k)]))
           << (8 * k);
    }
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int k = 0; k < 8; ++k) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + static_cast<size_t>(k)]))
           << (8 * k);
    }
    pos_ += 8;
    return v;
  }

  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }

  std::string bytes(size_t count) {
    need(count);
    std::string out = data_.substr(pos_, count);
    pos_ += count;
    return out;
  }

  Mat mat(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    }
    return m;
  }

  Vec vec(Eigen::Index size) {
    Vec v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = f64();
    return v;
  }

  LstmCell cell(Eigen::Index embed, Eigen::Index hidden) {
    LstmCell c;
    for (auto& m : c.W) m = mat(embed, hidden);
    for (auto& m : c.U) m = mat(hidden, hidden);
    for (auto& v : c.b) v = vec(hidden);
    return c;
  }

  size_t position() const { return pos_; }

 private:
  void need(size_t count) const {
    if (pos_ + count > data_.size()) {
      throw ParseError("truncated LSTM model file: " + path_);
    }
  }

  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

uint32_t crc32_of(const std::string& data, size_t count) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
              static_cast<uInt>(count));
  return static_cast<uint32_t>(crc);
}

}  // namespace

void save_lstm(const std::filesystem::path& path, const LstmArtifact& artifact) {
  const LstmParams& p = artifact.params;
  if (artifact.vocab.size() != p.vocab_rows()) {
    throw ArgumentError("save_lstm: vocabulary size does not match embedding");
  }
  if (artifact.config_hash.size() != kConfigHashChars) {
    throw ArgumentError("save_lstm: config hash must be 16 hex characters");
  }
  std::string buf;
  buf.append("CMSL");
  put_u32(buf, kLstmFormatVersion);
  put_u32(buf, p.bidirectional() ? kFlagBidirectional : 0);
  put_u32(buf, static_cast<uint32_t>(p.vocab_rows()));
  put_u32(buf, static_cast<uint32_t>(p.embed_dim()));
  put_u32(buf, static_cast<uint32_t>(p.hidden_dim()));
  put_u32(buf, static_cast<uint32_t>(kNumClasses));
  put_u32(buf, static_cast<uint32_t>(artifact.max_len));
  put_u64(buf, artifact.seed);
  buf.append(artifact.config_hash);

  put_mat(buf, p.embedding);
  put_cell(buf, p.fwd);
  if (p.bwd) put_cell(buf, *p.bwd);
  put_mat(buf, p.W_out);
  put_vec(buf, p.b_out);

  const std::string vocab_text = vocab_to_text(artifact.vocab);
  put_u32(buf, static_cast<uint32_t>(vocab_text.size()));
  buf.append(vocab_text);

  put_u32(buf, crc32_of(buf, buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open model file for writing: " + path.string());
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw IoError("failed writing model file: " + path.string());
  }
}

LstmArtifact load_lstm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = std::move(ss).str();

  if (data.size() < 8 || data.compare(0, 4, "CMSL") != 0) {
    throw ParseError(path.string() + " is not an LSTM model file");
  }
  const uint32_t stored_crc =
      static_cast<uint8_t>(data[data.size() - 4]) |
      (static_cast<uint32_t>(static_cast<uint8_t>(data[data.size() - 3])) << 8) |
      (static_cast<uint32_t>(static_cast<uint8_t>(data[data.size() - 2])) << 16) |
      (static_cast<uint32_t>(static_cast<uint8_t>(data[data.size() - 1])) << 24);
  if (crc32_of(data, data.size() - 4) != stored_crc) {
    throw ParseError("checksum mismatch in " + path.string() +
                     " (file corrupted)");
  }

  Reader r(data, path.string());
  r.bytes(4);  // magic, already checked
  const uint32_t version = r.u32();
  if (version != kLstmFormatVersion) {
    throw ParseError("unsupported LSTM model version " +
                     std::to_string(version) + " in " + path.string());
  }
  const uint32_t flags = r.u32();
  const auto vocab_size = static_cast<Eigen::Index>(r.u32());
  const auto embed = static_cast<Eigen::Index>(r.u32());
  const auto hidden = static_cast<Eigen::Index>(r.u32());
  const uint32_t n_classes = r.u32();
  const uint32_t max_len = r.u32();
  if (n_classes != kNumClasses) {
    throw ParseError("class count mismatch in " + path.string());
  }
  if (vocab_size < 1 || embed < 1 || hidden < 1 || max_len < 1) {
    throw ParseError("invalid dimensions in " + path.string());
  }

  LstmArtifact artifact;
  artifact.seed = r.u64();
  artifact.config_hash = r.bytes(kConfigHashChars);
  artifact.max_len = static_cast<int>(max_len);

  const bool bidirectional = (flags & kFlagBidirectional) != 0;
  LstmParams& p = artifact.params;
  p.embedding = r.mat(vocab_size, embed);
  p.fwd = r.cell(embed, hidden);
  if (bidirectional) p.bwd = r.cell(embed, hidden);
  const Eigen::Index head = bidirectional ? 2 * hidden : hidden;
  p.W_out = r.mat(head, static_cast<Eigen::Index>(kNumClasses));
  p.b_out = r.vec(static_cast<Eigen::Index>(kNumClasses));

  const size_t vocab_bytes = r.u32();
  artifact.vocab = vocab_from_text(r.bytes(vocab_bytes));
  if (artifact.vocab.size() != static_cast<int32_t>(vocab_size)) {
    throw ParseError("vocabulary size mismatch in " + path.string());
  }
  if (r.position() != data.size() - 4) {
    throw ParseError("trailing bytes in " + path.string());
  }
  return artifact;
}

}  // namespace cmsent
