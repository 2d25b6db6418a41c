#include "cmsent/mnb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cmsent/errors.hpp"

namespace cmsent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMnbFormatVersion = 1;
constexpr const char* kMnbFormatName = "cmsent-mnb";

void recompute_derived(MnbModel& model) {
  for (size_t c = 0; c < kNumClasses; ++c) {
    model.log_prior[c] =
        model.class_doc_counts[c] > 0
            ? std::log(static_cast<double>(model.class_doc_counts[c]) /
                       static_cast<double>(model.n_docs))
            : kNegInf;
  }
  const double vocab_size = static_cast<double>(model.counts.size());
  model.log_cond.clear();
  model.log_cond.reserve(model.counts.size());
  for (const auto& [ngram, per_class] : model.counts) {
    ProbTriple cond;
    for (size_t c = 0; c < kNumClasses; ++c) {
      const double num = static_cast<double>(per_class[c]) + model.alpha;
      const double den = static_cast<double>(model.class_token_totals[c]) +
                         model.alpha * vocab_size;
      cond[c] = std::log(num / den);
    }
    model.log_cond.emplace(ngram, cond);
  }
}

ProbTriple softmax_scores(const ProbTriple& scores) {
  double max_score = *std::max_element(scores.begin(), scores.end());
  ProbTriple probs{};
  double sum = 0.0;
  for (size_t c = 0; c < kNumClasses; ++c) {
    probs[c] = std::exp(scores[c] - max_score);
    sum += probs[c];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace

MnbModel train_mnb(const std::vector<LabeledExample>& train,
                   const NormalizeConfig& config, const NgramOrders& orders,
                   double alpha) {
  if (train.empty()) {
    throw ArgumentError("train_mnb: training set must be non-empty");
  }
  if (!(alpha > 0.0)) {
    throw ArgumentError("train_mnb: alpha must be positive");
  }
  MnbModel model;
  model.alpha = alpha;
  model.orders = orders;
  model.n_docs = static_cast<int64_t>(train.size());
  for (const auto& ex : train) {
    const auto c = static_cast<size_t>(ex.label);
    ++model.class_doc_counts[c];
    NgramCounts doc = extract_word_ngrams(normalize_basic(ex.text, config), orders);
    for (const auto& [ngram, count] : doc.counts) {
      auto& per_class = model.counts[ngram];
      per_class[c] += count;
      model.class_token_totals[c] += count;
    }
  }
  recompute_derived(model);
  return model;
}

ProbTriple score_log_posterior(const MnbModel& model, const NgramCounts& doc) {
  ProbTriple scores = model.log_prior;
  for (const auto& [ngram, count] : doc.counts) {
    auto it = model.log_cond.find(ngram);
    if (it == model.log_cond.end()) continue;  // unknown terms are skipped
    for (size_t c = 0; c < kNumClasses; ++c) {
      scores[c] += static_cast<double>(count) * it->second[c];
    }
  }
  return scores;
}

ProbTriple predict_proba_mnb(const MnbModel& model, std::string_view text,
                             const NormalizeConfig& config) {
  NgramCounts doc =
      extract_word_ngrams(normalize_basic(text, config), model.orders);
  return softmax_scores(score_log_posterior(model, doc));
}

SentimentClass predict_mnb(const MnbModel& model, std::string_view text,
                           const NormalizeConfig& config) {
  NgramCounts doc =
      extract_word_ngrams(normalize_basic(text, config), model.orders);
  return kClassOrder[static_cast<size_t>(
      argmax_class(score_log_posterior(model, doc)))];
}

void save_mnb(const std::filesystem::path& path, const MnbModel& model) {
  nlohmann::ordered_json j;
  j["format"] = kMnbFormatName;
  j["version"] = kMnbFormatVersion;
  j["alpha"] = model.alpha;
  j["class_order"] = {class_name(SentimentClass::Negative),
                      class_name(SentimentClass::Neutral),
                      class_name(SentimentClass::Positive)};
  j["orders"] = {{"unigrams", model.orders.unigrams},
                 {"bigrams", model.orders.bigrams}};
  j["n_docs"] = model.n_docs;
  j["class_doc_counts"] = model.class_doc_counts;
  ProbTriple priors{};
  for (size_t c = 0; c < kNumClasses; ++c) {
    priors[c] = model.n_docs > 0 ? static_cast<double>(model.class_doc_counts[c]) /
                                       static_cast<double>(model.n_docs)
                                 : 0.0;
  }
  j["priors"] = priors;
  j["seed"] = model.seed;
  j["config_hash"] = model.config_hash;

  std::vector<std::string> keys;
  keys.reserve(model.counts.size());
  for (const auto& [ngram, _] : model.counts) keys.push_back(ngram);
  std::sort(keys.begin(), keys.end());
  nlohmann::ordered_json vocab = nlohmann::ordered_json::object();
  for (const auto& key : keys) {
    vocab[key] = model.counts.at(key);
  }
  j["vocabulary"] = std::move(vocab);

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open model file for writing: " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing model file: " + path.string());
  }
}

MnbModel load_mnb(const std::filesystem::path& path,
                  std::optional<double> alpha_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid MNB model JSON in " + path.string() + ": " +
                     e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kMnbFormatName) {
      throw ParseError(path.string() + " is not an MNB model artifact");
    }
    if (j.at("version").get<int>() != kMnbFormatVersion) {
      throw ParseError("unsupported MNB model version " +
                       j.at("version").dump() + " in " + path.string());
    }
    std::array<std::string, kNumClasses> expected_order = {
        class_name(SentimentClass::Negative), class_name(SentimentClass::Neutral),
        class_name(SentimentClass::Positive)};
    if (j.at("class_order").get<std::array<std::string, kNumClasses>>() !=
        expected_order) {
      throw ParseError("class order mismatch in " + path.string());
    }
    MnbModel model;
    model.alpha = alpha_override.value_or(j.at("alpha").get<double>());
    if (!(model.alpha > 0.0)) {
      throw ArgumentError("load_mnb: alpha must be positive");
    }
    model.orders.unigrams = j.at("orders").at("unigrams").get<bool>();
    model.orders.bigrams = j.at("orders").at("bigrams").get<bool>();
    model.n_docs = j.at("n_docs").get<int64_t>();
    model.class_doc_counts =
        j.at("class_doc_counts").get<std::array<int64_t, kNumClasses>>();
    model.seed = j.at("seed").get<uint64_t>();
    model.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [ngram, per_class] : j.at("vocabulary").items()) {
      auto counts = per_class.get<std::array<int64_t, kNumClasses>>();
      for (size_t c = 0; c < kNumClasses; ++c) {
        model.class_token_totals[c] += counts[c];
      }
      model.counts.emplace(ngram, counts);
    }
    recompute_derived(model);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid MNB model artifact " + path.string() + ": " +
                     e.what());
  }
}

}  // namespace cmsent
