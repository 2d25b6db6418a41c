#include "cmsent/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cmsent/errors.hpp"

namespace cmsent {

namespace {

constexpr int kEnsembleFormatVersion = 1;
constexpr const char* kEnsembleFormatName = "cmsent-ensemble";

void check_probs(const ProbTriple& p, const char* who) {
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ArgumentError(std::string(who) +
                          ": probabilities must be finite and nonnegative");
    }
  }
}

}  // namespace

const char* mode_name(EnsembleMode mode) {
  switch (mode) {
    case EnsembleMode::WeightedLinear:
      return "weighted_linear";
    case EnsembleMode::Multiplicative:
      return "multiplicative";
  }
  throw ArgumentError("mode_name: unknown ensemble mode");
}

EnsembleMode parse_mode(std::string_view name) {
  if (name == "weighted_linear" || name == "linear") {
    return EnsembleMode::WeightedLinear;
  }
  if (name == "multiplicative" || name == "mult") {
    return EnsembleMode::Multiplicative;
  }
  throw ArgumentError("unknown ensemble mode '" + std::string(name) +
                      "' (expected 'linear' or 'mult')");
}

ProbTriple combine_weighted_linear(const ProbTriple& a, const ProbTriple& b,
                                   double w_a, double w_b) {
  check_probs(a, "combine_weighted_linear");
  check_probs(b, "combine_weighted_linear");
  if (!std::isfinite(w_a) || !std::isfinite(w_b) || w_a < 0.0 || w_b < 0.0) {
    throw ArgumentError(
        "combine_weighted_linear: weights must be finite and nonnegative");
  }
  const double total = w_a + w_b;
  if (total == 0.0) {
    throw ArgumentError("combine_weighted_linear: weights must not both be zero");
  }
  ProbTriple out{};
  for (size_t c = 0; c < kNumClasses; ++c) {
    out[c] = (w_a * a[c] + w_b * b[c]) / total;
  }
  return out;
}

ProbTriple combine_multiplicative(const ProbTriple& a, const ProbTriple& b,
                                  bool* uniform_fallback) {
  check_probs(a, "combine_multiplicative");
  check_probs(b, "combine_multiplicative");
  ProbTriple out{};
  double sum = 0.0;
  for (size_t c = 0; c < kNumClasses; ++c) {
    out[c] = a[c] * b[c];
    sum += out[c];
  }
  if (sum == 0.0) {
    // The members assign disjoint support; neither ranking survives the
    // product, so report maximum uncertainty rather than failing.
    if (uniform_fallback) *uniform_fallback = true;
    out.fill(1.0 / static_cast<double>(kNumClasses));
    return out;
  }
  if (uniform_fallback) *uniform_fallback = false;
  for (double& v : out) v /= sum;
  return out;
}

ProbTriple EnsembleModel::combine(const ProbTriple& mnb_probs,
                                  const ProbTriple& lstm_probs,
                                  bool* uniform_fallback) const {
  if (mode == EnsembleMode::WeightedLinear) {
    if (uniform_fallback) *uniform_fallback = false;
    return combine_weighted_linear(mnb_probs, lstm_probs, weight_mnb,
                                   weight_lstm);
  }
  return combine_multiplicative(mnb_probs, lstm_probs, uniform_fallback);
}

void save_ensemble(const std::filesystem::path& path,
                   const EnsembleModel& model) {
  nlohmann::ordered_json j;
  j["format"] = kEnsembleFormatName;
  j["version"] = kEnsembleFormatVersion;
  j["mode"] = mode_name(model.mode);
  j["dev_acc_mnb"] = model.weight_mnb;
  j["dev_acc_lstm"] = model.weight_lstm;
  j["class_order"] = {class_name(SentimentClass::Negative),
                      class_name(SentimentClass::Neutral),
                      class_name(SentimentClass::Positive)};
  j["mnb"] = model.mnb_path;
  j["lstm"] = model.lstm_path;
  j["seed"] = model.seed;
  j["config_hash"] = model.config_hash;

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open manifest for writing: " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("failed writing manifest: " + path.string());
  }
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open manifest: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid ensemble manifest JSON in " + path.string() +
                     ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kEnsembleFormatName) {
      throw ParseError(path.string() + " is not an ensemble manifest");
    }
    if (j.at("version").get<int>() != kEnsembleFormatVersion) {
      throw ParseError("unsupported ensemble manifest version " +
                       j.at("version").dump() + " in " + path.string());
    }
    std::array<std::string, kNumClasses> expected_order = {
        class_name(SentimentClass::Negative),
        class_name(SentimentClass::Neutral),
        class_name(SentimentClass::Positive)};
    if (j.at("class_order").get<std::array<std::string, kNumClasses>>() !=
        expected_order) {
      throw ParseError("class order mismatch in " + path.string());
    }
    EnsembleModel model;
    model.mode = parse_mode(j.at("mode").get<std::string>());
    model.weight_mnb = j.at("dev_acc_mnb").get<double>();
    model.weight_lstm = j.at("dev_acc_lstm").get<double>();
    model.mnb_path = j.at("mnb").get<std::string>();
    model.lstm_path = j.at("lstm").get<std::string>();
    model.seed = j.at("seed").get<uint64_t>();
    model.config_hash = j.at("config_hash").get<std::string>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid ensemble manifest " + path.string() + ": " +
                     e.what());
  }
}

}  // namespace cmsent
