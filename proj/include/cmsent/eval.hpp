#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "cmsent/corpus.hpp"
#include "cmsent/types.hpp"

namespace cmsent {

/// counts[gold][pred], class order Negative, Neutral, Positive.
struct ConfusionMatrix {
  std::array<std::array<int64_t, kNumClasses>, kNumClasses> counts{};
  int64_t total = 0;

  void add(SentimentClass gold, SentimentClass predicted);
  int64_t row_total(size_t gold) const;
  int64_t col_total(size_t predicted) const;
};

enum class Averaging { Macro, Weighted };

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  double precision = 0.0;  // averaged per `averaging`
  double recall = 0.0;
  double f1 = 0.0;
  Averaging averaging = Averaging::Macro;
};

/// Precision, recall and F1 per class with the 0/0 -> 0 convention, plus
/// either their unweighted mean (macro) or the support-weighted mean.
/// Throws ArgumentError on an empty matrix.
EvalReport compute_metrics(const ConfusionMatrix& confusion,
                           Averaging averaging = Averaging::Macro);

/// Runs `predict` (returning a class index in [0, 3)) over the examples and
/// scores the predictions. Throws ArgumentError when the example list is
/// empty or the predictor returns an out-of-range index.
EvalReport evaluate(const std::vector<LabeledExample>& examples,
                    const std::function<int(std::string_view)>& predict,
                    Averaging averaging = Averaging::Macro);

}  // namespace cmsent
