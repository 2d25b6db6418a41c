#include "cmsent/eval.hpp"

#include <string>

#include "cmsent/errors.hpp"

namespace cmsent {

void ConfusionMatrix::add(SentimentClass gold, SentimentClass predicted) {
  counts[static_cast<size_t>(gold)][static_cast<size_t>(predicted)] += 1;
  total += 1;
}

int64_t ConfusionMatrix::row_total(size_t gold) const {
  int64_t sum = 0;
  for (size_t p = 0; p < kNumClasses; ++p) sum += counts[gold][p];
  return sum;
}

int64_t ConfusionMatrix::col_total(size_t predicted) const {
  int64_t sum = 0;
  for (size_t g = 0; g < kNumClasses; ++g) sum += counts[g][predicted];
  return sum;
}

EvalReport compute_metrics(const ConfusionMatrix& confusion,
                           Averaging averaging) {
  if (confusion.total == 0) {
    throw ArgumentError("compute_metrics: empty confusion matrix");
  }
  EvalReport report;
  report.confusion = confusion;
  report.averaging = averaging;

  int64_t diagonal = 0;
  for (size_t c = 0; c < kNumClasses; ++c) diagonal += confusion.counts[c][c];
  report.accuracy =
      static_cast<double>(diagonal) / static_cast<double>(confusion.total);

  for (size_t c = 0; c < kNumClasses; ++c) {
    const auto tp = static_cast<double>(confusion.counts[c][c]);
    const auto col = static_cast<double>(confusion.col_total(c));
    const auto row = static_cast<double>(confusion.row_total(c));
    ClassMetrics& m = report.per_class[c];
    m.precision = col > 0.0 ? tp / col : 0.0;
    m.recall = row > 0.0 ? tp / row : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }

  for (size_t c = 0; c < kNumClasses; ++c) {
    const double weight =
        averaging == Averaging::Macro
            ? 1.0 / static_cast<double>(kNumClasses)
            : static_cast<double>(confusion.row_total(c)) /
                  static_cast<double>(confusion.total);
    report.precision += weight * report.per_class[c].precision;
    report.recall += weight * report.per_class[c].recall;
    report.f1 += weight * report.per_class[c].f1;
  }
  return report;
}

EvalReport evaluate(const std::vector<LabeledExample>& examples,
                    const std::function<int(std::string_view)>& predict,
                    Averaging averaging) {
  if (examples.empty()) {
    throw ArgumentError("evaluate: example list must be non-empty");
  }
  ConfusionMatrix confusion;
  for (size_t i = 0; i < examples.size(); ++i) {
    const int predicted = predict(examples[i].text);
    if (predicted < 0 || predicted >= static_cast<int>(kNumClasses)) {
      throw ArgumentError("evaluate: predictor returned class index " +
                          std::to_string(predicted) + " for example " +
                          std::to_string(i));
    }
    confusion.add(examples[i].label, kClassOrder[static_cast<size_t>(predicted)]);
  }
  return compute_metrics(confusion, averaging);
}

}  // namespace cmsent
