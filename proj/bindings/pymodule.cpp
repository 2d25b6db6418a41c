// Python bindings for the main operations: preprocessing, training,
// evaluation, prediction and the gradient check.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "cmsent/errors.hpp"
#include "cmsent/pipeline.hpp"

namespace py = pybind11;

namespace {

using namespace cmsent;

TrainTarget parse_target(const std::string& target) {
  if (target == "mnb") return TrainTarget::Mnb;
  if (target == "lstm") return TrainTarget::Lstm;
  if (target == "ensemble") return TrainTarget::Ensemble;
  throw ArgumentError("unknown training target '" + target +
                      "' (expected 'mnb', 'lstm' or 'ensemble')");
}

RunConfig make_config(uint64_t seed, bool stratify, double alpha, int epochs,
                      int embed_dim, int hidden_dim, int batch_size,
                      double learning_rate, const std::string& mode,
                      const std::string& direction) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.stratify = stratify;
  cfg.alpha = alpha;
  cfg.epochs = epochs;
  cfg.embed_dim = embed_dim;
  cfg.hidden_dim = hidden_dim;
  cfg.batch_size = batch_size;
  cfg.learning_rate = learning_rate;
  cfg.mode = parse_mode(mode);
  cfg.direction = parse_direction(direction);
  return cfg;
}

std::vector<std::string> to_strings(
    const std::vector<std::filesystem::path>& paths) {
  std::vector<std::string> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

const char* kind_name(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Mnb:
      return "mnb";
    case ArtifactKind::Lstm:
      return "lstm";
    case ArtifactKind::Ensemble:
      return "ensemble";
  }
  return "unknown";
}

py::dict report_to_dict(const EvalReport& report) {
  py::dict out;
  out["accuracy"] = report.accuracy;
  out["precision"] = report.precision;
  out["recall"] = report.recall;
  out["f1"] = report.f1;
  py::list confusion;
  for (size_t g = 0; g < kNumClasses; ++g) {
    py::list row;
    for (size_t p = 0; p < kNumClasses; ++p) {
      row.append(report.confusion.counts[g][p]);
    }
    confusion.append(row);
  }
  out["confusion"] = confusion;
  return out;
}

}  // namespace

PYBIND11_MODULE(_cmsent, m) {
  m.doc() =
      "Ensemble sentiment classifier for romanized code-mixed text: "
      "word-ngram naive Bayes fused with a character-trigram LSTM.";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<TrainingError>(m, "TrainingError",
                                        PyExc_RuntimeError);

  m.def(
      "normalize",
      [](const std::string& text) {
        return normalize_basic(text, NormalizeConfig());
      },
      py::arg("text"),
      "Lowercased, punctuation-stripped tokens of a sentence.");
  m.def(
      "preprocess",
      [](const std::string& text) {
        return preprocess_for_lstm(text, NormalizeConfig());
      },
      py::arg("text"),
      "Tokens after repeat-collapsing and '#' delimiting (character path).");
  m.def("collapse_repeats", &collapse_repeats, py::arg("token"),
        py::arg("max_repeat") = 2);
  m.def(
      "delimit", [](const std::string& token) { return delimit(token); },
      py::arg("token"));
  m.def(
      "char_trigrams",
      [](const std::string& delimited) { return char_trigrams(delimited); },
      py::arg("delimited"));

  m.def("combine_weighted_linear", &combine_weighted_linear, py::arg("a"),
        py::arg("b"), py::arg("w_a"), py::arg("w_b"));
  m.def(
      "combine_multiplicative",
      [](const ProbTriple& a, const ProbTriple& b) {
        bool uniform_fallback = false;
        ProbTriple out = combine_multiplicative(a, b, &uniform_fallback);
        return py::make_tuple(out, uniform_fallback);
      },
      py::arg("a"), py::arg("b"),
      "Returns (renormalized product, hit_uniform_fallback).");

  m.def(
      "split",
      [](const std::string& data, const std::string& out_dir, uint64_t seed,
         bool stratify) {
        RunConfig cfg;
        cfg.seed = seed;
        cfg.stratify = stratify;
        return to_strings(run_split(data, out_dir, cfg));
      },
      py::arg("data"), py::arg("out_dir"), py::arg("seed") = 42,
      py::arg("stratify") = false,
      "Writes train.tsv / dev.tsv / test.tsv and returns their paths.");

  m.def(
      "train",
      [](const std::string& target, const std::string& data,
         const std::string& out_dir, uint64_t seed, bool stratify,
         double alpha, int epochs, int embed_dim, int hidden_dim,
         int batch_size, double learning_rate, const std::string& mode,
         const std::string& direction) {
        return to_strings(run_train(
            parse_target(target), data, out_dir,
            make_config(seed, stratify, alpha, epochs, embed_dim, hidden_dim,
                        batch_size, learning_rate, mode, direction)));
      },
      py::arg("target"), py::arg("data"), py::arg("out_dir"),
      py::arg("seed") = 42, py::arg("stratify") = false,
      py::arg("alpha") = 1.0, py::arg("epochs") = 30,
      py::arg("embed_dim") = 128, py::arg("hidden_dim") = 64,
      py::arg("batch_size") = 32, py::arg("learning_rate") = 0.01,
      py::arg("mode") = "mult", py::arg("direction") = "uni",
      "Trains 'mnb', 'lstm' or 'ensemble' and returns the written paths.");

  m.def(
      "evaluate",
      [](const std::string& model, const std::string& data, bool weighted) {
        const auto examples = load_dataset(data);
        return report_to_dict(evaluate_artifact(
            model, examples, NormalizeConfig(),
            weighted ? Averaging::Weighted : Averaging::Macro));
      },
      py::arg("model"), py::arg("data"), py::arg("weighted") = false,
      "Scores a model artifact on a labeled TSV file.");

  m.def(
      "gradient_check",
      [](uint64_t seed, size_t cases, bool inject_fault) {
        const GradCheckReport report = run_gradient_checks(
            seed,
            inject_fault ? GradCheckFault::ZeroUGateGrads
                         : GradCheckFault::None,
            cases);
        py::dict out;
        out["cases"] = report.case_max_rel;
        out["worst"] = report.worst;
        out["tolerance"] = report.tolerance;
        out["passed"] = report.passed;
        return out;
      },
      py::arg("seed") = 12345, py::arg("cases") = 4,
      py::arg("inject_fault") = false,
      "Finite-difference check of the LSTM gradients on random instances.");

  py::class_<SentimentModel>(m, "Model",
                             "A loaded model artifact of any kind.")
      .def_static(
          "load",
          [](const std::string& path) { return SentimentModel::load(path); },
          py::arg("path"))
      .def_property_readonly(
          "kind",
          [](const SentimentModel& model) { return kind_name(model.kind()); })
      .def(
          "predict",
          [](const SentimentModel& model, const std::string& text) {
            return std::string(class_name(model.predict(text)));
          },
          py::arg("text"))
      .def(
          "predict_proba",
          [](const SentimentModel& model, const std::string& text) {
            return model.predict_proba(text);
          },
          py::arg("text"),
          "Probabilities in class order (Negative, Neutral, Positive).");
}
