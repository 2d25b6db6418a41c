// Command-line front end: split / train / evaluate / predict / gradcheck.
//
// Exit codes: 0 success, 1 verification or runtime failure, 2 usage or
// config error, 3 I/O or file-format error.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmsent/errors.hpp"
#include "cmsent/pipeline.hpp"

namespace {

using namespace cmsent;

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 0;
  bool stratify = false;
  double alpha = 1.0;
  int epochs = 0;
  std::string mode;
  std::string direction;
};

void add_common_options(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path,
                  "JSON config file; explicit flags override it");
  sub->add_option("--seed", opts.seed, "Seed for every randomized step");
  sub->add_flag("--stratify", opts.stratify,
                "Split each class separately before concatenating");
}

void add_train_options(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--alpha", opts.alpha, "Additive smoothing strength");
  sub->add_option("--epochs", opts.epochs, "Training epochs");
  sub->add_option("--mode", opts.mode, "Fusion rule: linear or mult")
      ->check(CLI::IsMember({"linear", "mult"}));
  sub->add_option("--direction", opts.direction,
                  "Recurrence direction: uni or bi")
      ->check(CLI::IsMember({"uni", "bi"}));
}

RunConfig build_config(const CLI::App* sub, const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{}
                                           : load_run_config(opts.config_path);
  auto given = [sub](const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) cfg.seed = opts.seed;
  if (given("--stratify")) cfg.stratify = true;
  if (given("--alpha")) cfg.alpha = opts.alpha;
  if (given("--epochs")) cfg.epochs = opts.epochs;
  if (!opts.mode.empty()) cfg.mode = parse_mode(opts.mode);
  if (!opts.direction.empty()) cfg.direction = parse_direction(opts.direction);
  return cfg;
}

void print_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << '\n';
}

void print_report(const std::string& name, const EvalReport& report,
                  bool with_confusion) {
  std::cout << std::left << std::setw(28) << name << std::right << std::fixed
            << std::setprecision(4) << std::setw(10) << report.accuracy
            << std::setw(11) << report.precision << std::setw(9)
            << report.recall << std::setw(9) << report.f1 << '\n';
  if (!with_confusion) return;
  std::cout << "\nconfusion (rows gold, cols predicted):\n";
  std::cout << std::setw(10) << "";
  for (size_t c = 0; c < kNumClasses; ++c) {
    std::cout << std::setw(10) << class_name(kClassOrder[c]);
  }
  std::cout << '\n';
  for (size_t g = 0; g < kNumClasses; ++g) {
    std::cout << std::setw(10) << class_name(kClassOrder[g]);
    for (size_t p = 0; p < kNumClasses; ++p) {
      std::cout << std::setw(10) << report.confusion.counts[g][p];
    }
    std::cout << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Sentiment classification for romanized code-mixed text"};
  app.require_subcommand(1);

  CommonOpts opts;

  // split
  auto* split_cmd =
      app.add_subcommand("split", "Shuffle and write the 70/10/20 split");
  std::string data_path;
  std::string out_path;
  split_cmd->add_option("--data", data_path, "Labeled TSV corpus")->required();
  split_cmd->add_option("--out", out_path, "Output directory")->required();
  add_common_options(split_cmd, opts);

  // train (mnb | lstm | ensemble)
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->require_subcommand(1);
  auto* train_mnb_cmd =
      train_cmd->add_subcommand("mnb", "Word-ngram naive Bayes only");
  auto* train_lstm_cmd =
      train_cmd->add_subcommand("lstm", "Character-trigram LSTM only");
  auto* train_ensemble_cmd =
      train_cmd->add_subcommand("ensemble", "Both members plus the fusion manifest");
  for (CLI::App* sub : {train_mnb_cmd, train_lstm_cmd, train_ensemble_cmd}) {
    sub->add_option("--data", data_path, "Labeled TSV corpus (split internally)")
        ->required();
    sub->add_option("--out", out_path, "Output directory for artifacts")
        ->required();
    add_common_options(sub, opts);
    add_train_options(sub, opts);
  }

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Score one or more models on a labeled TSV");
  std::vector<std::string> model_paths;
  bool weighted = false;
  eval_cmd->add_option("--data", data_path, "Labeled TSV examples")->required();
  eval_cmd->add_option("--model", model_paths, "Model artifact (repeatable)")
      ->required();
  eval_cmd->add_flag("--weighted", weighted,
                     "Support-weighted averages instead of macro");
  add_common_options(eval_cmd, opts);

  // predict
  auto* predict_cmd =
      app.add_subcommand("predict", "Label sentences, one per input line");
  std::string model_path;
  std::string input_path = "-";
  predict_cmd->add_option("--model", model_path, "Model artifact")->required();
  predict_cmd->add_option("--input", input_path,
                          "Input file; '-' reads standard input");
  add_common_options(predict_cmd, opts);

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Finite-difference check of the LSTM gradients");
  uint64_t gc_seed = 12345;
  size_t gc_cases = 8;
  std::string fault_name;
  gradcheck_cmd->add_option("--seed", gc_seed, "Seed for the random instances");
  gradcheck_cmd->add_option("--cases", gc_cases, "Number of model instances");
  gradcheck_cmd
      ->add_option("--inject-fault", fault_name,
                   "Deliberately corrupt gradients (must fail the check)")
      ->check(CLI::IsMember({"ugate"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*split_cmd) {
    print_written(run_split(data_path, out_path, build_config(split_cmd, opts)));
    return 0;
  }

  if (*train_cmd) {
    CLI::App* sub = train_cmd->get_subcommands().front();
    TrainTarget target = TrainTarget::Ensemble;
    if (sub == train_mnb_cmd) target = TrainTarget::Mnb;
    if (sub == train_lstm_cmd) target = TrainTarget::Lstm;
    print_written(run_train(target, data_path, out_path, build_config(sub, opts)));
    return 0;
  }

  if (*eval_cmd) {
    const RunConfig cfg = build_config(eval_cmd, opts);
    const NormalizeConfig ncfg = cfg.normalize_config();
    const auto examples = load_dataset(data_path);
    const Averaging averaging =
        weighted ? Averaging::Weighted : Averaging::Macro;
    std::cout << std::left << std::setw(28) << "model" << std::right
              << std::setw(10) << "accuracy" << std::setw(11) << "precision"
              << std::setw(9) << "recall" << std::setw(9) << "f1" << '\n';
    for (const auto& path : model_paths) {
      print_report(path, evaluate_artifact(path, examples, ncfg, averaging),
                   model_paths.size() == 1);
    }
    return 0;
  }

  if (*predict_cmd) {
    const RunConfig cfg = build_config(predict_cmd, opts);
    const SentimentModel model =
        SentimentModel::load(model_path, cfg.normalize_config());
    std::ifstream file;
    if (input_path != "-") {
      file.open(input_path, std::ios::binary);
      if (!file) throw IoError("cannot open input file: " + input_path);
    }
    std::istream& in = input_path == "-" ? std::cin : file;
    std::string line;
    std::cout << std::fixed << std::setprecision(6);
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const ProbTriple probs = model.predict_proba(line);
      std::cout << class_name(
          kClassOrder[static_cast<size_t>(argmax_class(probs))]);
      for (double p : probs) std::cout << '\t' << p;
      std::cout << '\n';
    }
    return 0;
  }

  // gradcheck
  const GradCheckFault fault = fault_name == "ugate"
                                   ? GradCheckFault::ZeroUGateGrads
                                   : GradCheckFault::None;
  const GradCheckReport report = run_gradient_checks(gc_seed, fault, gc_cases);
  std::cout << std::scientific << std::setprecision(3);
  for (size_t i = 0; i < report.case_max_rel.size(); ++i) {
    std::cout << "case " << i + 1 << ": max relative difference "
              << report.case_max_rel[i] << '\n';
  }
  std::cout << "worst " << report.worst << " vs tolerance " << report.tolerance
            << ": " << (report.passed ? "PASS" : "FAIL") << '\n';
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cmsent::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const cmsent::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const cmsent::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
