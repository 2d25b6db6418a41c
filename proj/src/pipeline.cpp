#include "cmsent/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cmsent/errors.hpp"

namespace cmsent {

namespace {

nlohmann::ordered_json canonical_config(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["stratify"] = c.stratify;
  j["max_repeat"] = c.max_repeat;
  j["stopwords"] = c.stopwords_path;
  j["alpha"] = c.alpha;
  j["unigrams"] = c.orders.unigrams;
  j["bigrams"] = c.orders.bigrams;
  j["batch_size"] = c.batch_size;
  j["max_len"] = c.max_len;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  if (c.clip_norm) {
    j["clip_norm"] = *c.clip_norm;
  } else {
    j["clip_norm"] = nullptr;
  }
  j["direction"] = direction_name(c.direction);
  j["mode"] = mode_name(c.mode);
  return j;
}

void append_log_line(std::ofstream& log, const nlohmann::ordered_json& j) {
  log << j.dump() << '\n';
}

}  // namespace

const char* direction_name(Direction direction) {
  return direction == Direction::Bidirectional ? "bidirectional"
                                               : "unidirectional";
}

Direction parse_direction(std::string_view name) {
  if (name == "uni" || name == "unidirectional") {
    return Direction::Unidirectional;
  }
  if (name == "bi" || name == "bidirectional") {
    return Direction::Bidirectional;
  }
  throw ArgumentError("unknown direction '" + std::string(name) +
                      "' (expected 'uni' or 'bi')");
}

NormalizeConfig RunConfig::normalize_config() const {
  NormalizeConfig ncfg;
  ncfg.max_repeat = max_repeat;
  if (!stopwords_path.empty()) {
    ncfg.stopwords = load_stopwords(stopwords_path);
  }
  return ncfg;
}

LstmConfig RunConfig::lstm_config() const {
  LstmConfig lcfg;
  lcfg.batch_size = batch_size;
  lcfg.max_len = max_len;
  lcfg.embed_dim = embed_dim;
  lcfg.hidden_dim = hidden_dim;
  lcfg.learning_rate = learning_rate;
  lcfg.epochs = epochs;
  lcfg.seed = seed;
  lcfg.clip_norm = clip_norm;
  lcfg.direction = direction;
  return lcfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid config JSON in " + path.string() + ": " +
                     e.what());
  }
  if (!j.is_object()) {
    throw ParseError("config file " + path.string() +
                     " must hold a JSON object");
  }

  static const std::unordered_set<std::string> known = {
      "seed",       "stratify",   "max_repeat",    "stopwords",
      "alpha",      "unigrams",   "bigrams",       "batch_size",
      "max_len",    "embed_dim",  "hidden_dim",    "learning_rate",
      "epochs",     "clip_norm",  "direction",     "mode"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw ParseError("unknown config key '" + key + "' in " + path.string());
    }
  }

  RunConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("stratify")) cfg.stratify = j.at("stratify").get<bool>();
    if (j.contains("max_repeat")) cfg.max_repeat = j.at("max_repeat").get<int>();
    if (j.contains("stopwords")) {
      cfg.stopwords_path = j.at("stopwords").get<std::string>();
    }
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("unigrams")) {
      cfg.orders.unigrams = j.at("unigrams").get<bool>();
    }
    if (j.contains("bigrams")) cfg.orders.bigrams = j.at("bigrams").get<bool>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_len")) cfg.max_len = j.at("max_len").get<int>();
    if (j.contains("embed_dim")) cfg.embed_dim = j.at("embed_dim").get<int>();
    if (j.contains("hidden_dim")) {
      cfg.hidden_dim = j.at("hidden_dim").get<int>();
    }
    if (j.contains("learning_rate")) {
      cfg.learning_rate = j.at("learning_rate").get<double>();
    }
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("clip_norm")) {
      if (j.at("clip_norm").is_null()) {
        cfg.clip_norm.reset();
      } else {
        cfg.clip_norm = j.at("clip_norm").get<double>();
      }
    }
    if (j.contains("direction")) {
      cfg.direction = parse_direction(j.at("direction").get<std::string>());
    }
    if (j.contains("mode")) {
      cfg.mode = parse_mode(j.at("mode").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid config value in " + path.string() + ": " +
                     e.what());
  }
  return cfg;
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::string config_hash(const RunConfig& config) {
  const std::string canonical = canonical_config(config).dump();
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical);
  return out.str();
}

ArtifactKind detect_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model file: " + path.string());
  }
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() == 4 && std::memcmp(magic.data(), "CMSL", 4) == 0) {
    return ArtifactKind::Lstm;
  }
  in.clear();
  in.seekg(0);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw ParseError(path.string() + " is not a recognized model artifact");
  }
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "cmsent-mnb") return ArtifactKind::Mnb;
  if (format == "cmsent-ensemble") return ArtifactKind::Ensemble;
  throw ParseError(path.string() + " is not a recognized model artifact");
}

SentimentModel SentimentModel::load(const std::filesystem::path& path,
                                    const NormalizeConfig& config) {
  SentimentModel model;
  model.normalize_ = config;
  model.kind_ = detect_artifact(path);
  switch (model.kind_) {
    case ArtifactKind::Mnb:
      model.mnb_ = load_mnb(path);
      break;
    case ArtifactKind::Lstm:
      model.lstm_ = load_lstm(path);
      break;
    case ArtifactKind::Ensemble: {
      model.manifest_ = load_ensemble(path);
      const std::filesystem::path dir = path.parent_path();
      model.mnb_ = load_mnb(dir / model.manifest_->mnb_path);
      model.lstm_ = load_lstm(dir / model.manifest_->lstm_path);
      break;
    }
  }
  return model;
}

ProbTriple SentimentModel::predict_proba(std::string_view text) const {
  switch (kind_) {
    case ArtifactKind::Mnb:
      return predict_proba_mnb(*mnb_, text, normalize_);
    case ArtifactKind::Lstm:
      return predict_proba_lstm(lstm_->params, lstm_->vocab, text, normalize_,
                                lstm_->max_len);
    case ArtifactKind::Ensemble:
      return manifest_->combine(
          predict_proba_mnb(*mnb_, text, normalize_),
          predict_proba_lstm(lstm_->params, lstm_->vocab, text, normalize_,
                             lstm_->max_len));
  }
  throw ArgumentError("predict_proba: unknown artifact kind");
}

SentimentClass SentimentModel::predict(std::string_view text) const {
  return kClassOrder[static_cast<size_t>(argmax_class(predict_proba(text)))];
}

DatasetSplit split_corpus(const std::vector<LabeledExample>& examples,
                          const RunConfig& config) {
  return config.stratify ? split_dataset_stratified(examples, config.seed)
                         : split_dataset(examples, config.seed);
}

std::vector<std::filesystem::path> run_split(
    const std::filesystem::path& data_path,
    const std::filesystem::path& out_dir, const RunConfig& config) {
  const std::vector<LabeledExample> examples = load_dataset(data_path);
  const DatasetSplit split = split_corpus(examples, config);
  std::filesystem::create_directories(out_dir);
  const std::vector<std::filesystem::path> written = {
      out_dir / "train.tsv", out_dir / "dev.tsv", out_dir / "test.tsv"};
  save_dataset(written[0], split.train);
  save_dataset(written[1], split.dev);
  save_dataset(written[2], split.test);
  return written;
}

std::vector<std::filesystem::path> run_train(
    TrainTarget target, const std::filesystem::path& data_path,
    const std::filesystem::path& out_dir, const RunConfig& config) {
  const std::vector<LabeledExample> examples = load_dataset(data_path);
  const DatasetSplit split = split_corpus(examples, config);

  std::filesystem::create_directories(out_dir);
  save_dataset(out_dir / "train.tsv", split.train);
  save_dataset(out_dir / "dev.tsv", split.dev);
  save_dataset(out_dir / "test.tsv", split.test);
  std::vector<std::filesystem::path> written = {
      out_dir / "train.tsv", out_dir / "dev.tsv", out_dir / "test.tsv"};

  const NormalizeConfig ncfg = config.normalize_config();
  const std::string hash = config_hash(config);

  const std::filesystem::path log_path = out_dir / "train_log.jsonl";
  std::ofstream log(log_path, std::ios::app | std::ios::binary);
  if (!log) {
    throw IoError("cannot open training log for append: " + log_path.string());
  }

  const bool want_mnb =
      target == TrainTarget::Mnb || target == TrainTarget::Ensemble;
  const bool want_lstm =
      target == TrainTarget::Lstm || target == TrainTarget::Ensemble;

  double mnb_dev_acc = 0.0;
  double lstm_dev_acc = 0.0;

  if (want_mnb) {
    MnbModel model = train_mnb(split.train, ncfg, config.orders, config.alpha);
    model.seed = config.seed;
    model.config_hash = hash;
    if (!split.dev.empty()) {
      const EvalReport report =
          evaluate(split.dev, [&](std::string_view text) {
            return static_cast<int>(predict_mnb(model, text, ncfg));
          });
      mnb_dev_acc = report.accuracy;
    }
    const std::filesystem::path mnb_path = out_dir / "mnb.json";
    save_mnb(mnb_path, model);
    written.push_back(mnb_path);

    nlohmann::ordered_json line;
    line["model"] = "mnb";
    line["event"] = "trained";
    line["n_docs"] = model.n_docs;
    line["vocabulary_size"] = model.counts.size();
    line["dev_accuracy"] = mnb_dev_acc;
    line["config_hash"] = hash;
    append_log_line(log, line);
  }

  if (want_lstm) {
    std::vector<std::string> train_texts;
    train_texts.reserve(split.train.size());
    for (const auto& ex : split.train) train_texts.push_back(ex.text);
    TrigramVocabulary vocab = build_trigram_vocab(train_texts, ncfg);

    LstmTrainResult result =
        train_lstm(split.train, split.dev, vocab, config.lstm_config(), ncfg);
    for (const EpochStats& stats : result.log) {
      nlohmann::ordered_json line;
      line["model"] = "lstm";
      line["event"] = "epoch";
      line["epoch"] = stats.epoch;
      line["mean_train_loss"] = stats.mean_train_loss;
      line["dev_accuracy"] = stats.dev_accuracy;
      append_log_line(log, line);
    }
    nlohmann::ordered_json selected;
    selected["model"] = "lstm";
    selected["event"] = "selected";
    selected["best_epoch"] = result.best_epoch;
    selected["best_dev_accuracy"] = result.best_dev_accuracy;
    selected["config_hash"] = hash;
    append_log_line(log, selected);
    lstm_dev_acc = result.best_dev_accuracy;

    LstmArtifact artifact;
    artifact.params = std::move(result.params);
    artifact.vocab = std::move(vocab);
    artifact.max_len = config.max_len;
    artifact.seed = config.seed;
    artifact.config_hash = hash;
    const std::filesystem::path lstm_path = out_dir / "lstm.bin";
    save_lstm(lstm_path, artifact);
    written.push_back(lstm_path);
  }

  if (target == TrainTarget::Ensemble) {
    EnsembleModel manifest;
    manifest.mode = config.mode;
    manifest.weight_mnb = mnb_dev_acc;
    manifest.weight_lstm = lstm_dev_acc;
    manifest.mnb_path = "mnb.json";
    manifest.lstm_path = "lstm.bin";
    manifest.seed = config.seed;
    manifest.config_hash = hash;
    const std::filesystem::path manifest_path = out_dir / "ensemble.json";
    save_ensemble(manifest_path, manifest);
    written.push_back(manifest_path);

    nlohmann::ordered_json line;
    line["model"] = "ensemble";
    line["event"] = "fused";
    line["mode"] = mode_name(manifest.mode);
    line["dev_acc_mnb"] = mnb_dev_acc;
    line["dev_acc_lstm"] = lstm_dev_acc;
    line["config_hash"] = hash;
    append_log_line(log, line);
  }

  written.push_back(log_path);
  return written;
}

EvalReport evaluate_artifact(const std::filesystem::path& model_path,
                             const std::vector<LabeledExample>& examples,
                             const NormalizeConfig& config,
                             Averaging averaging) {
  const SentimentModel model = SentimentModel::load(model_path, config);
  return evaluate(
      examples,
      [&](std::string_view text) {
        return static_cast<int>(model.predict(text));
      },
      averaging);
}

GradCheckReport run_gradient_checks(uint64_t seed, GradCheckFault fault,
                                    size_t cases) {
  if (cases == 0) {
    throw ArgumentError("run_gradient_checks: cases must be >= 1");
  }
  SplitMix64 rng(seed);
  GradCheckReport report;
  for (size_t i = 0; i < cases; ++i) {
    const int vocab_size = 5 + static_cast<int>(rng.next_below(4));
    LstmConfig config;
    config.embed_dim = 4 + static_cast<int>(rng.next_below(3));
    config.hidden_dim = 3 + static_cast<int>(rng.next_below(2));
    config.direction =
        i % 2 == 0 ? Direction::Unidirectional : Direction::Bidirectional;
    const LstmParams params = init_lstm_params(vocab_size, config, rng);

    // At least two timesteps, so the recurrent weights influence the loss
    // and a corrupted U gradient is guaranteed to be visible.
    const int steps = 2 + static_cast<int>(rng.next_below(3));
    TrigramSequence seq;
    seq.length = steps;
    for (int t = 0; t < steps; ++t) {
      seq.indices.push_back(
          static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(vocab_size))));
      seq.mask.push_back(1);
    }
    seq.indices.push_back(kPadIndex);  // trailing padding must stay inert
    seq.mask.push_back(0);

    const SentimentClass target = kClassOrder[rng.next_below(kNumClasses)];
    GradCheckOptions opts;
    opts.fault = fault;
    const double rel = gradient_check(params, seq, target, opts);
    report.case_max_rel.push_back(rel);
    report.worst = std::max(report.worst, rel);
  }
  report.passed = report.worst < report.tolerance;
  return report;
}

}  // namespace cmsent
