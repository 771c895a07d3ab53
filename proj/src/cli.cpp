#include "irony/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irony/baseline.hpp"
#include "irony/checkpoint.hpp"
#include "irony/corpus.hpp"
#include "irony/embed.hpp"
#include "irony/error.hpp"
#include "irony/log.hpp"
#include "irony/metrics.hpp"
#include "irony/textprep.hpp"
#include "irony/train.hpp"

namespace irony::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kManifestName = "ensemble.json";
constexpr const char* kManifestFormat = "irony-ensemble";
constexpr int kManifestVersion = 1;

const std::vector<std::string> kPrepKeys = {"data", "header", "out", "keep_not"};
const std::vector<std::string> kTrainKeys = {
    "data",    "embeddings", "header",   "out",        "keep_not",   "split_ratio", "stratified",
    "dim",     "hidden",     "dropout",  "lr",         "features",   "seed",        "ensemble",
    "batch_size", "patience", "max_epochs", "min_freq", "fine_tune", "combine",     "threads",
    "track_train"};
const std::vector<std::string> kEvalKeys = {"data", "checkpoint", "embeddings", "header", "out", "subset"};
const std::vector<std::string> kBaselineKeys = {"data",       "header", "out",  "keep_not", "split_ratio",
                                                "stratified", "seed",   "c",    "stopwords"};

json defaults() {
  json d = train_config_to_json(TrainConfig{});
  d.update({{"data", ""},
            {"embeddings", ""},
            {"checkpoint", ""},
            {"stopwords", ""},
            {"header", "auto"},
            {"out", "out"},
            {"split_ratio", 0.8},
            {"stratified", false},
            {"keep_not", false},
            {"subset", "all"},
            {"c", 1.0},
            {"threads", 1},
            {"track_train", false}});
  return d;
}

const std::vector<std::string>& keys_for(const std::string& command) {
  if (command == "prep") return kPrepKeys;
  if (command == "train" || command == "ablate") return kTrainKeys;
  if (command == "eval" || command == "predict") return kEvalKeys;
  return kBaselineKeys;
}

// Records which flags were given on the command line so they can be layered
// over the config file.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* option(const std::string& name, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(name, *value, help);
    writers_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }

  CLI::Option* flag(const std::string& name, const std::string& key, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag(name, *value, help);
    writers_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }

  void apply(json& j) const {
    for (const auto& w : writers_) w(j);
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(json&)>> writers_;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Flags> flags;
  std::string config_path;
};

void add_common(Command& cmd) {
  auto& f = *cmd.flags;
  f.option<std::string>("--data", "data", "Dataset TSV (index, label, text)");
  f.option<std::string>("--header", "header", "Header line: auto, yes or no")
      ->check(CLI::IsMember({"auto", "yes", "no"}));
  f.option<std::string>("--out", "out", "Output directory (default: out)");
  cmd.app->add_option("--config", cmd.config_path, "JSON config; command-line flags take precedence");
}

void add_prep_flags(Command& cmd) {
  cmd.flags->flag("--keep-not", "keep_not", "Keep the bare word \"not\" during cleaning");
}

void add_split_flags(Command& cmd) {
  auto& f = *cmd.flags;
  f.option<double>("--split-ratio", "split_ratio", "Train fraction of the split (default: 0.8)");
  f.flag("--stratified", "stratified", "Stratify the split by label");
  f.option<std::uint64_t>("--seed", "seed", "Base random seed (default: 1)");
}

void add_train_flags(Command& cmd) {
  auto& f = *cmd.flags;
  f.option<std::string>("--embeddings", "embeddings", "GloVe text file");
  f.option<int>("--dim", "dim", "Embedding dimension: 25, 50 or 100");
  f.option<int>("--hidden", "hidden", "LSTM units per direction");
  f.option<double>("--dropout", "dropout", "Dropout probability on the sentence representation");
  f.option<double>("--lr", "lr", "Adam learning rate");
  f.option<int>("--ensemble", "ensemble", "Number of ensemble members");
  f.option<int>("--patience", "patience", "Early-stopping patience in epochs");
  f.option<int>("--max-epochs", "max_epochs", "Epoch limit per member");
  f.option<std::string>("--features", "features", "Binary feature groups: token,sentence, a subset, or none");
  f.option<int>("--min-freq", "min_freq", "Minimum train frequency for a sampled OOV vector");
  f.option<int>("--batch-size", "batch_size", "Examples per Adam step");
  f.option<int>("--threads", "threads", "Ensemble members trained concurrently");
  f.flag("--fine-tune", "fine_tune", "Update embedding rows during training");
  f.option<std::string>("--combine", "combine", "Ensemble rule: mean or majority")
      ->check(CLI::IsMember({"mean", "majority"}));
  f.flag("--track-train", "track_train", "Score the training half after every epoch");
}

void add_eval_flags(Command& cmd) {
  auto& f = *cmd.flags;
  f.option<std::string>("--checkpoint", "checkpoint", "Directory written by train");
  f.option<std::string>("--embeddings", "embeddings", "GloVe file (default: the one used in training)");
  f.option<std::string>("--subset", "subset", "Tweets to score: all, train or dev")
      ->check(CLI::IsMember({"all", "train", "dev"}));
}

void add_baseline_flags(Command& cmd) {
  auto& f = *cmd.flags;
  f.option<double>("--c", "c", "SVM regularization constant (default: 1)");
  f.option<std::string>("--stopwords", "stopwords", "Stopword file, one per line (default: bundled list)");
}

struct RunConfig {
  std::string command;
  json resolved;
  fs::path data, embeddings, checkpoint, stopwords, out;
  HeaderMode header = HeaderMode::kAuto;
  double split_ratio = 0.8;
  bool stratified = false;
  PrepConfig prep;
  std::string subset;
  double c = 1.0;
  TrainConfig train;
};

HeaderMode parse_header(const std::string& s) {
  if (s == "yes") return HeaderMode::kPresent;
  if (s == "no") return HeaderMode::kAbsent;
  if (s == "auto") return HeaderMode::kAuto;
  throw ValidationError("header must be auto, yes or no (got '" + s + "')");
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ValidationError(what + " is required");
  if (!fs::is_regular_file(p)) throw ValidationError(what + " not found: " + p.string());
}

RunConfig resolve(const std::string& command, const Command& cmd) {
  json j = defaults();
  const json known = j;
  if (!cmd.config_path.empty()) {
    require_file(cmd.config_path, "config file");
    json file;
    try {
      file = read_json_file(cmd.config_path);
    } catch (const json::exception& e) {
      throw ValidationError("config file " + cmd.config_path + ": " + e.what());
    }
    if (!file.is_object()) throw ValidationError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (key == "command") {
        if (value != command) {
          log::warn("config file was written by '" + value.dump() + "', running '" + command + "'");
        }
        continue;
      }
      if (!known.contains(key)) throw ValidationError("unknown key in config file: " + key);
      j[key] = value;
    }
  }
  cmd.flags->apply(j);

  RunConfig rc;
  rc.command = command;
  try {
    rc.data = j.at("data").get<std::string>();
    rc.embeddings = j.at("embeddings").get<std::string>();
    rc.checkpoint = j.at("checkpoint").get<std::string>();
    rc.stopwords = j.at("stopwords").get<std::string>();
    rc.out = j.at("out").get<std::string>();
    rc.header = parse_header(j.at("header").get<std::string>());
    rc.split_ratio = j.at("split_ratio").get<double>();
    rc.stratified = j.at("stratified").get<bool>();
    rc.prep.remove_not = !j.at("keep_not").get<bool>();
    rc.subset = j.at("subset").get<std::string>();
    rc.c = j.at("c").get<double>();
    rc.train = train_config_from_json(j);
    rc.train.threads = j.at("threads").get<int>();
    rc.train.track_train_metrics = j.at("track_train").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad configuration value: ") + e.what());
  }

  rc.resolved = json::object();
  rc.resolved["command"] = command;
  for (const auto& key : keys_for(command)) rc.resolved[key] = j.at(key);
  return rc;
}

// Every check that can fail without touching the data runs here, before work.
void validate(const RunConfig& rc) {
  require_file(rc.data, "--data");
  if (rc.out.empty()) throw ValidationError("--out must not be empty");
  const std::string& c = rc.command;
  if (c == "train" || c == "ablate" || c == "baseline") {
    if (!(rc.split_ratio > 0.0 && rc.split_ratio < 1.0)) {
      throw ValidationError("--split-ratio must lie strictly between 0 and 1");
    }
  }
  if (c == "train" || c == "ablate") {
    rc.train.validate();
    require_file(rc.embeddings, "--embeddings");
  }
  if (c == "eval" || c == "predict") {
    if (rc.checkpoint.empty()) throw ValidationError("--checkpoint is required");
    require_file(rc.checkpoint / kManifestName, "checkpoint manifest");
    if (rc.subset != "all" && rc.subset != "train" && rc.subset != "dev") {
      throw ValidationError("--subset must be all, train or dev");
    }
    if (!rc.embeddings.empty()) require_file(rc.embeddings, "--embeddings");
  }
  if (c == "baseline") {
    if (!(rc.c > 0.0)) throw ValidationError("--c must be positive");
    if (!rc.stopwords.empty()) require_file(rc.stopwords, "--stopwords");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Loads only the embedding rows the given tweets can look up.
std::shared_ptr<const EmbeddingTable> load_embeddings(const fs::path& path, int dim,
                                                      const std::vector<Tweet>& tweets,
                                                      const PrepConfig& prep) {
  auto needed = std::make_shared<std::set<std::string, std::less<>>>();
  for (const auto& seq : tokenize_tweets(tweets, prep)) needed->insert(seq.tokens.begin(), seq.tokens.end());
  GloveLoadOptions opts;
  opts.retain = [needed](std::string_view tok) { return needed->find(tok) != needed->end(); };
  auto table = std::make_shared<EmbeddingTable>(load_glove(path, dim, opts));
  log::info("embeddings: " + std::to_string(table->file_entries) + " entries in file, " +
            std::to_string(table->tokens.size()) + " retained");
  return table;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j, int dim, const std::string& what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<int>(values.size()) != dim) {
    throw ValidationError(what + " has " + std::to_string(values.size()) + " components, expected " +
                          std::to_string(dim));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), dim);
}

// Tweets empty after cleaning cannot be encoded; they are scored as
// non-ironic.
struct Scored {
  std::vector<Prediction> predictions;
  std::vector<bool> empty;
  MetricsReport metrics;
};

Scored score_tweets(const Ensemble& ens, const std::vector<Tweet>& tweets, const Vocabulary& vocab,
                    const FeatureConfig& features, const PrepConfig& prep) {
  Scored s;
  std::vector<int> preds, golds;
  for (const auto& t : tweets) {
    TokenSeq seq = tokenize(preprocess(t.raw, prep), t.id);
    if (seq.empty()) {
      Prediction p;
      p.label = 0;
      p.probability = 0.0;
      s.predictions.push_back(p);
      s.empty.push_back(true);
    } else {
      s.predictions.push_back(ens.predict(encode(seq, vocab, features, t.label)));
      s.empty.push_back(false);
    }
    preds.push_back(s.predictions.back().label);
    golds.push_back(t.label);
  }
  s.metrics = compute_metrics(preds, golds);
  return s;
}

void report(const std::string& what, const MetricsReport& m) { std::cout << what << ": " << format_metrics(m) << "\n"; }

int cmd_prep(const RunConfig& rc) {
  const auto tweets = load_dataset(rc.data, rc.header);
  std::string lines;
  for (const auto& t : tweets) {
    const TokenSeq seq = tokenize(preprocess(t.raw, rc.prep), t.id);
    lines += json{{"id", t.id}, {"label", t.label}, {"tokens", seq.tokens}}.dump() + "\n";
  }
  write_text(rc.out / "tokens.jsonl", lines);
  std::cout << "wrote " << tweets.size() << " tweets to " << (rc.out / "tokens.jsonl").string() << "\n";
  return 0;
}

struct Prepared {
  Split split;
  std::shared_ptr<const EmbeddingTable> table;
  std::unique_ptr<Vocabulary> vocab;
};

Prepared prepare_training(const RunConfig& rc) {
  const auto tweets = load_dataset(rc.data, rc.header);
  if (tweets.size() < 2) throw ValidationError("need at least two tweets to split");
  Prepared p;
  p.split = split_dataset(tweets, rc.split_ratio, rc.train.seed, rc.stratified);
  log::info("split: " + std::to_string(p.split.train.size()) + " train, " + std::to_string(p.split.dev.size()) +
            " dev");
  if (p.split.dev.empty()) throw ValidationError("development split is empty; lower --split-ratio");
  p.table = load_embeddings(rc.embeddings, rc.train.embed_dim, tweets, rc.prep);
  p.vocab = std::make_unique<Vocabulary>(build_task_vocabulary(p.split.train, p.table, rc.train, rc.prep));
  log::info("vocabulary: " + std::to_string(p.vocab->oov().size()) + " sampled OOV vectors");
  return p;
}

TrainHooks progress_hooks() {
  TrainHooks hooks;
  hooks.on_epoch = [](std::uint64_t seed, const EpochRecord& rec) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "seed %llu epoch %d: loss %.6f dev f1 %.4f%s",
                  static_cast<unsigned long long>(seed), rec.epoch, rec.train_loss, rec.dev.f1,
                  rec.improved ? " *" : "");
    log::info(buf);
  };
  return hooks;
}

int cmd_train(const RunConfig& rc) {
  Prepared p = prepare_training(rc);
  const auto train = encode_tweets(p.split.train, *p.vocab, rc.train.features, rc.prep);
  const auto dev = encode_tweets(p.split.dev, *p.vocab, rc.train.features, rc.prep);
  if (train.empty() || dev.empty()) throw ValidationError("no encodable tweets left after cleaning");
  const Ensemble ens = train_ensemble(rc.train, train, dev, progress_hooks());

  json members = json::array();
  json history = json::array();
  for (std::size_t i = 0; i < ens.members.size(); ++i) {
    const TrainedModel& m = ens.members[i];
    const std::string name = "member_" + std::to_string(i) + ".json";
    json tuned = json::object();
    for (const auto& [tok, vec] : m.embeddings) tuned[tok] = vector_to_json(vec);
    save_checkpoint(m.params, rc.out / name,
                    {{"member", i},
                     {"best_epoch", m.best_epoch},
                     {"best_dev_f1", m.best_dev_f1},
                     {"embed_dim", m.embed_dim},
                     {"embeddings", tuned}});
    members.push_back(name);
    json epochs = json::array();
    for (const auto& rec : m.history) epochs.push_back(epoch_to_json(rec));
    history.push_back({{"member", i},
                       {"seed", m.seed},
                       {"best_epoch", m.best_epoch},
                       {"best_dev_f1", m.best_dev_f1},
                       {"epochs", epochs}});
  }

  json oov = json::object();
  for (const auto& [tok, vec] : p.vocab->oov()) oov[tok] = vector_to_json(vec);
  const json manifest = {{"format", kManifestFormat},
                         {"version", kManifestVersion},
                         {"config", train_config_to_json(rc.train)},
                         {"members", members},
                         {"embeddings", fs::absolute(rc.embeddings).lexically_normal().string()},
                         {"keep_not", !rc.prep.remove_not},
                         {"split", {{"ratio", rc.split_ratio}, {"seed", rc.train.seed}, {"stratified", rc.stratified}}},
                         {"header", rc.resolved.at("header")},
                         {"oov", oov},
                         {"unk", vector_to_json(p.vocab->unk())}};
  write_json_file(rc.out / kManifestName, manifest);
  write_json_file(rc.out / "history.json", history);

  const Scored dev_scores = score_tweets(ens, p.split.dev, *p.vocab, rc.train.features, rc.prep);
  write_json_file(rc.out / "metrics.json", metrics_to_json(dev_scores.metrics));
  report("dev", dev_scores.metrics);
  return 0;
}

struct LoadedEnsemble {
  Ensemble ens;
  TrainConfig cfg;
  PrepConfig prep;
  json manifest;
  std::shared_ptr<const EmbeddingTable> table;
  std::unique_ptr<Vocabulary> vocab;
};

LoadedEnsemble load_ensemble(const RunConfig& rc, const std::vector<Tweet>& tweets) {
  LoadedEnsemble le;
  json& man = le.manifest;
  man = read_json_file(rc.checkpoint / kManifestName);
  try {
    if (man.at("format") != kManifestFormat || man.at("version") != kManifestVersion) {
      throw ValidationError("unsupported checkpoint manifest in " + rc.checkpoint.string());
    }
    le.cfg = train_config_from_json(man.at("config"));
    le.prep.remove_not = !man.at("keep_not").get<bool>();
    const fs::path emb = rc.embeddings.empty() ? fs::path(man.at("embeddings").get<std::string>()) : rc.embeddings;
    require_file(emb, "embeddings");
    std::vector<std::string> member_files = man.at("members").get<std::vector<std::string>>();
    for (const auto& f : member_files) require_file(rc.checkpoint / f, "ensemble member");

    const int dim = le.cfg.embed_dim;
    std::map<std::string, Eigen::VectorXd> oov;
    for (const auto& [tok, vec] : man.at("oov").items()) oov.emplace(tok, vector_from_json(vec, dim, "OOV vector"));
    Eigen::VectorXd unk = vector_from_json(man.at("unk"), dim, "UNK vector");

    le.table = load_embeddings(emb, dim, tweets, le.prep);
    le.vocab = std::make_unique<Vocabulary>(
        Vocabulary::restore(le.table, std::move(oov), std::move(unk), le.cfg.min_freq, le.cfg.seed));

    le.ens.combine = le.cfg.combine;
    for (const auto& f : member_files) {
      json doc;
      TrainedModel m;
      m.params = load_checkpoint(rc.checkpoint / f, &doc);
      m.embed_dim = doc.value("embed_dim", dim);
      m.best_epoch = doc.value("best_epoch", 0);
      m.best_dev_f1 = doc.value("best_dev_f1", 0.0);
      m.seed = m.params.seed;
      if (doc.contains("embeddings")) {
        for (const auto& [tok, vec] : doc.at("embeddings").items()) {
          m.embeddings.emplace(tok, vector_from_json(vec, dim, "fine-tuned vector"));
        }
      }
      if (m.params.input_dim != le.cfg.features.input_width(dim)) {
        throw ValidationError("member " + f + " expects input width " + std::to_string(m.params.input_dim) +
                              ", configuration gives " + std::to_string(le.cfg.features.input_width(dim)));
      }
      le.ens.members.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  return le;
}

std::vector<Tweet> select_subset(const RunConfig& rc, const json& manifest, std::vector<Tweet> tweets) {
  if (rc.subset == "all") return tweets;
  const json& s = manifest.at("split");
  Split split = split_dataset(tweets, s.at("ratio").get<double>(), s.at("seed").get<std::uint64_t>(),
                              s.at("stratified").get<bool>());
  return rc.subset == "train" ? split.train : split.dev;
}

int cmd_eval(const RunConfig& rc, bool write_predictions) {
  const json manifest = read_json_file(rc.checkpoint / kManifestName);
  const auto tweets = select_subset(rc, manifest, load_dataset(rc.data, rc.header));
  if (tweets.empty()) throw ValidationError("no tweets to score");
  LoadedEnsemble le = load_ensemble(rc, tweets);
  const Scored s = score_tweets(le.ens, tweets, *le.vocab, le.cfg.features, le.prep);
  const auto n_empty = std::count(s.empty.begin(), s.empty.end(), true);
  if (n_empty > 0) log::info(std::to_string(n_empty) + " tweets were empty after cleaning and scored as 0");

  if (write_predictions) {
    std::string text = "id\tgold\tprediction\tprobability\n";
    char buf[64];
    for (std::size_t i = 0; i < tweets.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", s.predictions[i].probability);
      text += std::to_string(tweets[i].id) + "\t" + std::to_string(tweets[i].label) + "\t" +
              std::to_string(s.predictions[i].label) + "\t" + (s.empty[i] ? std::string("NA") : std::string(buf)) +
              "\n";
    }
    write_text(rc.out / "predictions.tsv", text);
  }
  write_json_file(rc.out / "metrics.json", metrics_to_json(s.metrics));
  report(rc.subset, s.metrics);
  return 0;
}

int cmd_ablate(const RunConfig& rc) {
  Prepared p = prepare_training(rc);
  const AblationTable table = ablate(rc.train, p.split, *p.vocab, rc.prep);
  json doc = ablation_to_json(table);
  doc["base_features"] = format_feature_list(rc.train.features);
  write_json_file(rc.out / "ablation.json", doc);
  const std::string text = format_ablation_table(table);
  write_text(rc.out / "ablation.txt", text);
  std::cout << text;
  return 0;
}

int cmd_baseline(const RunConfig& rc) {
  const auto tweets = load_dataset(rc.data, rc.header);
  if (tweets.size() < 2) throw ValidationError("need at least two tweets to split");
  const Split split = split_dataset(tweets, rc.split_ratio, rc.train.seed, rc.stratified);
  BaselineConfig cfg;
  cfg.C = rc.c;
  cfg.prep = rc.prep;
  if (!rc.stopwords.empty()) cfg.stopwords = load_stopwords(rc.stopwords);
  const BaselineResult res = baseline_run(split.train, split.dev, cfg);
  log::info("baseline: " + std::to_string(res.vocabulary_size) + " terms, objective " +
            std::to_string(res.objective));
  write_json_file(rc.out / "metrics.json", metrics_to_json(res.metrics));
  report("dev", res.metrics);
  return 0;
}

int dispatch(const RunConfig& rc) {
  validate(rc);
  std::error_code ec;
  fs::create_directories(rc.out, ec);
  if (ec) throw IoError("cannot create output directory " + rc.out.string() + ": " + ec.message());
  write_json_file(rc.out / "run.json", rc.resolved);
  const std::string& c = rc.command;
  if (c == "prep") return cmd_prep(rc);
  if (c == "train") return cmd_train(rc);
  if (c == "eval") return cmd_eval(rc, false);
  if (c == "predict") return cmd_eval(rc, true);
  if (c == "ablate") return cmd_ablate(rc);
  return cmd_baseline(rc);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Irony detection in tweets: BiLSTM ensemble and TF-IDF/SVM baseline", "irony"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  std::vector<std::pair<std::string, Command>> commands;
  auto add = [&](const std::string& name, const std::string& help) -> Command& {
    Command& cmd = commands.emplace_back(name, Command{}).second;
    cmd.app = app.add_subcommand(name, help);
    cmd.flags = std::make_unique<Flags>(cmd.app);
    add_common(cmd);
    return cmd;
  };
  commands.reserve(6);

  Command& prep = add("prep", "Clean and tokenize a dataset into tokens.jsonl");
  add_prep_flags(prep);
  Command& train = add("train", "Train the BiLSTM ensemble and score the development split");
  add_prep_flags(train);
  add_split_flags(train);
  add_train_flags(train);
  Command& eval = add("eval", "Score a trained ensemble on a dataset");
  add_eval_flags(eval);
  Command& predict = add("predict", "Write per-tweet predictions of a trained ensemble");
  add_eval_flags(predict);
  Command& abl = add("ablate", "Train with each feature group on and off");
  add_prep_flags(abl);
  add_split_flags(abl);
  add_train_flags(abl);
  Command& base = add("baseline", "TF-IDF bag of words with a linear SVM");
  add_prep_flags(base);
  add_split_flags(base);
  add_baseline_flags(base);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  log::set_level(quiet ? log::Level::kError : verbose ? log::Level::kDebug : log::Level::kInfo);

  for (auto& [name, cmd] : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      return dispatch(resolve(name, cmd));
    } catch (const ValidationError& e) {
      std::cerr << "irony " << name << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "irony " << name << ": " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace irony::cli
