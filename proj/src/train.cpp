#include "irony/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "irony/error.hpp"
#include "irony/log.hpp"

namespace irony {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kDropoutStream = 3;

// Input matrix with fine-tuned rows substituted into the embedding columns.
Eigen::MatrixXd with_overrides(const EncodedExample& ex, const EmbeddingOverrides& emb, int embed_dim) {
  Eigen::MatrixXd x = ex.x;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    auto it = emb.find(ex.tokens[static_cast<std::size_t>(t)]);
    if (it != emb.end()) x.row(t).head(embed_dim) = it->second.transpose();
  }
  return x;
}

double probability_of(const ModelParams& params, const EmbeddingOverrides& emb, int embed_dim,
                      const EncodedExample& ex) {
  if (emb.empty()) return predict_proba(params, ex.x);
  return predict_proba(params, with_overrides(ex, emb, embed_dim));
}

MetricsReport score(const ModelParams& params, const EmbeddingOverrides& emb, int embed_dim,
                    const std::vector<EncodedExample>& examples) {
  std::vector<int> preds, golds;
  preds.reserve(examples.size());
  golds.reserve(examples.size());
  for (const auto& ex : examples) {
    preds.push_back(probability_of(params, emb, embed_dim, ex) >= 0.5 ? 1 : 0);
    golds.push_back(ex.y);
  }
  return compute_metrics(preds, golds);
}

void check_widths(const std::vector<EncodedExample>& examples, Eigen::Index width, const char* which) {
  for (const auto& ex : examples) {
    if (ex.x.cols() != width) {
      throw ValidationError(std::string(which) + " example " + std::to_string(ex.id) + " has input width " +
                            std::to_string(ex.x.cols()) + ", expected " + std::to_string(width));
    }
    if (ex.x.rows() < 1) throw ValidationError(std::string(which) + " example with no tokens");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (embed_dim != 25 && embed_dim != 50 && embed_dim != 100) {
    throw ValidationError("embedding dimension must be 25, 50 or 100 (got " + std::to_string(embed_dim) + ")");
  }
  if (hidden < 1) throw ValidationError("hidden size must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ValidationError("dropout must lie in [0, 1)");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  if (ensemble_size < 1) throw ValidationError("ensemble size must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (patience < 1) throw ValidationError("patience must be at least 1");
  if (max_epochs < 1) throw ValidationError("max epochs must be at least 1");
  if (min_freq < 1) throw ValidationError("min_freq must be at least 1");
  if (threads < 1) throw ValidationError("threads must be at least 1");
}

std::string combine_name(Combine c) { return c == Combine::kMean ? "mean" : "majority"; }

Combine parse_combine(std::string_view name) {
  if (name == "mean") return Combine::kMean;
  if (name == "majority") return Combine::kMajority;
  throw ValidationError("unknown ensemble combination rule '" + std::string(name) + "'");
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"dim", cfg.embed_dim},
          {"hidden", cfg.hidden},
          {"dropout", cfg.dropout_p},
          {"lr", cfg.lr},
          {"features", format_feature_list(cfg.features)},
          {"seed", cfg.seed},
          {"ensemble", cfg.ensemble_size},
          {"batch_size", cfg.batch_size},
          {"patience", cfg.patience},
          {"max_epochs", cfg.max_epochs},
          {"min_freq", cfg.min_freq},
          {"fine_tune", cfg.fine_tune},
          {"combine", combine_name(cfg.combine)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig cfg) {
  try {
    if (j.contains("dim")) cfg.embed_dim = j.at("dim").get<int>();
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<int>();
    if (j.contains("dropout")) cfg.dropout_p = j.at("dropout").get<double>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("features")) cfg.features = parse_feature_list(j.at("features").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("ensemble")) cfg.ensemble_size = j.at("ensemble").get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("patience")) cfg.patience = j.at("patience").get<int>();
    if (j.contains("max_epochs")) cfg.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("min_freq")) cfg.min_freq = j.at("min_freq").get<int>();
    if (j.contains("fine_tune")) cfg.fine_tune = j.at("fine_tune").get<bool>();
    if (j.contains("combine")) cfg.combine = parse_combine(j.at("combine").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad training configuration: ") + e.what());
  }
  return cfg;
}

nlohmann::json epoch_to_json(const EpochRecord& rec) {
  nlohmann::json j = {{"epoch", rec.epoch},
                      {"train_loss", rec.train_loss},
                      {"dev", metrics_to_json(rec.dev)},
                      {"improved", rec.improved}};
  if (rec.train) j["train"] = metrics_to_json(*rec.train);
  return j;
}

TrainedModel train_model(const TrainConfig& cfg, const std::vector<EncodedExample>& train,
                         const std::vector<EncodedExample>& dev, std::uint64_t seed,
                         const TrainHooks& hooks) {
  cfg.validate();
  if (train.empty() || dev.empty()) throw ValidationError("training and development sets must be non-empty");
  const Eigen::Index width = train.front().x.cols();
  check_widths(train, width, "train");
  check_widths(dev, width, "dev");
  if (cfg.fine_tune && width < cfg.embed_dim) {
    throw ValidationError("input width is smaller than the embedding dimension");
  }

  TrainedModel out;
  out.seed = seed;
  out.embed_dim = cfg.embed_dim;

  ModelParams params = init_params(static_cast<int>(width), cfg.hidden, cfg.dropout_p,
                                   mix_seed(seed, kInitStream));
  params.seed = seed;
  AdamHyper hyper;
  hyper.lr = cfg.lr;
  AdamState adam = AdamState::for_params(params, hyper);
  RowAdam row_adam(hyper);
  EmbeddingOverrides emb;
  Rng dropout_rng(mix_seed(seed, kDropoutStream));
  EarlyStopState stopper;
  stopper.patience = cfg.patience;

  ModelParams best = params;
  EmbeddingOverrides best_emb;
  Gradients batch_grad = Weights::zeros(params.input_dim, params.hidden);
  std::map<std::string, Eigen::VectorXd> emb_grad;
  std::vector<std::size_t> order(train.size());
  const auto d = static_cast<Eigen::Index>(cfg.embed_dim);

  auto apply_embedding_grads = [&](double scale) {
    for (auto& [tok, g] : emb_grad) {
      Eigen::VectorXd& row = emb.at(tok);
      Eigen::VectorXd scaled = scale * g;
      row_adam.step(tok, std::span<double>(row.data(), static_cast<std::size_t>(row.size())),
                    std::span<const double>(scaled.data(), static_cast<std::size_t>(scaled.size())));
    }
    emb_grad.clear();
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix_seed(mix_seed(seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    int in_batch = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const EncodedExample& ex = train[order[pos]];
      if (cfg.fine_tune) {
        for (Eigen::Index t = 0; t < ex.x.rows(); ++t) {
          const auto& tok = ex.tokens[static_cast<std::size_t>(t)];
          if (!emb.contains(tok)) emb.emplace(tok, ex.x.row(t).head(d).transpose());
        }
      }
      const Eigen::MatrixXd x_tuned = cfg.fine_tune ? with_overrides(ex, emb, cfg.embed_dim) : Eigen::MatrixXd();
      const Eigen::MatrixXd& x = cfg.fine_tune ? x_tuned : ex.x;

      Eigen::VectorXd mask = sample_dropout_mask(2 * params.hidden, params.dropout_p, dropout_rng);
      BackwardResult res = backward(params, x, ex.y, mask);
      if (hooks.on_backward) hooks.on_backward(ex);
      if (!std::isfinite(res.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on tweet " +
                           std::to_string(ex.id));
      }
      loss_sum += res.loss;

      if (cfg.fine_tune) {
        for (Eigen::Index t = 0; t < ex.x.rows(); ++t) {
          const auto& tok = ex.tokens[static_cast<std::size_t>(t)];
          auto [it, fresh] = emb_grad.try_emplace(tok, Eigen::VectorXd::Zero(d));
          it->second += res.dx.row(t).head(d).transpose();
        }
      }

      if (cfg.batch_size == 1) {
        adam_step(adam, params, res.grads);
        if (cfg.fine_tune) apply_embedding_grads(1.0);
        continue;
      }
      batch_grad.add_scaled(res.grads, 1.0);
      ++in_batch;
      if (in_batch == cfg.batch_size || pos + 1 == order.size()) {
        const double scale = 1.0 / in_batch;
        Gradients mean = Weights::zeros(params.input_dim, params.hidden);
        mean.add_scaled(batch_grad, scale);
        adam_step(adam, params, mean);
        if (cfg.fine_tune) apply_embedding_grads(scale);
        batch_grad.set_zero();
        in_batch = 0;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.dev = score(params, emb, cfg.embed_dim, dev);
    if (cfg.track_train_metrics) rec.train = score(params, emb, cfg.embed_dim, train);
    const EarlyStopUpdate upd = early_stop_update(stopper, epoch, rec.dev.f1);
    rec.improved = upd.improved;
    if (upd.improved) {
      best = params;
      best_emb = emb;
    }
    out.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(seed, rec);
    if (upd.decision == StopDecision::kStop) break;
  }

  out.params = std::move(best);
  out.embeddings = std::move(best_emb);
  out.best_epoch = stopper.best_epoch;
  out.best_dev_f1 = stopper.best_metric;
  return out;
}

double model_probability(const TrainedModel& model, const EncodedExample& example) {
  return probability_of(model.params, model.embeddings, model.embed_dim, example);
}

Prediction combine_probabilities(std::span<const double> member_probabilities, Combine rule) {
  if (member_probabilities.empty()) throw ValidationError("cannot combine an empty ensemble");
  Prediction out;
  out.member_probabilities.assign(member_probabilities.begin(), member_probabilities.end());
  std::vector<double> sorted = out.member_probabilities;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  if (rule == Combine::kMean) {
    double sum = 0.0;
    for (double p : sorted) sum += p;
    out.probability = sum / n;
    out.label = out.probability >= 0.5 ? 1 : 0;
  } else {
    const auto votes = std::count_if(sorted.begin(), sorted.end(), [](double p) { return p >= 0.5; });
    out.probability = static_cast<double>(votes) / n;
    out.label = 2 * votes >= static_cast<long>(sorted.size()) ? 1 : 0;
  }
  return out;
}

Prediction Ensemble::predict(const EncodedExample& example) const {
  std::vector<double> probs;
  probs.reserve(members.size());
  for (const auto& m : members) probs.push_back(model_probability(m, example));
  return combine_probabilities(probs, combine);
}

std::vector<Prediction> Ensemble::predict_all(const std::vector<EncodedExample>& examples) const {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(ex));
  return out;
}

Ensemble train_ensemble(const TrainConfig& cfg, const std::vector<EncodedExample>& train,
                        const std::vector<EncodedExample>& dev, const TrainHooks& hooks) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.ensemble_size);
  Ensemble ens;
  ens.combine = cfg.combine;
  ens.members.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        ens.members[i] = train_model(cfg, train, dev, cfg.seed + i, hooks);
        log::info("member " + std::to_string(i) + " (seed " + std::to_string(cfg.seed + i) +
                  "): best epoch " + std::to_string(ens.members[i].best_epoch) + ", dev " +
                  format_metrics(ens.members[i].history[static_cast<std::size_t>(ens.members[i].best_epoch - 1)].dev));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.threads));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return ens;
}

MetricsReport evaluate(const Ensemble& ens, const std::vector<EncodedExample>& examples) {
  std::vector<int> preds, golds;
  for (const auto& ex : examples) {
    preds.push_back(ens.predict(ex).label);
    golds.push_back(ex.y);
  }
  return compute_metrics(preds, golds);
}

MetricsReport evaluate_model(const TrainedModel& model, const std::vector<EncodedExample>& examples) {
  return score(model.params, model.embeddings, model.embed_dim, examples);
}

std::vector<TokenSeq> tokenize_tweets(const std::vector<Tweet>& tweets, const PrepConfig& prep) {
  std::vector<TokenSeq> out;
  out.reserve(tweets.size());
  for (const auto& t : tweets) out.push_back(tokenize(preprocess(t.raw, prep), t.id));
  return out;
}

std::vector<EncodedExample> encode_tweets(const std::vector<Tweet>& tweets, const Vocabulary& vocab,
                                          const FeatureConfig& features, const PrepConfig& prep,
                                          std::size_t* dropped) {
  std::vector<EncodedExample> out;
  out.reserve(tweets.size());
  std::size_t n_dropped = 0;
  for (const auto& t : tweets) {
    TokenSeq seq = tokenize(preprocess(t.raw, prep), t.id);
    if (seq.empty()) {
      ++n_dropped;
      continue;
    }
    out.push_back(encode(seq, vocab, features, t.label));
  }
  if (n_dropped > 0) log::info("dropped " + std::to_string(n_dropped) + " tweets that are empty after cleaning");
  if (dropped != nullptr) *dropped = n_dropped;
  return out;
}

Vocabulary build_task_vocabulary(const std::vector<Tweet>& train, std::shared_ptr<const EmbeddingTable> table,
                                 const TrainConfig& cfg, const PrepConfig& prep) {
  return Vocabulary::build(tokenize_tweets(train, prep), std::move(table), cfg.min_freq, cfg.seed);
}

Ensemble train_ensemble(const TrainConfig& cfg, const Split& data, const Vocabulary& vocab,
                        const PrepConfig& prep, const TrainHooks& hooks) {
  auto train = encode_tweets(data.train, vocab, cfg.features, prep);
  auto dev = encode_tweets(data.dev, vocab, cfg.features, prep);
  return train_ensemble(cfg, train, dev, hooks);
}

AblationTable ablate(const TrainConfig& base, const ConfigEvaluator& evaluate_config) {
  AblationTable table;
  for (bool token : {true, false}) {
    for (bool sentence : {true, false}) {
      TrainConfig cfg = base;
      cfg.features = {token, sentence};
      table.grid.push_back({token, sentence, evaluate_config(cfg)});
    }
  }
  auto cell = [&](bool token, bool sentence) {
    for (const auto& c : table.grid) {
      if (c.token == token && c.sentence == sentence) return c.dev.f1;
    }
    return 0.0;
  };
  table.token_yes = cell(true, base.features.use_sentence_feats);
  table.token_no = cell(false, base.features.use_sentence_feats);
  table.sentence_yes = cell(base.features.use_token_feats, true);
  table.sentence_no = cell(base.features.use_token_feats, false);
  return table;
}

AblationTable ablate(const TrainConfig& base, const Split& data, const Vocabulary& vocab,
                     const PrepConfig& prep) {
  return ablate(base, [&](const TrainConfig& cfg) {
    auto train = encode_tweets(data.train, vocab, cfg.features, prep);
    auto dev = encode_tweets(data.dev, vocab, cfg.features, prep);
    log::info("ablation: features=" + format_feature_list(cfg.features));
    return evaluate(train_ensemble(cfg, train, dev), dev);
  });
}

nlohmann::json ablation_to_json(const AblationTable& table) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& c : table.grid) {
    grid.push_back({{"token", c.token}, {"sentence", c.sentence}, {"dev", metrics_to_json(c.dev)}});
  }
  return {{"table",
           {{"token_level", {{"yes", table.token_yes}, {"no", table.token_no}}},
            {"sentence_level", {{"yes", table.sentence_yes}, {"no", table.sentence_no}}}}},
          {"metric", "dev_f1"},
          {"grid", grid}};
}

std::string format_ablation_table(const AblationTable& table) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-16s %-8s %-8s\n%-16s %-8.4f %-8.4f\n%-16s %-8.4f %-8.4f\n", "Feature", "Yes", "No",
                "Token-level", table.token_yes, table.token_no, "Sentence-level", table.sentence_yes,
                table.sentence_no);
  return buf;
}

}  // namespace irony
