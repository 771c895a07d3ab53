#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irony/corpus.hpp"
#include "irony/embed.hpp"
#include "irony/feats.hpp"
#include "irony/metrics.hpp"
#include "irony/neural.hpp"
#include "irony/optim.hpp"
#include "irony/textprep.hpp"

namespace irony {

enum class Combine { kMean, kMajority };

struct TrainConfig {
  int embed_dim = 100;
  int hidden = 150;
  double dropout_p = 0.1;
  double lr = 1e-4;
  FeatureConfig features;
  std::uint64_t seed = 1;
  int ensemble_size = 4;
  int batch_size = 1;
  int patience = 5;
  int max_epochs = 100;
  int min_freq = 2;
  bool fine_tune = false;
  Combine combine = Combine::kMean;
  int threads = 1;
  // Also score the training set after every epoch (eval mode).
  bool track_train_metrics = false;

  // Throws ValidationError for values outside their domains (e.g. embed_dim not
  // in {25, 50, 100}).
  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
std::string combine_name(Combine c);
Combine parse_combine(std::string_view name);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  MetricsReport dev;
  std::optional<MetricsReport> train;
  bool improved = false;
};

nlohmann::json epoch_to_json(const EpochRecord& rec);

struct TrainHooks {
  // Called once per backward pass with the example being differentiated.
  std::function<void(const EncodedExample&)> on_backward;
  std::function<void(std::uint64_t seed, const EpochRecord&)> on_epoch;
};

// Fine-tuned embedding rows, keyed by token; absent tokens keep the vocabulary
// vector.
using EmbeddingOverrides = std::map<std::string, Eigen::VectorXd, std::less<>>;

struct TrainedModel {
  ModelParams params;  // restored from the best epoch
  EmbeddingOverrides embeddings;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::uint64_t seed = 0;
  int embed_dim = 0;
};

// Online (or mini-batch) Adam training with early stopping on dev F1. The dev
// set is only ever scored, never differentiated.
TrainedModel train_model(const TrainConfig& cfg, const std::vector<EncodedExample>& train,
                         const std::vector<EncodedExample>& dev, std::uint64_t seed,
                         const TrainHooks& hooks = {});

// Eval-mode probability of one model, applying its fine-tuned rows if any.
double model_probability(const TrainedModel& model, const EncodedExample& example);

struct Prediction {
  int label = 0;
  double probability = 0.5;
  std::vector<double> member_probabilities;
};

// Mean rule: probability = mean, label = probability >= 0.5. Majority rule:
// probability = share of members voting positive, ties go positive. Summation
// runs over sorted values so member order never changes the result.
Prediction combine_probabilities(std::span<const double> member_probabilities, Combine rule);

struct Ensemble {
  std::vector<TrainedModel> members;
  Combine combine = Combine::kMean;

  Prediction predict(const EncodedExample& example) const;
  std::vector<Prediction> predict_all(const std::vector<EncodedExample>& examples) const;
};

// Member i is trained with seed cfg.seed + i; up to cfg.threads members run
// concurrently with results independent of scheduling.
Ensemble train_ensemble(const TrainConfig& cfg, const std::vector<EncodedExample>& train,
                        const std::vector<EncodedExample>& dev, const TrainHooks& hooks = {});

MetricsReport evaluate(const Ensemble& ens, const std::vector<EncodedExample>& examples);
MetricsReport evaluate_model(const TrainedModel& model, const std::vector<EncodedExample>& examples);

std::vector<TokenSeq> tokenize_tweets(const std::vector<Tweet>& tweets, const PrepConfig& prep);

// Tweets that are empty after cleaning are dropped and counted.
std::vector<EncodedExample> encode_tweets(const std::vector<Tweet>& tweets, const Vocabulary& vocab,
                                          const FeatureConfig& features, const PrepConfig& prep,
                                          std::size_t* dropped = nullptr);

// Vocabulary over the training half (OOV frequencies counted on train only).
Vocabulary build_task_vocabulary(const std::vector<Tweet>& train, std::shared_ptr<const EmbeddingTable> table,
                                 const TrainConfig& cfg, const PrepConfig& prep);

Ensemble train_ensemble(const TrainConfig& cfg, const Split& data, const Vocabulary& vocab,
                        const PrepConfig& prep, const TrainHooks& hooks = {});

struct AblationCell {
  bool token = false;
  bool sentence = false;
  MetricsReport dev;
};

// The four feature configurations plus the two-row yes/no view: each row
// toggles one group while the other stays at its value in the base config.
struct AblationTable {
  std::vector<AblationCell> grid;
  double token_yes = 0.0, token_no = 0.0;
  double sentence_yes = 0.0, sentence_no = 0.0;
};

using ConfigEvaluator = std::function<MetricsReport(const TrainConfig&)>;

AblationTable ablate(const TrainConfig& base, const ConfigEvaluator& evaluate_config);
AblationTable ablate(const TrainConfig& base, const Split& data, const Vocabulary& vocab,
                     const PrepConfig& prep);

nlohmann::json ablation_to_json(const AblationTable& table);
std::string format_ablation_table(const AblationTable& table);

}  // namespace irony
