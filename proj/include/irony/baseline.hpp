#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "irony/corpus.hpp"
#include "irony/metrics.hpp"
#include "irony/textprep.hpp"

namespace irony {

// The bundled 179-word English stopword list (data/stopwords_en.txt).
std::span<const std::string_view> bundled_stopwords();

using StopwordSet = std::unordered_set<std::string>;
StopwordSet default_stopwords();
// One word per line; blank lines and lines starting with '#' are skipped.
StopwordSet load_stopwords(const std::filesystem::path& path);

// Cleaning as for the neural model, then lowercasing, tokenizing and stopword
// filtering.
std::vector<std::string> baseline_tokens(std::string_view raw, const StopwordSet& stopwords,
                                         const PrepConfig& prep = {});

// Sorted (term index, weight) pairs, L2-normalized unless empty.
struct SparseDoc {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double norm() const;
  bool empty() const { return entries.empty(); }
};

double dot(const SparseDoc& a, const SparseDoc& b);

// tf = raw count, idf = ln((1 + N) / (1 + df)) + 1, weight = tf * idf, then L2
// normalization. Terms are indexed in first-appearance order; unseen terms at
// transform time are ignored.
class TfidfVectorizer {
 public:
  static std::pair<TfidfVectorizer, std::vector<SparseDoc>> fit_transform(
      const std::vector<std::vector<std::string>>& docs);

  SparseDoc transform(const std::vector<std::string>& doc) const;

  std::size_t vocabulary_size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  double idf(std::size_t term) const { return idf_[term]; }
  std::optional<std::uint32_t> index_of(const std::string& term) const;

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
};

struct LinearSvmModel {
  std::vector<double> w;
  double b = 0.0;
  double C = 1.0;

  double decision(const SparseDoc& x) const;
  int predict(const SparseDoc& x) const { return decision(x) >= 0.0 ? 1 : 0; }
};

struct SvmOptions {
  double tol = 1e-6;                  // KKT violation at which SMO stops
  std::size_t max_iterations = 10'000'000;
  std::size_t cache_megabytes = 256;  // kernel row cache
};

// Minimizes 0.5 * |w|^2 + C * sum_i max(0, 1 - y_i (w.x_i + b)) with an
// unregularized bias, by SMO on the dual with second-order working-set
// selection. Labels are 0/1 and mapped to -1/+1. Throws ValidationError unless
// both classes are present.
LinearSvmModel svm_train(std::span<const SparseDoc> X, std::span<const int> y, double C,
                         const SvmOptions& opts = {});

double svm_objective(const LinearSvmModel& model, std::span<const SparseDoc> X, std::span<const int> y,
                     double C);

struct BaselineConfig {
  double C = 1.0;
  StopwordSet stopwords = default_stopwords();
  PrepConfig prep;
  SvmOptions svm;
};

struct BaselineResult {
  MetricsReport metrics;
  std::size_t vocabulary_size = 0;
  double objective = 0.0;
};

// Fit TF-IDF on train, train the SVM, score dev. Throws on an empty dev set.
BaselineResult baseline_run(const std::vector<Tweet>& train, const std::vector<Tweet>& dev,
                            const BaselineConfig& cfg = {});

}  // namespace irony
