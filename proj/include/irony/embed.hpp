#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "irony/textprep.hpp"

namespace irony {

// Pre-trained vectors in GloVe text order plus the prior of the rarest entries.
//
// The low-frequency set is the last ceil(V / 10) unique entries of the file
// (GloVe files are sorted by descending corpus frequency). Its centroid is the
// mean of those vectors and its radius their mean distance to the centroid.
struct EmbeddingTable {
  int dim = 0;
  std::vector<std::string> tokens;  // file order
  Eigen::MatrixXd vectors;          // dim x tokens.size(), one column per token
  std::unordered_map<std::string, std::size_t> index;
  Eigen::VectorXd centroid;
  double radius = 0.0;

  std::size_t file_entries = 0;     // V: unique entries in the file
  std::size_t low_freq_begin = 0;   // the low-frequency set is tokens[low_freq_begin, end)
  std::size_t duplicates = 0;

  std::size_t size() const { return tokens.size(); }
  std::size_t low_freq_count() const { return tokens.size() - low_freq_begin; }
  std::optional<std::size_t> find(std::string_view token) const;
  Eigen::Map<const Eigen::VectorXd> vector(std::size_t i) const {
    return {vectors.col(static_cast<Eigen::Index>(i)).data(), dim};
  }
};

struct GloveLoadOptions {
  // When set, only entries accepted by the predicate (plus the low-frequency
  // set, which the prior needs) are materialized. Every line is still
  // validated. Lets the 1.2M-entry Twitter files load with a corpus filter.
  std::function<bool(std::string_view)> retain;
};

// Throws ParseError naming the line on a dimension mismatch; duplicate tokens
// keep their first vector and are logged.
EmbeddingTable load_glove(const std::filesystem::path& path, int dim,
                          const GloveLoadOptions& opts = {});
EmbeddingTable parse_glove(std::istream& in, int dim, const std::string& source = "<stream>");

// Recomputes (centroid, radius) for a set of column vectors.
std::pair<Eigen::VectorXd, double> sphere_prior(const Eigen::MatrixXd& columns);

// centroid + radius * u with u a uniformly random unit direction (normalized
// Gaussian draw). Deterministic for a given seed.
Eigen::VectorXd sample_oov_vector(const Eigen::VectorXd& centroid, double radius,
                                  std::uint64_t seed);

// Task vocabulary over an embedding table: table tokens keep their pre-trained
// vector, corpus tokens missing from the table with frequency >= min_freq get
// their own sphere-sampled vector, everything else maps to UNK. Immutable after
// construction.
class Vocabulary {
 public:
  enum class Source { kKnown, kOov, kUnk };

  static constexpr std::uint64_t kUnkStream = 0x756e6b2d76656374ULL;

  static Vocabulary build(const std::vector<TokenSeq>& corpus,
                          std::shared_ptr<const EmbeddingTable> table, int min_freq,
                          std::uint64_t seed);

  // Restores a vocabulary from stored OOV/UNK vectors (checkpoint path).
  static Vocabulary restore(std::shared_ptr<const EmbeddingTable> table,
                            std::map<std::string, Eigen::VectorXd> oov, Eigen::VectorXd unk,
                            int min_freq, std::uint64_t seed);

  // known > oov > unk. Never fails.
  std::span<const double> lookup(std::string_view token) const;
  Source source(std::string_view token) const;

  int dim() const { return table_->dim; }
  int min_freq() const { return min_freq_; }
  std::uint64_t seed() const { return seed_; }
  const EmbeddingTable& table() const { return *table_; }
  const std::map<std::string, Eigen::VectorXd, std::less<>>& oov() const { return oov_; }
  const Eigen::VectorXd& unk() const { return unk_; }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  std::map<std::string, Eigen::VectorXd, std::less<>> oov_;
  Eigen::VectorXd unk_;
  int min_freq_ = 2;
  std::uint64_t seed_ = 0;
};

}  // namespace irony
