#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "irony/embed.hpp"
#include "irony/textprep.hpp"

namespace irony {

struct FeatureConfig {
  bool use_token_feats = true;
  bool use_sentence_feats = true;

  static constexpr int kTokenBits = 4;
  static constexpr int kSentenceBits = 3;

  int extra_width() const {
    return (use_token_feats ? kTokenBits : 0) + (use_sentence_feats ? kSentenceBits : 0);
  }
  int input_width(int embed_dim) const { return embed_dim + extra_width(); }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Parses "token,sentence" style lists (any subset, "" or "none" for neither).
FeatureConfig parse_feature_list(std::string_view list);
std::string format_feature_list(const FeatureConfig& cfg);

// Case predicates are defined over ASCII letters; a token needs at least one
// cased character to count as lowercased/uppercased/capitalized.
//   [0] fully lowercased  [1] fully uppercased  [2] only first letter capitalized
//   [3] contains a digit
using WordBits = std::array<double, 4>;
WordBits word_features(std::string_view token);

//   [0] some token fully lowercased  [1] some token fully uppercased
//   [2] some token occurs at least twice (exact string match)
using SentenceBits = std::array<double, 3>;
SentenceBits sentence_features(std::span<const std::string> tokens);

// Network input for one tweet. Row t is lookup(token_t), then the token bits,
// then the sentence bits (the same on every row).
struct EncodedExample {
  Eigen::MatrixXd x;  // length x input width
  int y = 0;
  std::int64_t id = 0;
  std::vector<std::string> tokens;

  Eigen::Index length() const { return x.rows(); }
};

// Throws ValidationError on an empty token sequence.
EncodedExample encode(const TokenSeq& tokens, const Vocabulary& vocab, const FeatureConfig& cfg,
                      int label = 0);

}  // namespace irony
