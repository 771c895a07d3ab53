#include "irony/feats.hpp"

#include <unordered_set>

#include "irony/error.hpp"

namespace irony {
namespace {

bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

}  // namespace

FeatureConfig parse_feature_list(std::string_view list) {
  FeatureConfig cfg{false, false};
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    std::string_view item = list.substr(start, comma == std::string_view::npos ? list.npos : comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "token") {
      cfg.use_token_feats = true;
    } else if (item == "sentence") {
      cfg.use_sentence_feats = true;
    } else if (!item.empty() && item != "none") {
      throw ValidationError("unknown feature group '" + std::string(item) +
                            "' (expected token, sentence or none)");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cfg;
}

std::string format_feature_list(const FeatureConfig& cfg) {
  if (cfg.use_token_feats && cfg.use_sentence_feats) return "token,sentence";
  if (cfg.use_token_feats) return "token";
  if (cfg.use_sentence_feats) return "sentence";
  return "none";
}

WordBits word_features(std::string_view token) {
  int upper = 0, lower = 0, digits = 0;
  for (unsigned char c : token) {
    upper += is_upper(c);
    lower += is_lower(c);
    digits += is_digit(c);
  }
  const bool cased = upper + lower > 0;
  bool capitalized = false;
  if (!token.empty() && is_upper(static_cast<unsigned char>(token.front()))) {
    capitalized = upper == 1;
  }
  return {cased && upper == 0 ? 1.0 : 0.0, cased && lower == 0 ? 1.0 : 0.0,
          capitalized ? 1.0 : 0.0, digits > 0 ? 1.0 : 0.0};
}

SentenceBits sentence_features(std::span<const std::string> tokens) {
  SentenceBits bits{0.0, 0.0, 0.0};
  std::unordered_set<std::string_view> seen;
  for (const auto& tok : tokens) {
    auto w = word_features(tok);
    if (w[0] > 0) bits[0] = 1.0;
    if (w[1] > 0) bits[1] = 1.0;
    if (!seen.insert(tok).second) bits[2] = 1.0;
  }
  return bits;
}

EncodedExample encode(const TokenSeq& tokens, const Vocabulary& vocab, const FeatureConfig& cfg,
                      int label) {
  if (tokens.empty()) {
    throw ValidationError("cannot encode empty token sequence (tweet " +
                          std::to_string(tokens.source_id) + ")");
  }
  const int d = vocab.dim();
  const auto rows = static_cast<Eigen::Index>(tokens.size());
  EncodedExample ex;
  ex.x.resize(rows, cfg.input_width(d));
  ex.y = label;
  ex.id = tokens.source_id;
  ex.tokens = tokens.tokens;
  const SentenceBits sent = sentence_features(tokens.tokens);
  for (Eigen::Index t = 0; t < rows; ++t) {
    const auto& tok = tokens.tokens[static_cast<std::size_t>(t)];
    auto vec = vocab.lookup(tok);
    Eigen::Index col = 0;
    for (; col < d; ++col) ex.x(t, col) = vec[static_cast<std::size_t>(col)];
    if (cfg.use_token_feats) {
      for (double b : word_features(tok)) ex.x(t, col++) = b;
    }
    if (cfg.use_sentence_feats) {
      for (double b : sent) ex.x(t, col++) = b;
    }
  }
  return ex;
}

}  // namespace irony
