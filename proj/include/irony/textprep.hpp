#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace irony {

// Tokens of one cleaned tweet. Tokens are never empty, never contain
// whitespace, and keep the case of the source text.
struct TokenSeq {
  std::vector<std::string> tokens;
  std::int64_t source_id = 0;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
};

struct PrepConfig {
  // Drop the bare word "not" along with the other trigger words. The hashtag
  // "#not" is always dropped.
  bool remove_not = true;
};

// Topic-trigger words removed from the corpus, in bare and hashtag form.
std::span<const std::string_view> trigger_words();

// Emoticons the tokenizer keeps whole.
std::span<const std::string_view> emoticons();

// Removes trigger words (bare and "#"-prefixed, case-insensitive), @-mentions
// and URLs, and collapses whitespace. Matching is done on tokenizer pieces, so
// "#not!" loses "#not" and keeps "!". Idempotent.
std::string preprocess(std::string_view raw, const PrepConfig& cfg = {});

// Whitespace split followed by per-word punctuation peeling. See tokenize_word.
TokenSeq tokenize(std::string_view cleaned, std::int64_t source_id = 0);

// Splits one whitespace-free word:
//  - a word that is an emoticon stays whole;
//  - leading and trailing punctuation is peeled off the word core, one token per
//    run of a repeated character ("!!!", "...");
//  - emoticons at either edge are peeled as one token;
//  - "#" or "@" directly before a word character stays attached to the core.
std::vector<std::string> tokenize_word(std::string_view word);

bool is_trigger(std::string_view token, const PrepConfig& cfg = {});
bool is_mention_piece(std::string_view token);
bool is_url_piece(std::string_view token);

std::string ascii_lower(std::string_view text);

}  // namespace irony
