#include "irony/textprep.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace irony {
namespace {

constexpr std::array<std::string_view, 7> kTriggers = {
    "not", "sarc", "sarcasm", "irony", "ironic", "sarcastic", "sarcast"};

// Ordered longest-first within shared prefixes so greedy edge matching picks
// ":-)" before ":-".
constexpr std::array<std::string_view, 33> kEmoticons = {
    ":-)", ":-(", ":-D", ";-)", ":-P", ":-p", ":-/", ":'(", ">:(", "</3", "^_^", "-_-",
    ":)",  ":(",  ":D",  ";)",  ":P",  ":p",  ":O",  ":o",  ":/",  ":|",  ":*",  ":]",
    ":[",  "=)",  "=(",  "=D",  ";D",  "xD",  "XD",  "<3",  "^^"};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Non-ASCII bytes count as word characters so UTF-8 text stays inside cores.
bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) || c == '_'; }

bool is_emoticon(std::string_view s) {
  return std::find(kEmoticons.begin(), kEmoticons.end(), s) != kEmoticons.end();
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

bool contains_ci(std::string_view s, std::string_view needle) {
  for (std::size_t i = 0; i + needle.size() <= s.size(); ++i) {
    if (starts_with_ci(s.substr(i), needle)) return true;
  }
  return false;
}

template <class Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) fn(text.substr(start, i - start));
  }
}

// Longest emoticon at the start of `s` that is not glued to a following word
// character (":D!!" yes, ":Dog" no).
std::size_t leading_emoticon(std::string_view s) {
  std::size_t best = 0;
  for (auto em : kEmoticons) {
    if (!is_punct(static_cast<unsigned char>(em.front()))) continue;
    if (em.size() <= best || !s.starts_with(em)) continue;
    bool glued = em.size() < s.size() && is_word_char(static_cast<unsigned char>(em.back())) &&
                 is_word_char(static_cast<unsigned char>(s[em.size()]));
    if (!glued) best = em.size();
  }
  return best;
}

std::size_t trailing_emoticon(std::string_view s) {
  std::size_t best = 0;
  for (auto em : kEmoticons) {
    if (!is_punct(static_cast<unsigned char>(em.front()))) continue;
    if (em.size() <= best || em.size() >= s.size() || !s.ends_with(em)) continue;
    best = em.size();
  }
  return best;
}

}  // namespace

std::span<const std::string_view> trigger_words() { return kTriggers; }
std::span<const std::string_view> emoticons() { return kEmoticons; }

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_trigger(std::string_view token, const PrepConfig& cfg) {
  std::string lower = ascii_lower(token);
  std::string_view bare = lower;
  bool hashtag = bare.starts_with('#');
  if (hashtag) bare.remove_prefix(1);
  if (bare == "not") return hashtag || cfg.remove_not;
  return std::find(kTriggers.begin(), kTriggers.end(), bare) != kTriggers.end();
}

// Any piece led by '@' is dropped: real mentions ("@john") and stray "@" runs.
bool is_mention_piece(std::string_view token) { return token.starts_with('@'); }

bool is_url_piece(std::string_view token) {
  return contains_ci(token, "http://") || contains_ci(token, "https://") ||
         starts_with_ci(token, "www.");
}

std::vector<std::string> tokenize_word(std::string_view word) {
  if (word.empty()) return {};
  if (is_emoticon(word)) return {std::string(word)};

  std::vector<std::string> lead, trail;
  std::size_t b = 0, e = word.size();

  while (b < e) {
    auto c = static_cast<unsigned char>(word[b]);
    if (!is_punct(c)) break;
    if ((c == '#' || c == '@') && b + 1 < e && is_word_char(static_cast<unsigned char>(word[b + 1]))) {
      break;
    }
    if (std::size_t em = leading_emoticon(word.substr(b, e - b)); em > 0) {
      lead.emplace_back(word.substr(b, em));
      b += em;
      continue;
    }
    std::size_t run = 1;
    while (b + run < e && static_cast<unsigned char>(word[b + run]) == c) ++run;
    // "##tag": the last marker belongs to the hashtag.
    if ((c == '#' || c == '@') && b + run < e &&
        is_word_char(static_cast<unsigned char>(word[b + run]))) {
      --run;
    }
    lead.emplace_back(word.substr(b, run));
    b += run;
  }

  while (b < e) {
    std::string_view rest = word.substr(b, e - b);
    if (std::size_t em = trailing_emoticon(rest); em > 0) {
      trail.emplace_back(rest.substr(rest.size() - em));
      e -= em;
      continue;
    }
    auto c = static_cast<unsigned char>(word[e - 1]);
    if (!is_punct(c)) break;
    std::size_t run = 1;
    while (e - run > b && static_cast<unsigned char>(word[e - run - 1]) == c) ++run;
    trail.emplace_back(word.substr(e - run, run));
    e -= run;
  }

  std::vector<std::string> out = std::move(lead);
  if (b < e) out.emplace_back(word.substr(b, e - b));
  out.insert(out.end(), std::make_move_iterator(trail.rbegin()), std::make_move_iterator(trail.rend()));
  return out;
}

TokenSeq tokenize(std::string_view cleaned, std::int64_t source_id) {
  TokenSeq seq;
  seq.source_id = source_id;
  for_each_word(cleaned, [&](std::string_view word) {
    for (auto& piece : tokenize_word(word)) seq.tokens.push_back(std::move(piece));
  });
  return seq;
}

std::string preprocess(std::string_view raw, const PrepConfig& cfg) {
  std::string out;
  auto append = [&](std::string_view piece) {
    if (!out.empty()) out.push_back(' ');
    out.append(piece);
  };
  for_each_word(raw, [&](std::string_view word) {
    auto pieces = tokenize_word(word);
    auto dropped = [&](const std::string& p) {
      return is_trigger(p, cfg) || is_mention_piece(p) || is_url_piece(p);
    };
    if (std::none_of(pieces.begin(), pieces.end(), dropped)) {
      append(word);
      return;
    }
    for (const auto& p : pieces) {
      if (!dropped(p)) append(p);
    }
  });
  return out;
}

}  // namespace irony
