#include "irony/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>

#include "irony/error.hpp"
#include "irony/rng.hpp"

namespace irony {
namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
  });
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// floor(ratio * n); the slack absorbs products such as 0.29 * 100 = 28.999...
std::size_t train_size(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

}  // namespace

bool looks_like_header(const std::string& first_line) {
  auto fields = split_tabs(strip_cr(first_line));
  if (fields.size() != 3) return false;
  std::int64_t id = 0;
  bool label_ok = fields[1] == "0" || fields[1] == "1";
  return !parse_int(fields[0], id) || !label_ok;
}

std::vector<Tweet> parse_dataset(std::istream& in, bool has_header, const std::string& source) {
  std::vector<Tweet> tweets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && has_header) continue;
    std::string_view view = strip_cr(line);
    if (view.empty()) continue;
    auto fields = split_tabs(view);
    if (fields.size() != 3) {
      throw ParseError(source, line_no,
                       "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    Tweet t;
    if (!parse_int(fields[0], t.id)) {
      throw ParseError(source, line_no, "index is not an integer: '" + std::string(fields[0]) + "'");
    }
    if (fields[1] == "0") {
      t.label = 0;
    } else if (fields[1] == "1") {
      t.label = 1;
    } else {
      throw ParseError(source, line_no, "label must be 0 or 1, found '" + std::string(fields[1]) + "'");
    }
    if (is_blank(fields[2])) throw ParseError(source, line_no, "empty tweet text");
    t.raw = std::string(fields[2]);
    tweets.push_back(std::move(t));
  }
  if (in.bad()) throw IoError("read failure on " + source);
  return tweets;
}

std::vector<Tweet> load_dataset(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  return parse_dataset(in, has_header, path.string());
}

std::vector<Tweet> load_dataset(const std::filesystem::path& path, HeaderMode header) {
  if (header != HeaderMode::kAuto) return load_dataset(path, header == HeaderMode::kPresent);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  std::string first;
  std::getline(in, first);
  return load_dataset(path, !first.empty() && looks_like_header(first));
}

void write_dataset(std::ostream& out, const std::vector<Tweet>& tweets, const std::string& header) {
  if (!header.empty()) out << header << '\n';
  for (const auto& t : tweets) out << t.id << '\t' << t.label << '\t' << t.raw << '\n';
}

Split split_dataset(const std::vector<Tweet>& tweets, double ratio, std::uint64_t seed,
                    bool stratified) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError("split ratio must lie strictly between 0 and 1, got " + std::to_string(ratio));
  }
  if (tweets.empty()) throw ValidationError("cannot split an empty dataset");

  Split out;
  out.seed = seed;
  Rng rng(seed);
  const std::size_t n_train = train_size(tweets.size(), ratio);

  if (!stratified) {
    std::vector<std::size_t> order(tweets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < n_train ? out.train : out.dev).push_back(tweets[order[i]]);
    }
    return out;
  }

  // Per-class cuts are floored, then the remainder goes to the largest class
  // first so |train| still equals floor(ratio * N).
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < tweets.size(); ++i) by_class[tweets[i].label].push_back(i);
  std::size_t cut[2];
  for (int c = 0; c < 2; ++c) {
    rng.shuffle(std::span<std::size_t>(by_class[c]));
    cut[c] = train_size(by_class[c].size(), ratio);
  }
  while (cut[0] + cut[1] > n_train) --cut[cut[0] > 0 ? 0 : 1];
  std::size_t missing = n_train - cut[0] - cut[1];
  int big = by_class[1].size() > by_class[0].size() ? 1 : 0;
  for (int c : {big, 1 - big}) {
    while (missing > 0 && cut[c] < by_class[c].size()) {
      ++cut[c];
      --missing;
    }
  }
  std::vector<std::size_t> train_idx, dev_idx;
  for (int c = 0; c < 2; ++c) {
    train_idx.insert(train_idx.end(), by_class[c].begin(), by_class[c].begin() + cut[c]);
    dev_idx.insert(dev_idx.end(), by_class[c].begin() + cut[c], by_class[c].end());
  }
  rng.shuffle(std::span<std::size_t>(train_idx));
  rng.shuffle(std::span<std::size_t>(dev_idx));
  for (auto i : train_idx) out.train.push_back(tweets[i]);
  for (auto i : dev_idx) out.dev.push_back(tweets[i]);
  return out;
}

CorpusStats corpus_stats(const std::vector<Tweet>& tweets) {
  CorpusStats s;
  s.size = tweets.size();
  for (const auto& t : tweets) (t.label == 1 ? s.positives : s.negatives)++;
  return s;
}

}  // namespace irony
