#include "irony/embed.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "irony/error.hpp"
#include "irony/log.hpp"
#include "irony/rng.hpp"

namespace irony {
namespace {

struct GloveLine {
  std::string_view token;
  std::string_view rest;
};

std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

GloveLine split_token(std::string_view line) {
  std::size_t sp = line.find(' ');
  if (sp == std::string_view::npos) return {line, {}};
  return {line.substr(0, sp), line.substr(sp + 1)};
}

std::size_t count_fields(std::string_view rest) {
  std::size_t n = 0;
  bool in_field = false;
  for (char c : rest) {
    bool space = c == ' ' || c == '\t';
    if (!space && !in_field) ++n;
    in_field = !space;
  }
  return n;
}

void parse_floats(std::string_view rest, double* out, int dim, const std::string& source,
                  std::size_t line_no) {
  const char* p = rest.data();
  const char* end = rest.data() + rest.size();
  for (int j = 0; j < dim; ++j) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    auto [next, ec] = std::from_chars(p, end, out[j]);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t')) {
      throw ParseError(source, line_no, "malformed float in component " + std::to_string(j + 1));
    }
    p = next;
  }
}

std::size_t low_freq_size(std::size_t v) { return (v + 9) / 10; }

// Two passes: the first validates every line and counts unique entries so the
// low-frequency suffix is known before any vector is materialized.
template <class Reopen>
EmbeddingTable load_impl(Reopen&& reopen, int dim, const GloveLoadOptions& opts,
                         const std::string& source) {
  if (dim <= 0) throw ValidationError("embedding dimension must be positive");
  std::vector<bool> is_first;
  {
    auto in = reopen();
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(*in, line)) {
      ++line_no;
      std::string_view view = strip_eol(line);
      if (view.empty()) {
        is_first.push_back(false);
        continue;
      }
      auto [token, rest] = split_token(view);
      std::size_t n = count_fields(rest);
      if (n != static_cast<std::size_t>(dim)) {
        throw ParseError(source, line_no,
                         "expected " + std::to_string(dim) + " components, found " + std::to_string(n));
      }
      is_first.push_back(seen.emplace(token).second);
    }
  }

  EmbeddingTable table;
  table.dim = dim;
  for (bool f : is_first) table.file_entries += f ? 1 : 0;
  table.duplicates = 0;
  if (table.file_entries == 0) throw ParseError(source, 0, "embedding file has no entries");
  const std::size_t low_begin_unique = table.file_entries - low_freq_size(table.file_entries);

  std::vector<double> buffer;
  std::vector<double> row(static_cast<std::size_t>(dim));
  auto in = reopen();
  std::string line;
  std::size_t line_no = 0, unique_no = 0;
  bool low_marked = false;
  while (std::getline(*in, line)) {
    ++line_no;
    std::string_view view = strip_eol(line);
    if (view.empty()) continue;
    auto [token, rest] = split_token(view);
    if (!is_first[line_no - 1]) {
      ++table.duplicates;
      log::warn(source + ":" + std::to_string(line_no) + ": duplicate token '" + std::string(token) +
                "', keeping the first vector");
      continue;
    }
    const bool low = unique_no >= low_begin_unique;
    ++unique_no;
    if (!low && opts.retain && !opts.retain(token)) continue;
    if (low && !low_marked) {
      table.low_freq_begin = table.tokens.size();
      low_marked = true;
    }
    parse_floats(rest, row.data(), dim, source, line_no);
    table.index.emplace(std::string(token), table.tokens.size());
    table.tokens.emplace_back(token);
    buffer.insert(buffer.end(), row.begin(), row.end());
  }

  table.vectors = Eigen::Map<Eigen::MatrixXd>(buffer.data(), dim,
                                              static_cast<Eigen::Index>(table.tokens.size()));
  auto [centroid, radius] = sphere_prior(table.vectors.rightCols(
      static_cast<Eigen::Index>(table.low_freq_count())));
  table.centroid = std::move(centroid);
  table.radius = radius;
  return table;
}

}  // namespace

std::optional<std::size_t> EmbeddingTable::find(std::string_view token) const {
  auto it = index.find(std::string(token));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::pair<Eigen::VectorXd, double> sphere_prior(const Eigen::MatrixXd& columns) {
  const Eigen::Index n = columns.cols();
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(columns.rows());
  if (n == 0) return {centroid, 0.0};
  for (Eigen::Index j = 0; j < n; ++j) centroid += columns.col(j);
  centroid /= static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) total += (columns.col(j) - centroid).norm();
  return {centroid, total / static_cast<double>(n)};
}

EmbeddingTable load_glove(const std::filesystem::path& path, int dim, const GloveLoadOptions& opts) {
  auto reopen = [&]() {
    auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*in) throw IoError("cannot open embedding file " + path.string());
    return in;
  };
  return load_impl(reopen, dim, opts, path.string());
}

EmbeddingTable parse_glove(std::istream& in, int dim, const std::string& source) {
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto reopen = [&]() { return std::make_unique<std::istringstream>(content); };
  return load_impl(reopen, dim, {}, source);
}

Eigen::VectorXd sample_oov_vector(const Eigen::VectorXd& centroid, double radius,
                                  std::uint64_t seed) {
  if (radius < 0.0) throw ValidationError("sphere radius must be non-negative");
  if (radius == 0.0) return centroid;
  Rng rng(seed);
  Eigen::VectorXd dir(centroid.size());
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
    norm = dir.norm();
  } while (norm == 0.0);
  return centroid + (radius / norm) * dir;
}

Vocabulary Vocabulary::build(const std::vector<TokenSeq>& corpus,
                             std::shared_ptr<const EmbeddingTable> table, int min_freq,
                             std::uint64_t seed) {
  if (min_freq < 1) throw ValidationError("min_freq must be at least 1");
  Vocabulary vocab;
  vocab.table_ = std::move(table);
  vocab.min_freq_ = min_freq;
  vocab.seed_ = seed;

  std::map<std::string, int, std::less<>> counts;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq.tokens) {
      if (!vocab.table_->find(tok)) ++counts[tok];
    }
  }
  const auto& t = *vocab.table_;
  for (const auto& [tok, n] : counts) {
    if (n < min_freq) continue;
    vocab.oov_.emplace(tok, sample_oov_vector(t.centroid, t.radius, mix_seed(seed, stable_hash(tok))));
  }
  vocab.unk_ = sample_oov_vector(t.centroid, t.radius, mix_seed(seed, kUnkStream));
  return vocab;
}

Vocabulary Vocabulary::restore(std::shared_ptr<const EmbeddingTable> table,
                               std::map<std::string, Eigen::VectorXd> oov, Eigen::VectorXd unk,
                               int min_freq, std::uint64_t seed) {
  Vocabulary vocab;
  const int dim = table->dim;
  vocab.table_ = std::move(table);
  for (auto& [tok, v] : oov) {
    if (v.size() != dim) throw ValidationError("stored OOV vector for '" + tok + "' has wrong dimension");
    if (vocab.table_->find(tok)) continue;
    vocab.oov_.emplace(tok, std::move(v));
  }
  if (unk.size() != dim) throw ValidationError("stored UNK vector has wrong dimension");
  vocab.unk_ = std::move(unk);
  vocab.min_freq_ = min_freq;
  vocab.seed_ = seed;
  return vocab;
}

Vocabulary::Source Vocabulary::source(std::string_view token) const {
  if (table_->find(token)) return Source::kKnown;
  if (oov_.find(token) != oov_.end()) return Source::kOov;
  return Source::kUnk;
}

std::span<const double> Vocabulary::lookup(std::string_view token) const {
  const auto d = static_cast<std::size_t>(table_->dim);
  if (auto i = table_->find(token)) return {table_->vectors.col(static_cast<Eigen::Index>(*i)).data(), d};
  if (auto it = oov_.find(token); it != oov_.end()) return {it->second.data(), d};
  return {unk_.data(), d};
}

}  // namespace irony
