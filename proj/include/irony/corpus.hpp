#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace irony {

// One labeled example of the shared-task dataset.
struct Tweet {
  std::int64_t id = 0;
  int label = 0;  // 1 = ironic, 0 = non-ironic
  std::string raw;

  friend bool operator==(const Tweet&, const Tweet&) = default;
};

struct Split {
  std::vector<Tweet> train;
  std::vector<Tweet> dev;
  std::uint64_t seed = 0;
};

enum class HeaderMode { kAuto, kPresent, kAbsent };

// Parses the 3-column TSV format `index<TAB>label<TAB>text`.
// Throws ParseError (with line number) for malformed records and IoError when
// the file cannot be read.
std::vector<Tweet> load_dataset(const std::filesystem::path& path, bool has_header);
std::vector<Tweet> load_dataset(const std::filesystem::path& path, HeaderMode header);
std::vector<Tweet> parse_dataset(std::istream& in, bool has_header,
                                 const std::string& source = "<stream>");

// A first line whose index column is not an integer or whose label column is
// not 0/1 is treated as a header.
bool looks_like_header(const std::string& first_line);

void write_dataset(std::ostream& out, const std::vector<Tweet>& tweets,
                   const std::string& header = {});

// Seeded uniform shuffle; the first floor(ratio * N) tweets form the train half.
// With `stratified`, each label class is shuffled and cut separately, then the
// halves are merged and shuffled again.
Split split_dataset(const std::vector<Tweet>& tweets, double ratio, std::uint64_t seed,
                    bool stratified = false);

struct CorpusStats {
  std::size_t size = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

CorpusStats corpus_stats(const std::vector<Tweet>& tweets);

}  // namespace irony
