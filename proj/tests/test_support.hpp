#ifndef INOC_TEST_SUPPORT_HPP
#define INOC_TEST_SUPPORT_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "inoc/corpus.hpp"
#include "inoc/rng.hpp"

namespace inoc::test {

inline std::string fixture_path(const std::string& name) {
  return std::string(INOC_FIXTURE_DIR) + "/" + name;
}

inline std::string asset_path(const std::string& name) {
  return std::string(INOC_ASSET_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh scratch directory under the build tree, wiped on construction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("inoc_test_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Synthetic corpus where every hypothesis is reachable by all five in-
// distribution generators plus word swap: a copula, a gazetteer place, a
// year and a count, several long lowercase words, and synonym-lexicon hits.
inline Dataset synthetic_corpus(std::size_t n, std::uint64_t seed = 17,
                                bool random_token = false) {
  static const std::vector<std::string> places = {"France", "Spain",  "Japan",
                                                  "India",  "Canada", "Norway"};
  Dataset ds;
  ds.name = "synthetic";
  ds.split_tag = "train";
  Rng rng(seed);
  const char* labels = "ECN";
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.id = "syn-" + std::to_string(i);
    ex.table_id = "tbl-" + std::to_string(i % 7);
    std::string token;
    if (random_token) {
      for (int c = 0; c < 8; ++c) token.push_back(static_cast<char>('a' + rng.below(26)));
    } else {
      token = "cargo";
    }
    int year = 1900 + static_cast<int>(i % 150);
    int count = 11 + static_cast<int>(i % 80);
    ex.hypothesis = "The vessel was launched from " + places[i % places.size()] + " in " +
                    std::to_string(year) + " and was carrying " + std::to_string(count) +
                    " boxes of " + token + " supplies.";
    ex.label = label_from_code(std::string(1, labels[i % 3]));
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

inline TableMap synthetic_tables() {
  TableMap tables;
  static const std::vector<std::string> places = {"France", "Spain",  "Japan",
                                                  "India",  "Canada", "Norway"};
  for (std::size_t t = 0; t < 7; ++t) {
    Table table;
    table.id = "tbl-" + std::to_string(t);
    table.title = "Vessel " + std::to_string(t);
    table.rows = {
        {"origin", places[t % places.size()]},
        {"year", std::to_string(1900 + 10 * t)},
        {"cargo", std::to_string(11 + t) + " boxes"},
        {"registry", "merchant fleet"},
    };
    tables.emplace(table.id, std::move(table));
  }
  return tables;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace inoc::test

#endif
