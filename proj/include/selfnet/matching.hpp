#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfnet/trace.hpp"

namespace selfnet {

// Cosine similarity between the alive rows of two traces.
struct CrossSimilarity {
  Matrix values;                // alive_a x alive_b
  std::vector<int> source_units;  // trace-a unit index of each row
  std::vector<int> target_units;  // trace-b unit index of each column
};

CrossSimilarity cross_similarity(const NormalizedTrace& a, const NormalizedTrace& b);

// Maximum-similarity one-to-one assignment on a rectangular matrix.
struct Assignment {
  std::vector<int> col_of_row;  // -1 where a row stays unmatched (rows > cols)
  double total = 0.0;          // sum of matched entries, accumulated in row order
};

// Among equal-value optima the lexicographically smallest col_of_row wins.
Assignment hungarian_assign(const Matrix& similarity);

struct Matching {
  std::string source_id;
  std::string target_id;
  std::vector<int> target_of;  // indexed by source unit; -1 = unmatched or dead
  double total_similarity = 0.0;

  std::vector<std::pair<int, int>> pairs() const;
};

Matching hungarian_match(const CrossSimilarity& sim, std::string source_id = {}, std::string target_id = {});
Matching match_traces(const NormalizedTrace& source, const NormalizedTrace& target);

struct FamilySet {
  std::vector<std::string> chain;
  // families[k][c] = unit of family k in checkpoint c, nullopt where absent
  std::vector<std::vector<std::optional<int>>> families;
  std::vector<Matching> matchings;  // consecutive pairs along the chain

  bool complete(std::size_t k) const;
  std::vector<std::size_t> complete_families() const;
  std::vector<std::size_t> incomplete_families() const;
};

// Matches every consecutive pair and threads the matchings into families.
FamilySet build_families(const std::vector<NormalizedTrace>& traces);

}  // namespace selfnet
