#include "selfnet/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selfnet/error.hpp"

namespace selfnet {

CrossSimilarity cross_similarity(const NormalizedTrace& a, const NormalizedTrace& b) {
  if (a.states() != b.states())
    throw Error(ErrorCode::ReferenceSetMismatch, "traces cover " + std::to_string(a.states()) + " and " +
                                                     std::to_string(b.states()) + " reference states");
  if (!a.info.reference_id.empty() && !b.info.reference_id.empty() && a.info.reference_id != b.info.reference_id)
    throw Error(ErrorCode::ReferenceSetMismatch,
                "reference sets '" + a.info.reference_id + "' and '" + b.info.reference_id + "'");

  CrossSimilarity out;
  out.source_units = a.alive_units();
  out.target_units = b.alive_units();
  const auto rows = static_cast<Eigen::Index>(out.source_units.size());
  const auto cols = static_cast<Eigen::Index>(out.target_units.size());
  Matrix left(rows, a.states());
  Matrix right(cols, b.states());
  for (Eigen::Index i = 0; i < rows; ++i) left.row(i) = a.values.row(out.source_units[static_cast<std::size_t>(i)]);
  for (Eigen::Index j = 0; j < cols; ++j) right.row(j) = b.values.row(out.target_units[static_cast<std::size_t>(j)]);
  const Vector ln = left.rowwise().norm();
  const Vector rn = right.rowwise().norm();
  out.values = left * right.transpose();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double d = ln(i) * rn(j);
      out.values(i, j) = d > 0.0 ? std::clamp(out.values(i, j) / d, -1.0, 1.0) : 0.0;
    }
  return out;
}

namespace {

// Square min-cost assignment (shortest augmenting path form of Kuhn-Munkres)
// that also returns dual potentials with cost(i,j) - u[i] - v[j] >= 0.
struct SquareSolution {
  std::vector<int> col_of_row;
  std::vector<double> u, v;
};

SquareSolution solve_square(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> row_of_col(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = row_of_col[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(row_of_col[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      row_of_col[static_cast<std::size_t>(j0)] = row_of_col[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  SquareSolution sol;
  sol.col_of_row.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) sol.col_of_row[static_cast<std::size_t>(row_of_col[static_cast<std::size_t>(j)] - 1)] = j - 1;
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  return sol;
}

// Rewrites `sol.col_of_row` into the lexicographically smallest perfect
// matching of the equality subgraph (all optimal assignments live there).
void lexicographic_optimum(const Matrix& cost, SquareSolution& sol) {
  const int n = static_cast<int>(cost.rows());
  const double eps = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff());
  auto tight = [&](int i, int j) {
    return cost(i, j) - sol.u[static_cast<std::size_t>(i)] - sol.v[static_cast<std::size_t>(j)] <= eps;
  };

  auto& col_of_row = sol.col_of_row;
  std::vector<int> row_of_col(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) row_of_col[static_cast<std::size_t>(col_of_row[static_cast<std::size_t>(i)])] = i;
  std::vector<char> fixed_col(static_cast<std::size_t>(n), 0);

  // Re-routes the matching so that row `from` reaches column `goal` through
  // an alternating path over unfixed, tight edges, never touching `banned`.
  auto augment = [&](int from, int goal, int banned) -> bool {
    std::vector<int> prev_row(static_cast<std::size_t>(n), -1);  // column -> row that reached it
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> queue{from};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int r = queue[head];
      for (int c = 0; c < n; ++c) {
        if (seen[static_cast<std::size_t>(c)] || fixed_col[static_cast<std::size_t>(c)] || c == banned || !tight(r, c))
          continue;
        seen[static_cast<std::size_t>(c)] = 1;
        prev_row[static_cast<std::size_t>(c)] = r;
        if (c == goal) {
          for (int col = goal; col >= 0;) {
            const int row = prev_row[static_cast<std::size_t>(col)];
            const int previous = col_of_row[static_cast<std::size_t>(row)];
            col_of_row[static_cast<std::size_t>(row)] = col;
            row_of_col[static_cast<std::size_t>(col)] = row;
            col = row == from ? -1 : previous;
          }
          return true;
        }
        queue.push_back(row_of_col[static_cast<std::size_t>(c)]);
      }
    }
    return false;
  };

  for (int i = 0; i < n; ++i) {
    const int current = col_of_row[static_cast<std::size_t>(i)];
    for (int j = 0; j < current; ++j) {
      if (fixed_col[static_cast<std::size_t>(j)] || !tight(i, j)) continue;
      const int displaced = row_of_col[static_cast<std::size_t>(j)];
      // tentatively give j to i; the displaced row must reach i's old column
      col_of_row[static_cast<std::size_t>(i)] = j;
      row_of_col[static_cast<std::size_t>(j)] = i;
      col_of_row[static_cast<std::size_t>(displaced)] = -1;
      fixed_col[static_cast<std::size_t>(j)] = 1;
      row_of_col[static_cast<std::size_t>(current)] = -1;
      if (augment(displaced, current, j)) break;
      // undo
      fixed_col[static_cast<std::size_t>(j)] = 0;
      col_of_row[static_cast<std::size_t>(i)] = current;
      row_of_col[static_cast<std::size_t>(current)] = i;
      col_of_row[static_cast<std::size_t>(displaced)] = j;
      row_of_col[static_cast<std::size_t>(j)] = displaced;
    }
    fixed_col[static_cast<std::size_t>(col_of_row[static_cast<std::size_t>(i)])] = 1;
  }
}

}  // namespace

Assignment hungarian_assign(const Matrix& similarity) {
  const auto rows = similarity.rows();
  const auto cols = similarity.cols();
  if (rows == 0 || cols == 0) throw Error(ErrorCode::EmptyMatrix, "assignment on an empty matrix");
  if (!similarity.allFinite()) throw Error(ErrorCode::NonFiniteValue, "similarity matrix");

  // Dummy rows/columns carry a constant, which leaves the set of optimal
  // real-entry assignments unchanged.
  const auto n = std::max(rows, cols);
  Matrix cost = Matrix::Zero(n, n);
  cost.topLeftCorner(rows, cols) = -similarity;
  SquareSolution sol = solve_square(cost);
  lexicographic_optimum(cost, sol);

  Assignment out;
  out.col_of_row.assign(static_cast<std::size_t>(rows), -1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int j = sol.col_of_row[static_cast<std::size_t>(i)];
    if (j < cols) {
      out.col_of_row[static_cast<std::size_t>(i)] = j;
      out.total += similarity(i, j);
    }
  }
  return out;
}

std::vector<std::pair<int, int>> Matching::pairs() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t s = 0; s < target_of.size(); ++s)
    if (target_of[s] >= 0) out.emplace_back(static_cast<int>(s), target_of[s]);
  return out;
}

Matching hungarian_match(const CrossSimilarity& sim, std::string source_id, std::string target_id) {
  const Assignment a = hungarian_assign(sim.values);
  Matching m;
  m.source_id = std::move(source_id);
  m.target_id = std::move(target_id);
  const int max_unit = sim.source_units.empty() ? -1 : *std::max_element(sim.source_units.begin(), sim.source_units.end());
  m.target_of.assign(static_cast<std::size_t>(max_unit + 1), -1);
  for (std::size_t r = 0; r < a.col_of_row.size(); ++r) {
    const int c = a.col_of_row[r];
    if (c >= 0) m.target_of[static_cast<std::size_t>(sim.source_units[r])] = sim.target_units[static_cast<std::size_t>(c)];
  }
  m.total_similarity = a.total;
  return m;
}

Matching match_traces(const NormalizedTrace& source, const NormalizedTrace& target) {
  Matching m = hungarian_match(cross_similarity(source, target), source.info.checkpoint_id, target.info.checkpoint_id);
  m.target_of.resize(static_cast<std::size_t>(source.neurons()), -1);
  return m;
}

bool FamilySet::complete(std::size_t k) const {
  return std::all_of(families[k].begin(), families[k].end(), [](const auto& u) { return u.has_value(); });
}

std::vector<std::size_t> FamilySet::complete_families() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < families.size(); ++k)
    if (complete(k)) out.push_back(k);
  return out;
}

std::vector<std::size_t> FamilySet::incomplete_families() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < families.size(); ++k)
    if (!complete(k)) out.push_back(k);
  return out;
}

FamilySet build_families(const std::vector<NormalizedTrace>& traces) {
  if (traces.size() < 2) throw Error(ErrorCode::ChainTooShort, "need at least two checkpoints");
  FamilySet set;
  const std::size_t len = traces.size();
  for (const auto& t : traces) set.chain.push_back(t.info.checkpoint_id);
  for (std::size_t c = 0; c + 1 < len; ++c) set.matchings.push_back(match_traces(traces[c], traces[c + 1]));

  for (int u : traces[0].alive_units()) {
    std::vector<std::optional<int>> family(len);
    family[0] = u;
    set.families.push_back(std::move(family));
  }
  for (std::size_t c = 1; c < len; ++c) {
    std::vector<char> reached(static_cast<std::size_t>(traces[c].neurons()), 0);
    const auto& m = set.matchings[c - 1];
    for (auto& family : set.families) {
      if (!family[c - 1]) continue;
      const int next = m.target_of[static_cast<std::size_t>(*family[c - 1])];
      if (next >= 0) {
        family[c] = next;
        reached[static_cast<std::size_t>(next)] = 1;
      }
    }
    // alive units nobody matched into start their own (truncated) family
    for (int u : traces[c].alive_units()) {
      if (reached[static_cast<std::size_t>(u)]) continue;
      std::vector<std::optional<int>> family(len);
      family[c] = u;
      set.families.push_back(std::move(family));
    }
  }
  return set;
}

}  // namespace selfnet
