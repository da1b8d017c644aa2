#include "selfnet/coactivation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfnet/error.hpp"

namespace selfnet {

SimilarityMatrix coactivation_matrix(const NormalizedTrace& trace) {
  const Eigen::Index h = trace.neurons();
  const Eigen::Index t = trace.states();
  SimilarityMatrix sim;
  sim.alive = trace.alive;
  sim.values = Matrix::Zero(h, h);

  // Explicit dot products (not GEMM) so identical rows give exactly G_ii == G_ij
  // and therefore a cosine of exactly 1.
  std::vector<double> norm2(static_cast<std::size_t>(h), 0.0);
  const double* base = trace.values.data();
  auto dot = [&](Eigen::Index i, Eigen::Index j) {
    const double* a = base + i * t;
    const double* b = base + j * t;
    double s = 0.0;
    for (Eigen::Index k = 0; k < t; ++k) s += a[k] * b[k];
    return s;
  };
  for (Eigen::Index i = 0; i < h; ++i)
    if (trace.alive[static_cast<std::size_t>(i)]) norm2[static_cast<std::size_t>(i)] = dot(i, i);

  for (Eigen::Index i = 0; i < h; ++i) {
    if (!trace.alive[static_cast<std::size_t>(i)]) continue;
    sim.values(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < h; ++j) {
      if (!trace.alive[static_cast<std::size_t>(j)]) continue;
      const double denom = std::sqrt(norm2[static_cast<std::size_t>(i)] * norm2[static_cast<std::size_t>(j)]);
      const double c = denom > 0.0 ? std::clamp(dot(i, j) / denom, -1.0, 1.0) : 0.0;
      sim.values(i, j) = c;
      sim.values(j, i) = c;
    }
  }
  return sim;
}

std::size_t Graph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& nb : adj) twice += nb.size();
  return twice / 2;
}

Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  Graph g;
  g.n = n;
  g.alive.assign(static_cast<std::size_t>(n), true);
  g.adj.assign(static_cast<std::size_t>(n), {});
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    if (a == b) continue;
    g.adj[static_cast<std::size_t>(a)].push_back(b);
    g.adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : g.adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

Graph threshold_graph(const SimilarityMatrix& sim, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::TauOutOfRange, "tau = " + std::to_string(tau));
  const auto h = static_cast<int>(sim.size());
  Graph g;
  g.n = h;
  g.alive = sim.alive;
  g.adj.assign(static_cast<std::size_t>(h), {});
  for (int i = 0; i < h; ++i) {
    if (!sim.alive[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < h; ++j) {
      if (j == i || !sim.alive[static_cast<std::size_t>(j)]) continue;
      if (std::abs(sim.values(i, j)) >= tau) g.adj[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  return g;
}

int SubnetworkPartition::alive_count() const {
  int total = 0;
  for (const auto& g : groups) total += static_cast<int>(g.size());
  return total;
}

std::vector<int> SubnetworkPartition::group_of(int n) const {
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (int u : groups[g]) out[static_cast<std::size_t>(u)] = static_cast<int>(g);
  return out;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)), rank_(static_cast<std::size_t>(n), 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[static_cast<std::size_t>(a)] < rank_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    if (rank_[static_cast<std::size_t>(a)] == rank_[static_cast<std::size_t>(b)]) ++rank_[static_cast<std::size_t>(a)];
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

}  // namespace

SubnetworkPartition connected_components(const Graph& graph) {
  DisjointSets sets(graph.n);
  for (int v = 0; v < graph.n; ++v)
    for (int w : graph.adj[static_cast<std::size_t>(v)])
      if (graph.alive[static_cast<std::size_t>(v)] && graph.alive[static_cast<std::size_t>(w)]) sets.unite(v, w);

  SubnetworkPartition part;
  std::vector<int> slot(static_cast<std::size_t>(graph.n), -1);
  for (int v = 0; v < graph.n; ++v) {
    if (!graph.alive[static_cast<std::size_t>(v)]) {
      part.dead.push_back(v);
      continue;
    }
    const int root = sets.find(v);
    auto& s = slot[static_cast<std::size_t>(root)];
    if (s < 0) {
      s = static_cast<int>(part.groups.size());
      part.groups.emplace_back();
    }
    part.groups[static_cast<std::size_t>(s)].push_back(v);
  }
  // members are already ascending; groups were created in order of their
  // smallest member, so a stable sort on size gives the tie-break for free
  std::stable_sort(part.groups.begin(), part.groups.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return part;
}

namespace {

// BFS levels from `root`, restricted to vertices with in_set[v] true.
std::vector<std::vector<int>> bfs_levels(const Graph& g, int root, const std::vector<char>& in_set) {
  std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
  std::vector<std::vector<int>> levels{{root}};
  seen[static_cast<std::size_t>(root)] = 1;
  while (true) {
    std::vector<int> next;
    for (int v : levels.back())
      for (int w : g.adj[static_cast<std::size_t>(v)])
        if (in_set[static_cast<std::size_t>(w)] && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          next.push_back(w);
        }
    if (next.empty()) break;
    levels.push_back(std::move(next));
  }
  return levels;
}

int min_degree_vertex(const Graph& g, const std::vector<int>& vs) {
  int best = vs.front();
  for (int v : vs)
    if (g.degree(v) < g.degree(best) || (g.degree(v) == g.degree(best) && v < best)) best = v;
  return best;
}

int pseudo_peripheral(const Graph& g, const std::vector<int>& component, const std::vector<char>& in_set) {
  int root = min_degree_vertex(g, component);
  auto levels = bfs_levels(g, root, in_set);
  while (true) {
    const int candidate = min_degree_vertex(g, levels.back());
    auto cand_levels = bfs_levels(g, candidate, in_set);
    if (cand_levels.size() <= levels.size()) break;
    root = candidate;
    levels = std::move(cand_levels);
  }
  return root;
}

}  // namespace

std::vector<int> rcm_order(const Graph& graph, const std::vector<int>& component) {
  if (component.size() <= 1) return component;
  std::vector<char> in_set(static_cast<std::size_t>(graph.n), 0);
  for (int v : component) in_set[static_cast<std::size_t>(v)] = 1;

  std::vector<int> sorted = component;
  std::sort(sorted.begin(), sorted.end());
  std::vector<char> placed(static_cast<std::size_t>(graph.n), 0);
  std::vector<int> order;
  order.reserve(component.size());

  auto by_degree = [&](int a, int b) {
    return graph.degree(a) != graph.degree(b) ? graph.degree(a) < graph.degree(b) : a < b;
  };

  // loop handles a vertex set that is not actually connected
  for (int seed_vertex : sorted) {
    if (placed[static_cast<std::size_t>(seed_vertex)]) continue;
    std::vector<int> piece;
    for (const auto& level : bfs_levels(graph, seed_vertex, in_set)) piece.insert(piece.end(), level.begin(), level.end());
    const int start = pseudo_peripheral(graph, piece, in_set);

    std::size_t head = order.size();
    order.push_back(start);
    placed[static_cast<std::size_t>(start)] = 1;
    while (head < order.size()) {
      const int v = order[head++];
      std::vector<int> fresh;
      for (int w : graph.adj[static_cast<std::size_t>(v)])
        if (in_set[static_cast<std::size_t>(w)] && !placed[static_cast<std::size_t>(w)]) fresh.push_back(w);
      std::sort(fresh.begin(), fresh.end(), by_degree);
      for (int w : fresh) {
        placed[static_cast<std::size_t>(w)] = 1;
        order.push_back(w);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

int bandwidth(const Graph& graph, const std::vector<int>& order) {
  std::vector<int> pos(static_cast<std::size_t>(graph.n), -1);
  for (std::size_t k = 0; k < order.size(); ++k) pos[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  int band = 0;
  for (int v : order)
    for (int w : graph.adj[static_cast<std::size_t>(v)])
      if (pos[static_cast<std::size_t>(w)] >= 0)
        band = std::max(band, std::abs(pos[static_cast<std::size_t>(v)] - pos[static_cast<std::size_t>(w)]));
  return band;
}

NeuronOrdering block_layout(const SubnetworkPartition& partition, const Graph& graph) {
  NeuronOrdering ordering;
  ordering.perm.reserve(static_cast<std::size_t>(graph.n));
  int running = 0;
  for (const auto& group : partition.groups) {
    const auto local = rcm_order(graph, group);
    ordering.perm.insert(ordering.perm.end(), local.begin(), local.end());
    running += static_cast<int>(group.size());
    ordering.block_boundaries.push_back(running);
  }
  std::vector<int> dead = partition.dead;
  std::sort(dead.begin(), dead.end());
  ordering.perm.insert(ordering.perm.end(), dead.begin(), dead.end());
  if (static_cast<int>(ordering.perm.size()) != graph.n)
    throw Error(ErrorCode::DimensionMismatch, "partition does not cover the graph");
  return ordering;
}

Matrix permute_symmetric(const Matrix& m, const NeuronOrdering& ordering) {
  const auto n = static_cast<Eigen::Index>(ordering.perm.size());
  if (m.rows() != n || m.cols() != n) throw Error(ErrorCode::DimensionMismatch, "ordering size differs from matrix");
  Matrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      out(a, b) = m(ordering.perm[static_cast<std::size_t>(a)], ordering.perm[static_cast<std::size_t>(b)]);
  return out;
}

}  // namespace selfnet
