#pragma once

#include <vector>

#include "selfnet/trace.hpp"

namespace selfnet {

inline constexpr double kDefaultTau = 0.70;

// Signed neuron-neuron cosine matrix R over the reference states.
struct SimilarityMatrix {
  Matrix values;  // H x H, symmetric, entries in [-1, 1]
  std::vector<bool> alive;

  Eigen::Index size() const { return values.rows(); }
};

SimilarityMatrix coactivation_matrix(const NormalizedTrace& trace);

// Undirected graph over H vertices; only alive vertices take part.
struct Graph {
  int n = 0;
  std::vector<bool> alive;
  std::vector<std::vector<int>> adj;  // sorted neighbour lists, no self-loops

  std::size_t edge_count() const;
  int degree(int v) const { return static_cast<int>(adj[static_cast<std::size_t>(v)].size()); }
};

Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges);

// Edge (i, j) iff |R_ij| >= tau and both units alive. tau must lie in (0, 1].
Graph threshold_graph(const SimilarityMatrix& sim, double tau = kDefaultTau);

struct SubnetworkPartition {
  // Sorted by size descending, ties by smallest member. Members ascending.
  std::vector<std::vector<int>> groups;
  double tau = 0.0;
  std::vector<int> dead;  // units excluded from every group

  const std::vector<int>& self_group() const { return groups.front(); }
  int alive_count() const;
  // group index for every unit, -1 for dead units
  std::vector<int> group_of(int n) const;
};

SubnetworkPartition connected_components(const Graph& graph);

// Reverse Cuthill-McKee order of one connected component, started from a
// pseudo-peripheral vertex. Ties are broken by vertex index.
std::vector<int> rcm_order(const Graph& graph, const std::vector<int>& component);

// Largest |i - j| over edges of `graph`, with positions taken from `order`.
// Only edges with both endpoints in `order` count.
int bandwidth(const Graph& graph, const std::vector<int>& order);

struct NeuronOrdering {
  std::vector<int> perm;             // perm[k] = neuron shown at position k
  std::vector<int> block_boundaries;  // cumulative group sizes
};

NeuronOrdering block_layout(const SubnetworkPartition& partition, const Graph& graph);

// out(a, b) = m(perm[a], perm[b])
Matrix permute_symmetric(const Matrix& m, const NeuronOrdering& ordering);

}  // namespace selfnet
