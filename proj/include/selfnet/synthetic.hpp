#pragma once

#include <cstdint>
#include <vector>

#include "selfnet/coactivation.hpp"
#include "selfnet/trace.hpp"

namespace selfnet {

// Planted-structure chain: modules of co-active neurons, some of which are
// copied unchanged across checkpoints (stable) while the rest are partly
// resampled at every transition (plastic).
struct PlantedSpec {
  int H = 150;
  int T = 1000;
  std::vector<int> module_sizes{80, 40, 30};
  double within_corr = 0.95;
  double cross_corr = 0.10;
  std::vector<int> stable_modules{0};
  double plastic_noise = 1.0;  // resampled fraction of a plastic signal per transition
  int chain_length = 3;
  int dead_units = 0;              // constant rows placed after the free units
  bool random_permutations = true;  // otherwise identity unless `permutations` is set
  std::vector<std::vector<int>> permutations;  // optional explicit, one per transition
  std::uint64_t seed = 0;
  int layer = 1;
  int first_cycle = 0;

  void validate() const;
};

struct PlantedTruth {
  // per checkpoint: module of each unit, -1 = free unit, -2 = dead unit
  std::vector<std::vector<int>> module_of;
  std::vector<SubnetworkPartition> partitions;
  // per transition c -> c+1: unit u at c is unit permutations[c][u] at c+1
  std::vector<std::vector<int>> permutations;
  std::vector<int> stable_modules;
};

struct PlantedChain {
  std::vector<ActivationTrace> raw;
  std::vector<NormalizedTrace> traces;
  PlantedTruth truth;
};

// Throws InfeasibleSpec when the target levels cannot be realised within
// +-0.03 at the requested T.
PlantedChain planted_traces(const PlantedSpec& spec);

inline constexpr double kPlantedTolerance = 0.03;

// Realised mean |cosine| inside module m and between modules a != b.
struct RealizedLevels {
  std::vector<double> within;            // per module (modules of size >= 2)
  std::vector<std::vector<double>> cross;  // module x module, diagonal unused
};
RealizedLevels realized_levels(const NormalizedTrace& trace, const std::vector<int>& module_of, int modules);

struct BruteForceAssignment {
  std::vector<int> perm;  // perm[row] = column
  double value = 0.0;
};

// Exhaustive maximum over all n! permutations (n <= 9); the first maximum in
// lexicographic order wins.
BruteForceAssignment brute_force_assignment(const Matrix& similarity);

// Components by repeated boolean closure of the adjacency (n <= 64).
// Groups in the same canonical order as connected_components.
std::vector<std::vector<int>> brute_force_components(const std::vector<std::vector<bool>>& adjacency);

}  // namespace selfnet
