#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "selfnet/coactivation.hpp"
#include "selfnet/matching.hpp"

namespace selfnet {

// Cosine of two plain vectors; 0 when either has zero norm.
double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b);

// Mean over unordered checkpoint pairs of the cosine between the family's
// activation vectors. Throws IncompleteFamily.
double activation_similarity(const std::vector<std::optional<int>>& family, const std::vector<NormalizedTrace>& traces);

// Family-family cosine matrix at one checkpoint, rows/cols in `families` order.
Matrix family_coactivation(const FamilySet& set, const std::vector<std::size_t>& families,
                           const NormalizedTrace& trace, std::size_t checkpoint);

// conn_sim for each row k: mean over matrix pairs of cos(M_a.row(k), M_b.row(k)).
std::vector<double> row_similarity(const std::vector<Matrix>& family_matrices);

// conn_sim for every complete family, in complete_families() order.
// Throws TooFewFamilies when fewer than two families are complete.
std::vector<double> connectivity_similarity(const FamilySet& set, const std::vector<NormalizedTrace>& traces);

struct PersistenceRecord {
  std::size_t family_id = 0;
  double act_sim = 0.0;
  double conn_sim = 0.0;
  double persistence = 0.0;
  double percent_change = 0.0;
};

inline double percent_change(double persistence) { return 100.0 * (1.0 - persistence); }

struct PersistenceResult {
  std::vector<PersistenceRecord> records;  // complete families only
  std::size_t incomplete = 0;
};

PersistenceResult persistence_scores(const FamilySet& set, const std::vector<NormalizedTrace>& traces);

struct SubnetworkStats {
  int layer = 0;
  int cycle = 0;
  int self_size = 0;
  int task_size = 0;
  std::size_t self_families = 0;
  std::size_t task_families = 0;
  std::optional<double> self_persistence;
  std::optional<double> task_persistence;
  // task mean percent change minus self mean percent change, in points
  std::optional<double> separation;
  bool empty_task_pool = false;
};

// Assigns each record's family to the group holding its member at
// `membership_checkpoint`; groups[0] is self, the rest pooled as task.
SubnetworkStats aggregate_by_subnetwork(const std::vector<PersistenceRecord>& records, const FamilySet& set,
                                        const SubnetworkPartition& partition, std::size_t membership_checkpoint,
                                        int unit_count);

// Mean persistence of the families falling in each group of the partition.
std::vector<std::optional<double>> group_persistence(const std::vector<PersistenceRecord>& records,
                                                     const FamilySet& set, const SubnetworkPartition& partition,
                                                     std::size_t membership_checkpoint, int unit_count);

}  // namespace selfnet
