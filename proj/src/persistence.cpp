#include "selfnet/persistence.hpp"

#include <algorithm>
#include <cmath>

#include "selfnet/error.hpp"

namespace selfnet {

double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  // all three products go through dot() so cosine(x, x) is exactly 1
  const double ab = a.dot(b);
  const double aa = a.dot(a);
  const double bb = b.dot(b);
  const double d = std::sqrt(aa * bb);
  return d > 0.0 ? std::clamp(ab / d, -1.0, 1.0) : 0.0;
}

double activation_similarity(const std::vector<std::optional<int>>& family, const std::vector<NormalizedTrace>& traces) {
  if (family.size() != traces.size()) throw Error(ErrorCode::DimensionMismatch, "family length differs from chain");
  for (const auto& u : family)
    if (!u) throw Error(ErrorCode::IncompleteFamily, "family is broken along the chain");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < traces.size(); ++a)
    for (std::size_t b = a + 1; b < traces.size(); ++b) {
      total += cosine(traces[a].values.row(*family[a]), traces[b].values.row(*family[b]));
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

Matrix family_coactivation(const FamilySet& set, const std::vector<std::size_t>& families,
                           const NormalizedTrace& trace, std::size_t checkpoint) {
  const auto k = static_cast<Eigen::Index>(families.size());
  Matrix rows(k, trace.states());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& member = set.families[families[static_cast<std::size_t>(i)]][checkpoint];
    if (!member) throw Error(ErrorCode::IncompleteFamily, "family absent at checkpoint " + std::to_string(checkpoint));
    rows.row(i) = trace.values.row(*member);
  }
  Matrix out(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out(i, i) = cosine(rows.row(i), rows.row(i));
    for (Eigen::Index j = i + 1; j < k; ++j) {
      out(i, j) = cosine(rows.row(i), rows.row(j));
      out(j, i) = out(i, j);
    }
  }
  return out;
}

std::vector<double> row_similarity(const std::vector<Matrix>& family_matrices) {
  if (family_matrices.size() < 2) throw Error(ErrorCode::ChainTooShort, "need at least two family matrices");
  const Eigen::Index k = family_matrices.front().rows();
  for (const auto& m : family_matrices)
    if (m.rows() != k || m.cols() != k) throw Error(ErrorCode::DimensionMismatch, "family matrices differ in size");
  std::vector<double> out(static_cast<std::size_t>(k), 0.0);
  const auto len = family_matrices.size();
  const double pairs = static_cast<double>(len * (len - 1) / 2);
  for (Eigen::Index r = 0; r < k; ++r) {
    double total = 0.0;
    for (std::size_t a = 0; a < len; ++a)
      for (std::size_t b = a + 1; b < len; ++b) total += cosine(family_matrices[a].row(r), family_matrices[b].row(r));
    out[static_cast<std::size_t>(r)] = total / pairs;
  }
  return out;
}

std::vector<double> connectivity_similarity(const FamilySet& set, const std::vector<NormalizedTrace>& traces) {
  const auto complete = set.complete_families();
  if (complete.size() < 2)
    throw Error(ErrorCode::TooFewFamilies, std::to_string(complete.size()) + " complete famil" +
                                               (complete.size() == 1 ? "y" : "ies"));
  std::vector<Matrix> mats;
  mats.reserve(traces.size());
  for (std::size_t c = 0; c < traces.size(); ++c) mats.push_back(family_coactivation(set, complete, traces[c], c));
  return row_similarity(mats);
}

PersistenceResult persistence_scores(const FamilySet& set, const std::vector<NormalizedTrace>& traces) {
  if (set.chain.size() != traces.size()) throw Error(ErrorCode::DimensionMismatch, "family chain differs from traces");
  PersistenceResult result;
  const auto complete = set.complete_families();
  result.incomplete = set.families.size() - complete.size();
  const auto conn = connectivity_similarity(set, traces);
  result.records.reserve(complete.size());
  for (std::size_t i = 0; i < complete.size(); ++i) {
    PersistenceRecord rec;
    rec.family_id = complete[i];
    rec.act_sim = activation_similarity(set.families[complete[i]], traces);
    rec.conn_sim = conn[i];
    rec.persistence = (rec.act_sim + rec.conn_sim) / 2.0;
    rec.percent_change = percent_change(rec.persistence);
    result.records.push_back(rec);
  }
  return result;
}

namespace {

// group index of each record's family at the membership checkpoint (-1: none)
std::vector<int> record_groups(const std::vector<PersistenceRecord>& records, const FamilySet& set,
                               const SubnetworkPartition& partition, std::size_t membership_checkpoint,
                               int unit_count) {
  if (membership_checkpoint >= set.chain.size())
    throw Error(ErrorCode::InvalidArgument, "membership checkpoint outside the chain");
  const auto group_of = partition.group_of(unit_count);
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    const auto& member = set.families.at(rec.family_id)[membership_checkpoint];
    out.push_back(member && *member < unit_count ? group_of[static_cast<std::size_t>(*member)] : -1);
  }
  return out;
}

}  // namespace

SubnetworkStats aggregate_by_subnetwork(const std::vector<PersistenceRecord>& records, const FamilySet& set,
                                        const SubnetworkPartition& partition, std::size_t membership_checkpoint,
                                        int unit_count) {
  if (partition.groups.empty()) throw Error(ErrorCode::NoSelfMembers, "partition has no alive groups");
  SubnetworkStats stats;
  stats.self_size = static_cast<int>(partition.groups.front().size());
  stats.task_size = partition.alive_count() - stats.self_size;
  stats.empty_task_pool = partition.groups.size() == 1;

  const auto groups = record_groups(records, set, partition, membership_checkpoint, unit_count);
  double self_sum = 0.0, task_sum = 0.0, self_pc = 0.0, task_pc = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (groups[i] < 0) continue;
    if (groups[i] == 0) {
      self_sum += records[i].persistence;
      self_pc += records[i].percent_change;
      ++stats.self_families;
    } else {
      task_sum += records[i].persistence;
      task_pc += records[i].percent_change;
      ++stats.task_families;
    }
  }
  if (stats.self_families > 0) stats.self_persistence = self_sum / static_cast<double>(stats.self_families);
  if (stats.task_families > 0) stats.task_persistence = task_sum / static_cast<double>(stats.task_families);
  if (stats.self_families > 0 && stats.task_families > 0)
    stats.separation = task_pc / static_cast<double>(stats.task_families) - self_pc / static_cast<double>(stats.self_families);
  return stats;
}

std::vector<std::optional<double>> group_persistence(const std::vector<PersistenceRecord>& records,
                                                     const FamilySet& set, const SubnetworkPartition& partition,
                                                     std::size_t membership_checkpoint, int unit_count) {
  const auto groups = record_groups(records, set, partition, membership_checkpoint, unit_count);
  std::vector<double> sum(partition.groups.size(), 0.0);
  std::vector<std::size_t> count(partition.groups.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (groups[i] < 0) continue;
    sum[static_cast<std::size_t>(groups[i])] += records[i].persistence;
    ++count[static_cast<std::size_t>(groups[i])];
  }
  std::vector<std::optional<double>> out(partition.groups.size());
  for (std::size_t g = 0; g < out.size(); ++g)
    if (count[g] > 0) out[g] = sum[g] / static_cast<double>(count[g]);
  return out;
}

}  // namespace selfnet
