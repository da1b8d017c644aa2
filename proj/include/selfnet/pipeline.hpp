#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "selfnet/coactivation.hpp"
#include "selfnet/matching.hpp"
#include "selfnet/persistence.hpp"
#include "selfnet/stats.hpp"

namespace selfnet {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kReportSchemaVersion = 1;

std::vector<double> default_tau_grid();

// Which checkpoint's partition decides family membership.
struct MembershipRule {
  enum class Kind { First, Last, Index } kind = Kind::Last;
  int index = 0;

  std::size_t resolve(std::size_t chain_length) const;
  std::string describe() const;
  static MembershipRule parse(const nlohmann::json& j);
};

struct ChainSpec {
  int layer = 1;
  std::vector<std::filesystem::path> checkpoints;
};

struct RunSpec {
  std::string run_id;
  std::vector<ChainSpec> chains;
};

struct AnalysisConfig {
  std::vector<RunSpec> runs;
  double tau = kDefaultTau;
  double dead_std_threshold = kDefaultDeadStdThreshold;
  MembershipRule membership;
  double benchmark = kDefaultBenchmark;
  bool sweep = false;
  std::vector<double> sweep_grid = default_tau_grid();
  // transitions and overlays only use checkpoints with cycle > this value
  int stabilization_cutoff = 15;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  bool export_matrices = false;
  bool overlay = false;

  void validate() const;
  nlohmann::json to_json() const;
  // Unknown keys are rejected. Relative paths resolve against base_dir.
  static AnalysisConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static AnalysisConfig load(const std::filesystem::path& path);
};

struct AlluvialFlow {
  std::size_t from_checkpoint = 0;
  std::size_t to_checkpoint = 0;
  int source_group = 0;
  int target_group = 0;
  std::size_t count = 0;
  double mean_persistence = 0.0;

  std::string source_label() const { return source_group == 0 ? "self" : "task"; }
  std::string target_label() const { return target_group == 0 ? "self" : "task"; }
};

// Flows of complete families between the groups of consecutive checkpoints.
std::vector<AlluvialFlow> export_alluvial(const FamilySet& families, const std::vector<SubnetworkPartition>& partitions,
                                          const std::vector<PersistenceRecord>& records);

// Element-wise mean of matrices already reordered by `ordering`.
Matrix overlay_blend(const std::vector<Matrix>& reordered, const NeuronOrdering& ordering);

struct ChainOptions {
  double tau = kDefaultTau;
  MembershipRule membership;
  int stabilization_cutoff = 15;
};

struct TransitionResult {
  std::size_t from_checkpoint = 0;
  bool included = false;
  std::optional<TransitionDelta> delta;
  std::string error;
};

struct ChainAnalysis {
  std::string run_id;
  int layer = 0;
  std::vector<NormalizedTrace> traces;
  std::vector<SimilarityMatrix> similarities;
  std::vector<SubnetworkPartition> partitions;
  std::vector<NeuronOrdering> orderings;
  std::size_t membership_checkpoint = 0;
  FamilySet families;
  PersistenceResult persistence;
  SubnetworkStats stats;
  std::vector<std::optional<double>> group_persistence;
  std::vector<TransitionResult> transitions;
  std::vector<AlluvialFlow> flows;
};

// All per-chain stages: co-activation, blocks, families, persistence,
// aggregation, transition deltas and alluvial flows.
ChainAnalysis analyze_chain(std::vector<NormalizedTrace> traces, const ChainOptions& options, std::string run_id = {});

struct SweepChain {
  std::string run_id;
  int layer = 0;
  std::vector<NormalizedTrace> traces;
};

struct SweepRow {
  double tau = 0.0;
  int layer = 0;
  double self_size = 0.0;  // mean over runs
  double task_size = 0.0;
  std::optional<double> sep_mean;
  std::optional<double> q10, q25, q50, q75, q90;  // across runs
  std::size_t runs = 0;
};

// Reruns partitioning and aggregation at every tau. Families and
// persistence do not depend on tau and are computed once per chain.
std::vector<SweepRow> tau_sweep(const std::vector<SweepChain>& chains, const std::vector<double>& grid,
                                const MembershipRule& membership = {});

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct AnalysisReport {
  nlohmann::json body;  // everything except generated_at
  std::string generated_at;

  nlohmann::json to_json() const;
};

AnalysisReport run_pipeline(const AnalysisConfig& config);

// JSON views used by the report and the CLI.
nlohmann::json to_json(const StatSummary& s);
nlohmann::json to_json(const SubnetworkStats& s);
nlohmann::json to_json(const FamilySet& f);
nlohmann::json to_json(const AlluvialFlow& f);
nlohmann::json to_json(const SweepRow& r);
nlohmann::json to_json(const TransitionDelta& d);
nlohmann::json to_json(const NeuronOrdering& o);

}  // namespace selfnet
