#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "selfnet/coactivation.hpp"
#include "selfnet/matching.hpp"

namespace selfnet {

// One-sided 99% standard-normal critical value, as reported.
inline constexpr double kZ99 = 2.326;
inline constexpr double kDefaultBenchmark = 15.0;

struct TransitionDelta {
  std::string source_id;
  std::string target_id;
  int layer = 0;
  int source_cycle = 0;
  double c_self = 0.0;
  double c_task = 0.0;
  double delta = 0.0;  // c_task - c_self, percentage points
  std::size_t n_self = 0;
  std::size_t n_task = 0;
};

// Per matched pair: p = mean(activation cosine, cosine of the pair's rows in
// the matched-unit co-activation matrices); c = 100 (1 - p). Averaged over
// pairs whose target unit sits in the target's self group vs. the rest.
TransitionDelta transition_delta(const NormalizedTrace& source, const NormalizedTrace& target,
                                 const SubnetworkPartition& target_partition, const Matching& matching);

struct StatSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double s = 0.0;   // sample standard deviation (n - 1)
  double se = 0.0;  // s / sqrt(n)
  // absent when se == 0
  std::optional<double> z;
  std::optional<double> log10_p;
  double lb99 = 0.0;
  double benchmark = kDefaultBenchmark;
  std::optional<double> z_b;
  std::optional<double> log10_p_b;

  bool degenerate() const { return !z.has_value(); }
};

StatSummary summarize_deltas(const std::vector<double>& deltas, double benchmark = kDefaultBenchmark);
// Same summary from precomputed moments (n, mean, sample std).
StatSummary summarize_moments(std::size_t n, double mean, double s, double benchmark = kDefaultBenchmark);

// log10 Pr(Z >= z) for standard normal Z.
double log10_normal_tail(double z);

// Linear-interpolation quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

}  // namespace selfnet
