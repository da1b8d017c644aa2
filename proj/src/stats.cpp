#include "selfnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selfnet/error.hpp"
#include "selfnet/persistence.hpp"

namespace selfnet {

TransitionDelta transition_delta(const NormalizedTrace& source, const NormalizedTrace& target,
                                 const SubnetworkPartition& target_partition, const Matching& matching) {
  if (source.states() != target.states())
    throw Error(ErrorCode::ReferenceSetMismatch, "source and target cover different reference sets");
  if (target_partition.groups.empty()) throw Error(ErrorCode::NoSelfMembers, "target partition is empty");

  std::vector<std::pair<int, int>> pairs;
  for (auto [s, t] : matching.pairs())
    if (source.alive.at(static_cast<std::size_t>(s)) && target.alive.at(static_cast<std::size_t>(t)))
      pairs.emplace_back(s, t);
  const auto m = static_cast<Eigen::Index>(pairs.size());

  Matrix src(m, source.states());
  Matrix tgt(m, target.states());
  for (Eigen::Index i = 0; i < m; ++i) {
    src.row(i) = source.values.row(pairs[static_cast<std::size_t>(i)].first);
    tgt.row(i) = target.values.row(pairs[static_cast<std::size_t>(i)].second);
  }
  auto cosine_matrix = [](const Matrix& rows) {
    Matrix out(rows.rows(), rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      out(i, i) = cosine(rows.row(i), rows.row(i));
      for (Eigen::Index j = i + 1; j < rows.rows(); ++j) out(i, j) = out(j, i) = cosine(rows.row(i), rows.row(j));
    }
    return out;
  };
  const Matrix src_co = cosine_matrix(src);
  const Matrix tgt_co = cosine_matrix(tgt);

  const auto group_of = target_partition.group_of(static_cast<int>(target.neurons()));
  TransitionDelta out;
  out.source_id = source.info.checkpoint_id;
  out.target_id = target.info.checkpoint_id;
  out.layer = target.info.layer;
  out.source_cycle = static_cast<int>(source.info.cycle);
  double self_sum = 0.0, task_sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double act = cosine(src.row(i), tgt.row(i));
    const double conn = cosine(src_co.row(i), tgt_co.row(i));
    const double change = percent_change((act + conn) / 2.0);
    const int g = group_of[static_cast<std::size_t>(pairs[static_cast<std::size_t>(i)].second)];
    if (g == 0) {
      self_sum += change;
      ++out.n_self;
    } else if (g > 0) {
      task_sum += change;
      ++out.n_task;
    }
  }
  if (out.n_self == 0) throw Error(ErrorCode::NoSelfMembers, out.source_id + " -> " + out.target_id);
  if (out.n_task == 0) throw Error(ErrorCode::NoTaskMembers, out.source_id + " -> " + out.target_id);
  out.c_self = self_sum / static_cast<double>(out.n_self);
  out.c_task = task_sum / static_cast<double>(out.n_task);
  out.delta = out.c_task - out.c_self;
  return out;
}

StatSummary summarize_moments(std::size_t n, double mean, double s, double benchmark) {
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "n = " + std::to_string(n));
  if (!std::isfinite(mean) || !std::isfinite(s) || s < 0.0)
    throw Error(ErrorCode::InvalidArgument, "moments must be finite with s >= 0");
  StatSummary out;
  out.n = n;
  out.mean = mean;
  out.s = s;
  out.se = s / std::sqrt(static_cast<double>(n));
  out.lb99 = mean - kZ99 * out.se;
  out.benchmark = benchmark;
  if (out.se > 0.0) {
    out.z = mean / out.se;
    out.log10_p = log10_normal_tail(*out.z);
    out.z_b = (mean - benchmark) / out.se;
    out.log10_p_b = log10_normal_tail(*out.z_b);
  }
  return out;
}

StatSummary summarize_deltas(const std::vector<double>& deltas, double benchmark) {
  const std::size_t n = deltas.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "n = " + std::to_string(n));
  double mean = 0.0;
  for (double d : deltas) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : deltas) ss += (d - mean) * (d - mean);
  return summarize_moments(n, mean, std::sqrt(ss / static_cast<double>(n - 1)), benchmark);
}

namespace {

constexpr double kTailSwitch = 8.0;

// Mills ratio Q(z)/phi(z) by backward evaluation of its continued fraction
// 1/(z + 1/(z + 2/(z + 3/(z + ...)))). Converges quickly for z >= 8.
double mills_ratio(double z) {
  double tail = z;
  for (int k = 400; k >= 1; --k) tail = z + k / tail;
  return 1.0 / tail;
}

}  // namespace

double log10_normal_tail(double z) {
  if (!std::isfinite(z)) throw Error(ErrorCode::InvalidArgument, "z must be finite");
  // left of zero the tail is 1 - Pr(Z >= -z); log1p keeps it resolved
  if (z < 0.0) return std::log1p(-0.5 * std::erfc(-z / std::numbers::sqrt2)) / std::numbers::ln10;
  if (z <= kTailSwitch) return std::log10(0.5 * std::erfc(z / std::numbers::sqrt2));
  const double log10_phi = -z * z / (2.0 * std::numbers::ln10) - std::log10(std::sqrt(2.0 * std::numbers::pi));
  return log10_phi + std::log10(mills_ratio(z));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::TooFewSamples, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace selfnet
