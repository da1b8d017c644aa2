#include "selfnet/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "selfnet/error.hpp"

namespace selfnet {

void PlantedSpec::validate() const {
  if (H <= 0 || T <= 1) throw Error(ErrorCode::InvalidArgument, "need H > 0 and T > 1");
  if (chain_length < 1) throw Error(ErrorCode::InvalidArgument, "chain_length must be >= 1");
  int used = dead_units;
  for (int s : module_sizes) {
    if (s <= 0) throw Error(ErrorCode::InvalidArgument, "module sizes must be positive");
    used += s;
  }
  if (dead_units < 0 || used > H) throw Error(ErrorCode::InvalidArgument, "modules and dead units exceed H");
  if (!(cross_corr >= 0.0 && cross_corr < within_corr && within_corr <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "need 0 <= cross_corr < within_corr <= 1");
  if (!(plastic_noise >= 0.0 && plastic_noise <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "plastic_noise must lie in [0, 1]");
  for (int m : stable_modules)
    if (m < 0 || m >= static_cast<int>(module_sizes.size()))
      throw Error(ErrorCode::InvalidArgument, "stable module index out of range");
  if (!permutations.empty()) {
    if (static_cast<int>(permutations.size()) != chain_length - 1)
      throw Error(ErrorCode::InvalidArgument, "need one permutation per transition");
    for (const auto& p : permutations) {
      std::vector<int> sorted = p;
      std::sort(sorted.begin(), sorted.end());
      std::vector<int> iota(static_cast<std::size_t>(H));
      std::iota(iota.begin(), iota.end(), 0);
      if (sorted != iota) throw Error(ErrorCode::InvalidArgument, "explicit permutation is not a bijection of 0..H-1");
    }
  }
}

namespace {

using Row = Eigen::RowVectorXd;

// Centered, unit-norm Gaussian vector of length t.
Row random_direction(std::mt19937_64& rng, int t) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Row v(t);
  for (int k = 0; k < t; ++k) v(k) = normal(rng);
  v.array() -= v.mean();
  return v / v.norm();
}

Row unit(Row v) {
  v.array() -= v.mean();
  return v / v.norm();
}

// Module-specific directions, orthonormal and orthogonal to the global
// latent g. Directions already in `basis` are kept fixed.
Row orthogonal_direction(std::mt19937_64& rng, int t, const std::vector<Row>& basis, const Row* start = nullptr,
                         double keep = 0.0) {
  Row w = random_direction(rng, t);
  if (start != nullptr) w = keep * *start + std::sqrt(1.0 - keep * keep) * w;
  for (const Row& b : basis) w -= w.dot(b) * b;
  return unit(w);
}

SubnetworkPartition partition_from_modules(const std::vector<int>& module_of, int modules) {
  SubnetworkPartition part;
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(modules));
  for (std::size_t u = 0; u < module_of.size(); ++u) {
    const int m = module_of[u];
    if (m >= 0) groups[static_cast<std::size_t>(m)].push_back(static_cast<int>(u));
    else if (m == -1) groups.push_back({static_cast<int>(u)});
    else part.dead.push_back(static_cast<int>(u));
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a.front() < b.front();
  });
  part.groups = std::move(groups);
  return part;
}

}  // namespace

RealizedLevels realized_levels(const NormalizedTrace& trace, const std::vector<int>& module_of, int modules) {
  const auto m = static_cast<std::size_t>(modules);
  std::vector<double> within_sum(m, 0.0), within_n(m, 0.0);
  std::vector<std::vector<double>> cross_sum(m, std::vector<double>(m, 0.0)), cross_n = cross_sum;
  const Vector norms = trace.values.rowwise().norm();
  for (std::size_t i = 0; i < module_of.size(); ++i) {
    if (module_of[i] < 0) continue;
    for (std::size_t j = i + 1; j < module_of.size(); ++j) {
      if (module_of[j] < 0) continue;
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const double c = std::abs(trace.values.row(ii).dot(trace.values.row(jj)) / (norms(ii) * norms(jj)));
      const auto a = static_cast<std::size_t>(module_of[i]), b = static_cast<std::size_t>(module_of[j]);
      if (a == b) {
        within_sum[a] += c;
        within_n[a] += 1.0;
      } else {
        cross_sum[a][b] += c;
        cross_sum[b][a] += c;
        cross_n[a][b] += 1.0;
        cross_n[b][a] += 1.0;
      }
    }
  }
  RealizedLevels out;
  out.cross.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a) {
    out.within.push_back(within_n[a] > 0 ? within_sum[a] / within_n[a] : 1.0);
    for (std::size_t b = 0; b < m; ++b)
      if (cross_n[a][b] > 0) out.cross[a][b] = cross_sum[a][b] / cross_n[a][b];
  }
  return out;
}

PlantedChain planted_traces(const PlantedSpec& spec) {
  spec.validate();
  if (spec.within_corr - spec.cross_corr < 4.0 / std::sqrt(static_cast<double>(spec.T)))
    throw Error(ErrorCode::InfeasibleSpec, "within_corr and cross_corr are closer than sampling noise at this T");

  std::mt19937_64 rng(spec.seed);
  const int h = spec.H;
  const int t = spec.T;
  const auto modules = static_cast<int>(spec.module_sizes.size());
  const double cos_theta = std::sqrt(spec.within_corr);
  const double sin_theta = std::sqrt(1.0 - spec.within_corr);

  // content index: modules first, then free units, then dead units
  std::vector<int> content_module(static_cast<std::size_t>(h), -1);
  {
    int u = 0;
    for (int m = 0; m < modules; ++m)
      for (int k = 0; k < spec.module_sizes[static_cast<std::size_t>(m)]; ++k) content_module[static_cast<std::size_t>(u++)] = m;
    for (int k = 0; k < spec.dead_units; ++k) content_module[static_cast<std::size_t>(h - 1 - k)] = -2;
  }
  std::vector<bool> stable(static_cast<std::size_t>(modules), false);
  for (int m : spec.stable_modules) stable[static_cast<std::size_t>(m)] = true;

  // neuron = cos(theta) latent_m + sin(theta) noise_u with
  // latent_m = sqrt(rho) g + sqrt(1 - rho) w_m, so two neurons of one module
  // correlate at cos^2(theta) = within and of different modules at within * rho
  const double rho = spec.cross_corr / spec.within_corr;
  const Row global = random_direction(rng, t);
  std::vector<Row> directions;
  {
    std::vector<Row> basis{global};
    for (int m = 0; m < modules; ++m) {
      directions.push_back(orthogonal_direction(rng, t, basis));
      basis.push_back(directions.back());
    }
  }
  std::vector<Row> noise(static_cast<std::size_t>(h));
  for (int u = 0; u < h; ++u)
    if (content_module[static_cast<std::size_t>(u)] != -2) noise[static_cast<std::size_t>(u)] = random_direction(rng, t);
  auto signal_of = [&](int u) -> Row {
    const int m = content_module[static_cast<std::size_t>(u)];
    if (m == -1) return noise[static_cast<std::size_t>(u)];
    const Row latent =
        unit(std::sqrt(rho) * global + std::sqrt(1.0 - rho) * directions[static_cast<std::size_t>(m)]);
    return cos_theta * latent + sin_theta * noise[static_cast<std::size_t>(u)];
  };

  // position[content] = unit index of that content at the current checkpoint
  std::vector<int> position(static_cast<std::size_t>(h));
  std::iota(position.begin(), position.end(), 0);

  PlantedChain chain;
  chain.truth.stable_modules = spec.stable_modules;
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  const double keep = std::sqrt(1.0 - spec.plastic_noise);

  for (int c = 0; c < spec.chain_length; ++c) {
    if (c > 0) {
      std::vector<int> perm(static_cast<std::size_t>(h));
      if (!spec.permutations.empty()) {
        perm = spec.permutations[static_cast<std::size_t>(c - 1)];
      } else {
        std::iota(perm.begin(), perm.end(), 0);
        if (spec.random_permutations) std::shuffle(perm.begin(), perm.end(), rng);
      }
      chain.truth.permutations.push_back(perm);
      for (auto& p : position) p = perm[static_cast<std::size_t>(p)];

      if (spec.plastic_noise > 0.0) {
        // resample a fraction of each plastic direction and of each plastic
        // neuron's own noise; g and the stable modules stay untouched
        std::vector<Row> basis{global};
        for (int m = 0; m < modules; ++m)
          if (stable[static_cast<std::size_t>(m)]) basis.push_back(directions[static_cast<std::size_t>(m)]);
        for (int m = 0; m < modules; ++m) {
          if (stable[static_cast<std::size_t>(m)]) continue;
          auto& w = directions[static_cast<std::size_t>(m)];
          w = orthogonal_direction(rng, t, basis, &w, keep);
          basis.push_back(w);
        }
        for (int u = 0; u < h; ++u) {
          const int m = content_module[static_cast<std::size_t>(u)];
          if (m == -2 || (m >= 0 && stable[static_cast<std::size_t>(m)])) continue;
          auto& n = noise[static_cast<std::size_t>(u)];
          n = unit(keep * n + std::sqrt(spec.plastic_noise) * random_direction(rng, t));
        }
      }
    }

    ActivationTrace raw;
    raw.info.checkpoint_id = "planted-" + std::to_string(spec.seed) + "-c" + std::to_string(c);
    raw.info.run_id = "planted-" + std::to_string(spec.seed);
    raw.info.cycle = static_cast<std::uint32_t>(spec.first_cycle + c);
    const Behavior cycle_order[3] = {Behavior::walk(), Behavior::wiggle(), Behavior::bob()};
    raw.info.behavior = cycle_order[c % 3];
    raw.info.layer = static_cast<std::uint16_t>(spec.layer);
    raw.info.reference_id = "planted-" + std::to_string(spec.seed);
    raw.values = Matrix::Zero(h, t);
    std::vector<int> module_of(static_cast<std::size_t>(h), -1);
    const double root_t = std::sqrt(static_cast<double>(t));
    for (int u = 0; u < h; ++u) {
      const int row = position[static_cast<std::size_t>(u)];
      module_of[static_cast<std::size_t>(row)] = content_module[static_cast<std::size_t>(u)];
      // arbitrary per-unit affine map; z-scoring removes it again
      const double a = scale(rng), b = offset(rng);
      if (content_module[static_cast<std::size_t>(u)] == -2) {
        raw.values.row(row).setConstant(b);
      } else {
        raw.values.row(row) = (a * root_t) * signal_of(u);
        raw.values.row(row).array() += b;
      }
    }
    NormalizedTrace norm = zscore_normalize(raw);
    const auto levels = realized_levels(norm, module_of, modules);
    for (int a = 0; a < modules; ++a) {
      if (spec.module_sizes[static_cast<std::size_t>(a)] >= 2 &&
          levels.within[static_cast<std::size_t>(a)] < spec.within_corr - kPlantedTolerance)
        throw Error(ErrorCode::InfeasibleSpec, "module " + std::to_string(a) + " realised within-level " +
                                                   std::to_string(levels.within[static_cast<std::size_t>(a)]));
      for (int b = a + 1; b < modules; ++b)
        if (levels.cross[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] > spec.cross_corr + kPlantedTolerance)
          throw Error(ErrorCode::InfeasibleSpec, "modules " + std::to_string(a) + "," + std::to_string(b) +
                                                     " realised cross-level too high");
    }
    chain.truth.partitions.push_back(partition_from_modules(module_of, modules));
    chain.truth.module_of.push_back(std::move(module_of));
    chain.raw.push_back(std::move(raw));
    chain.traces.push_back(std::move(norm));
  }
  return chain;
}

BruteForceAssignment brute_force_assignment(const Matrix& similarity) {
  const auto n = similarity.rows();
  if (similarity.cols() != n) throw Error(ErrorCode::InvalidArgument, "brute force needs a square matrix");
  if (n == 0) throw Error(ErrorCode::EmptyMatrix, "empty matrix");
  if (n > 9) throw Error(ErrorCode::TooLarge, "n = " + std::to_string(n) + " > 9");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  BruteForceAssignment best;
  bool first = true;
  do {
    double value = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) value += similarity(r, perm[static_cast<std::size_t>(r)]);
    if (first || value > best.value) {
      best.value = value;
      best.perm = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<std::vector<int>> brute_force_components(const std::vector<std::vector<bool>>& adjacency) {
  const std::size_t n = adjacency.size();
  if (n > 64) throw Error(ErrorCode::TooLarge, "n = " + std::to_string(n) + " > 64");
  std::vector<std::uint64_t> reach(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency[i].size() != n) throw Error(ErrorCode::InvalidArgument, "adjacency must be square");
    reach[i] = std::uint64_t{1} << i;
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency[i][j] || adjacency[j][i]) reach[i] |= std::uint64_t{1} << j;
  }
  // square the reachability relation until it stops growing
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t grown = reach[i];
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i] >> j & 1u) grown |= reach[j];
      if (grown != reach[i]) {
        reach[i] = grown;
        changed = true;
      }
    }
  }
  std::vector<std::vector<int>> groups;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned >> i & 1u) continue;
    std::vector<int> g;
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i] >> j & 1u) g.push_back(static_cast<int>(j));
    assigned |= reach[i];
    groups.push_back(std::move(g));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return groups;
}

}  // namespace selfnet
