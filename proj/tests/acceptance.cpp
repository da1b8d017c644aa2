// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails. `--criterion N` runs one.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "plateau_scripts.hpp"
#include "selfnet/coactivation.hpp"
#include "selfnet/curriculum.hpp"
#include "selfnet/error.hpp"
#include "selfnet/matching.hpp"
#include "selfnet/persistence.hpp"
#include "selfnet/stats.hpp"
#include "selfnet/synthetic.hpp"
#include "test_util.hpp"

#ifndef SELFNET_CLI_PATH
#define SELFNET_CLI_PATH "selfnet"
#endif

using namespace selfnet;
using selfnet::testing::make_trace;
using selfnet::testing::random_matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::set<std::set<int>> as_sets(const std::vector<std::vector<int>>& groups) {
  std::set<std::set<int>> out;
  for (const auto& g : groups) out.insert(std::set<int>(g.begin(), g.end()));
  return out;
}

Graph random_graph(std::mt19937_64& rng, int n, double p) {
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(rng)) edges.emplace_back(i, j);
  return graph_from_edges(n, edges);
}

// --- 1 ----------------------------------------------------------------------
Outcome replay_statistics() {
  const auto start = Clock::now();
  const auto s = summarize_moments(916, 16.921, 3.093, 15.0);
  const double elapsed = seconds_since(start);
  const bool ok = std::abs(s.se - 0.1022) <= 1e-4 && std::abs(*s.z - 165.57) <= 0.01 &&
                  std::abs(s.lb99 - 16.683) <= 0.001 && std::abs(*s.z_b - 18.80) <= 0.01 &&
                  std::abs(*s.log10_p - (-5955.64)) <= 0.5 && std::abs(*s.log10_p_b - (-78.40)) <= 0.05 &&
                  elapsed < 1.0;
  return {ok, "SE=" + fmt(s.se, 5) + " z=" + fmt(*s.z, 6) + " LB99=" + fmt(s.lb99, 6) + " z_15=" + fmt(*s.z_b, 5) +
                  " log10p=" + fmt(*s.log10_p, 7) + " log10p_15=" + fmt(*s.log10_p_b, 5) + " in " +
                  fmt(elapsed, 3) + "s"};
}

// --- 2 ----------------------------------------------------------------------
Outcome planted_recovery() {
  const auto start = Clock::now();
  const std::vector<double> taus{0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85};
  int recovered = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PlantedSpec spec;  // H 150, T 1000, {80, 40, 30}, within 0.95, cross 0.10
    spec.chain_length = 1;
    spec.seed = seed;
    const auto chain = planted_traces(spec);
    const auto sim = coactivation_matrix(chain.traces[0]);
    for (double tau : taus) {
      ++total;
      if (connected_components(threshold_graph(sim, tau)).groups == chain.truth.partitions[0].groups) ++recovered;
    }
  }
  const double elapsed = seconds_since(start);
  return {recovered == total && elapsed < 30.0,
          std::to_string(recovered) + "/" + std::to_string(total) + " (seed, tau) pairs exact in " + fmt(elapsed, 3) + "s"};
}

// --- 3 ----------------------------------------------------------------------
Outcome hungarian_optimality() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  int equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix s = random_matrix(rng, 7, 7);
    if (hungarian_assign(s).total == brute_force_assignment(s).value) ++equal;
  }
  const double elapsed = seconds_since(start);
  return {equal == 100 && elapsed < 10.0, std::to_string(equal) + "/100 exact in " + fmt(elapsed, 3) + "s"};
}

// --- 4 ----------------------------------------------------------------------
Outcome component_correctness() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> size(1, 50);
  std::uniform_real_distribution<double> density(0.0, 0.15);
  int equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    const Graph g = random_graph(rng, n, density(rng));
    std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
    for (int v = 0; v < n; ++v)
      for (int w : g.adj[static_cast<std::size_t>(v)]) adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(w)] = true;
    if (as_sets(connected_components(g).groups) == as_sets(brute_force_components(adj))) ++equal;
  }
  return {equal == 100, std::to_string(equal) + "/100 graphs agree"};
}

// --- 5 ----------------------------------------------------------------------
Outcome tau_monotonicity() {
  const std::vector<double> grid{0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99, 1.00};
  auto monotone = [&](const SimilarityMatrix& sim) {
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double tau : grid) {
      const auto part = connected_components(threshold_graph(sim, tau));
      const std::size_t largest = part.groups.empty() ? 0 : part.groups.front().size();
      if (largest > previous) return false;
      previous = largest;
    }
    return true;
  };
  int planted_ok = 0, random_ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PlantedSpec spec;
    spec.chain_length = 1;
    spec.seed = 1000 + seed;
    if (monotone(coactivation_matrix(planted_traces(spec).traces[0]))) ++planted_ok;
  }
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> states(4, 40);
  for (int k = 0; k < 20; ++k) {
    // few reference states give a wide spread of |R|
    const auto t = zscore_normalize(make_trace(random_matrix(rng, 80, states(rng))));
    if (monotone(coactivation_matrix(t))) ++random_ok;
  }
  return {planted_ok == 20 && random_ok == 20,
          "planted " + std::to_string(planted_ok) + "/20, unstructured " + std::to_string(random_ok) + "/20"};
}

// --- 6 ----------------------------------------------------------------------
Outcome persistence_calibration() {
  // identical checkpoints
  PlantedSpec base;
  base.chain_length = 1;
  base.seed = 600;
  const auto one = planted_traces(base).traces[0];
  std::vector<NormalizedTrace> same;
  for (int c = 0; c < 3; ++c) {
    same.push_back(one);
    same.back().info.checkpoint_id = "same" + std::to_string(c);
  }
  const auto set = build_families(same);
  const auto result = persistence_scores(set, same);
  double worst = 0.0;
  for (const auto& r : result.records) worst = std::max(worst, std::abs(r.persistence - 1.0));
  const auto part = connected_components(threshold_graph(coactivation_matrix(same.back()), kDefaultTau));
  const auto stats = aggregate_by_subnetwork(result.records, set, part, 2, static_cast<int>(one.neurons()));
  const bool identical_ok = worst <= 1e-6 && stats.separation && *stats.separation == 0.0;

  // planted: module 0 stable, the rest fully resampled (plastic_noise 1.0)
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PlantedSpec spec;
    spec.seed = 610 + seed;
    spec.plastic_noise = 1.0;
    const auto chain = planted_traces(spec);
    const auto fam = build_families(chain.traces);
    const auto rec = persistence_scores(fam, chain.traces);
    const auto p = connected_components(threshold_graph(coactivation_matrix(chain.traces.back()), kDefaultTau));
    const auto s = aggregate_by_subnetwork(rec.records, fam, p, chain.traces.size() - 1, spec.H);
    min_sep = std::min(min_sep, s.separation.value_or(-1e9));
  }
  return {identical_ok && min_sep >= 15.0,
          "identical: max |p-1|=" + fmt(worst, 3) + " separation=" + fmt(stats.separation.value_or(NAN)) +
              "; planted min separation over 5 seeds=" + fmt(min_sep, 4) + " points"};
}

// --- 7 ----------------------------------------------------------------------
Outcome rcm_bandwidth() {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<int> size(2, 30);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::iota(labels.begin(), labels.end(), 0);
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<std::pair<int, int>> edges;
    for (int k = 1; k < n; ++k) {
      std::uniform_int_distribution<int> parent(0, k - 1);
      edges.emplace_back(labels[static_cast<std::size_t>(k)], labels[static_cast<std::size_t>(parent(rng))]);
    }
    std::bernoulli_distribution extra(0.1);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (extra(rng)) edges.emplace_back(i, j);
    const Graph g = graph_from_edges(n, edges);
    std::vector<int> identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), 0);
    if (bandwidth(g, rcm_order(g, identity)) <= bandwidth(g, identity)) ++ok;
  }
  const Graph path = graph_from_edges(6, {{3, 0}, {0, 5}, {5, 1}, {1, 4}, {4, 2}});
  const int path_bw = bandwidth(path, rcm_order(path, {0, 1, 2, 3, 4, 5}));
  return {ok == 100 && path_bw == 1,
          std::to_string(ok) + "/100 graphs not widened, path bandwidth " + std::to_string(path_bw)};
}

// --- 8 ----------------------------------------------------------------------
Outcome plateau_machine() {
  const auto cfg = selfnet::testing::scripted_config();
  const auto scripts = selfnet::testing::plateau_scripts();
  int ok = 0;
  std::string failed;
  for (const auto& script : scripts) {
    PhaseState state;
    bool match = true;
    for (const auto& batch : script.batches) {
      auto out = plateau_step(state, batch.returns, batch.steps, cfg);
      match = match && out.decision == batch.expected;
      state = std::move(out.state);
    }
    match = match && state.status == script.final_status;
    if (match) ++ok;
    else failed += " " + script.name;
  }
  // controller: fail, fail, converge (retries reset), then three failures abort
  CurriculumState c;
  std::vector<std::string> trace;
  auto note = [&](const CurriculumState& s) {
    trace.push_back(to_string(s.phase) + "/" + std::to_string(s.cycle) + "/r" + std::to_string(s.retries_used) + "/s" +
                    std::to_string(s.seed_offset) + (s.revert_pending ? "/rev" : "") + (s.aborted ? "/abort" : ""));
  };
  c = phase_controller_step(c, PhaseEvent::Converged, "walk-0");
  note(c);
  c = phase_controller_step(c, PhaseEvent::FailedBudget);
  note(c);
  c = phase_controller_step(c, PhaseEvent::FailedBudget);
  note(c);
  c = phase_controller_step(c, PhaseEvent::Converged, "wiggle-0");
  note(c);
  c = phase_controller_step(c, PhaseEvent::Converged, "bob-0");
  note(c);
  for (int k = 0; k < 3; ++k) {
    c = phase_controller_step(c, PhaseEvent::FailedBudget);
    note(c);
  }
  const std::vector<std::string> expected{"wiggle/0/r0/s0",    "wiggle/0/r1/s1/rev", "wiggle/0/r2/s2/rev",
                                          "bob/0/r0/s2",       "walk/1/r0/s2",       "walk/1/r1/s3/rev",
                                          "walk/1/r2/s4/rev",  "walk/1/r2/s4/abort"};
  const bool controller_ok = trace == expected && c.policy_ref == "bob-0";
  return {ok == static_cast<int>(scripts.size()) && scripts.size() >= 10 && controller_ok,
          std::to_string(ok) + "/" + std::to_string(scripts.size()) + " streams match" +
              (failed.empty() ? "" : " (failed:" + failed + ")") + ", controller sequence " +
              (controller_ok ? "matches" : "differs")};
}

// --- 9 ----------------------------------------------------------------------
double wiggle_by_hand(int s, double w, double vx, double vy, const std::vector<double>& da, long streak,
                      const RewardCoeffs& c) {
  const double sw = s * w;
  double jerk = 0.0;
  for (double x : da) jerk += x * x;
  double r = 0.0;
  if (sw > 0) r += c.alpha * sw;
  else r -= c.lambda_back * (-sw);
  r -= c.lambda_v * std::sqrt(vx * vx + vy * vy);
  r -= c.lambda_jerk_wiggle * jerk;
  r += c.k * static_cast<double>(streak);
  return r;
}

double bob_by_hand(double vz, double vx, double vy, const std::vector<double>& da, const RewardCoeffs& c) {
  double jerk = 0.0;
  for (double x : da) jerk += x * x;
  double r = vz > 0 ? c.beta * vz : 0.0;
  return r - c.lambda_drift * std::sqrt(vx * vx + vy * vy) - c.lambda_jerk_bob * jerk;
}

Outcome reward_formulas() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-5.0, 5.0), coef(0.0, 3.0);
  std::uniform_int_distribution<int> dim(0, 12), streak(0, 1000), sign(0, 1);
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    RewardCoeffs c{coef(rng), coef(rng), coef(rng), coef(rng), coef(rng), coef(rng), coef(rng), coef(rng)};
    std::vector<double> da(static_cast<std::size_t>(dim(rng)));
    for (auto& x : da) x = u(rng);
    const int s = sign(rng) ? 1 : -1;
    const double w = u(rng), vx = u(rng), vy = u(rng), vz = u(rng);
    const long n = streak(rng);
    const double a = wiggle_reward(s, w, {vx, vy}, da, n, c), a0 = wiggle_by_hand(s, w, vx, vy, da, n, c);
    const double b = bob_reward(vz, {vx, vy}, da, c), b0 = bob_by_hand(vz, vx, vy, da, c);
    if (std::abs(a - a0) <= 1e-12 * std::max(1.0, std::abs(a0)) && std::abs(b - b0) <= 1e-12 * std::max(1.0, std::abs(b0)))
      ++ok;
  }
  // term isolation
  const std::vector<double> none;
  RewardCoeffs alpha;
  alpha.alpha = 1.0;
  RewardCoeffs back = alpha;
  back.lambda_back = 0.5;
  RewardCoeffs bob;
  bob.beta = 2.0;
  bob.lambda_drift = 0.1;
  bool bad_direction = false;
  try {
    wiggle_reward(0, 1.0, {}, none, 0, alpha);
  } catch (const Error& e) {
    bad_direction = e.code() == ErrorCode::BadDirection;
  }
  const bool trivial = wiggle_reward(1, 0.0, {}, none, 0, RewardCoeffs{}) == 0.0 &&
                       wiggle_reward(1, 2.0, {}, none, 0, alpha) == 2.0 &&
                       wiggle_reward(-1, 2.0, {}, none, 0, back) == -1.0 && bob_reward(-3.0, {}, none, bob) == 0.0 &&
                       std::abs(bob_reward(1.0, {3.0, 4.0}, none, bob) - 1.5) <= 1e-15 && bad_direction;
  return {ok == 1000 && trivial,
          std::to_string(ok) + "/1000 random inputs agree, term isolation " + (trivial ? "exact" : "differs")};
}

// --- 10 ---------------------------------------------------------------------
Outcome analyze_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "selfnet_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  nlohmann::json runs = nlohmann::json::array();
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    PlantedSpec spec;
    spec.seed = 900 + seed;
    spec.chain_length = 4;
    spec.first_cycle = 16;
    spec.module_sizes = {80, 40, 20};
    spec.dead_units = 3;
    const auto chain = planted_traces(spec);
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& raw : chain.raw) {
      write_trace(dir / (raw.info.checkpoint_id + ".actv"), raw);
      paths.push_back(raw.info.checkpoint_id + ".actv");
    }
    runs.push_back({{"run_id", "run" + std::to_string(seed)}, {"chains", {{{"layer", 1}, {"checkpoints", paths}}}}});
  }
  const nlohmann::json cfg = {{"runs", runs}, {"sweep", true}, {"export_matrices", true}, {"overlay", true},
                              {"output_dir", "out"}};
  std::ofstream(dir / "config.json") << cfg.dump(2);

  auto run = [&](const std::string& name) -> std::optional<nlohmann::json> {
    const fs::path out = dir / name;
    const std::string cmd = std::string("\"") + SELFNET_CLI_PATH + "\" analyze --config \"" +
                            (dir / "config.json").string() + "\" --out \"" + out.string() + "\" 2>/dev/null";
    if (std::system(cmd.c_str()) != 0) return std::nullopt;
    std::ifstream in(out);
    auto j = nlohmann::json::parse(in);
    j.erase("generated_at");
    return j;
  };
  const auto a = run("report_a.json");
  const auto b = run("report_b.json");
  if (!a || !b) return {false, "analyze exited with an error"};
  const bool same = a->dump() == b->dump();
  return {same && (*a)["errors"].empty(),
          std::string("reports ") + (same ? "identical" : "differ") + " apart from generated_at (" +
              std::to_string(a->dump().size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"summary statistics replay", replay_statistics},
      {"planted partition recovery", planted_recovery},
      {"assignment optimality", hungarian_optimality},
      {"component correctness", component_correctness},
      {"tau monotonicity", tau_monotonicity},
      {"persistence calibration", persistence_calibration},
      {"rcm bandwidth", rcm_bandwidth},
      {"plateau state machine", plateau_machine},
      {"reward formulas", reward_formulas},
      {"analyze determinism", analyze_determinism},
  };
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--criterion") only = std::atoi(argv[i + 1]);

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int number = static_cast<int>(k) + 1;
    if (only != 0 && only != number) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << number << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
