// selfnet command line: analysis pipeline, tau sweep, planted chains,
// plateau replay, alluvial export, overlay blending and trace collection.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "selfnet/curriculum.hpp"
#include "selfnet/error.hpp"
#include "selfnet/pipeline.hpp"
#include "selfnet/synthetic.hpp"
#include "selfnet/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfnet;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

// Plain numeric CSV. A first line that does not parse as numbers is a header.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": not numeric");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

PlantedSpec parse_planted_spec(const json& j) {
  static const std::vector<std::string> allowed{"H",          "T",           "module_sizes", "within_corr",
                                                "cross_corr", "stable_modules", "plastic_noise", "chain_length",
                                                "dead_units", "random_permutations", "permutations", "seed",
                                                "layer",      "first_cycle"};
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "spec must be an object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in spec");
  PlantedSpec s;
  try {
    s.H = j.value("H", s.H);
    s.T = j.value("T", s.T);
    s.module_sizes = j.value("module_sizes", s.module_sizes);
    s.within_corr = j.value("within_corr", s.within_corr);
    s.cross_corr = j.value("cross_corr", s.cross_corr);
    s.stable_modules = j.value("stable_modules", s.stable_modules);
    s.plastic_noise = j.value("plastic_noise", s.plastic_noise);
    s.chain_length = j.value("chain_length", s.chain_length);
    s.dead_units = j.value("dead_units", s.dead_units);
    s.random_permutations = j.value("random_permutations", s.random_permutations);
    s.permutations = j.value("permutations", s.permutations);
    s.seed = j.value("seed", s.seed);
    s.layer = j.value("layer", s.layer);
    s.first_cycle = j.value("first_cycle", s.first_cycle);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return s;
}

json spec_json(const PlantedSpec& s) {
  return {{"H", s.H},
          {"T", s.T},
          {"module_sizes", s.module_sizes},
          {"within_corr", s.within_corr},
          {"cross_corr", s.cross_corr},
          {"stable_modules", s.stable_modules},
          {"plastic_noise", s.plastic_noise},
          {"chain_length", s.chain_length},
          {"dead_units", s.dead_units},
          {"random_permutations", s.random_permutations},
          {"seed", s.seed},
          {"layer", s.layer},
          {"first_cycle", s.first_cycle}};
}

// ---------------------------------------------------------------------------

int cmd_analyze(const fs::path& config_path, const fs::path& out) {
  const auto cfg = AnalysisConfig::load(config_path);
  const auto report = run_pipeline(cfg);
  fs::path target = out;
  if (target.empty() && !cfg.output_dir.empty()) target = cfg.output_dir / "report.json";
  write_text(target, report.to_json().dump(2) + "\n");
  if (!target.empty()) std::cerr << "report written to " << target.string() << "\n";
  return report.body["errors"].empty() ? 0 : 3;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) return default_tau_grid();
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      grid.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "bad grid value '" + cell + "'");
    }
  }
  return grid;
}

int cmd_sweep(const fs::path& config_path, const std::string& grid_text, const fs::path& out, bool as_json) {
  auto cfg = AnalysisConfig::load(config_path);
  const auto grid = grid_text.empty() ? cfg.sweep_grid : parse_grid(grid_text);
  std::vector<SweepChain> chains;
  for (const auto& run : cfg.runs)
    for (const auto& spec : run.chains) {
      SweepChain chain{run.run_id, spec.layer, {}};
      for (const auto& p : spec.checkpoints) chain.traces.push_back(zscore_normalize(read_trace(p), cfg.dead_std_threshold));
      if (static_cast<long>(chain.traces.front().info.cycle) > cfg.stabilization_cutoff) chains.push_back(std::move(chain));
    }
  if (chains.empty()) throw Error(ErrorCode::ConfigError, "no chain starts after the stabilization cutoff");
  const auto rows = tau_sweep(chains, grid, cfg.membership);
  if (as_json) {
    json j = json::array();
    for (const auto& r : rows) j.push_back(to_json(r));
    write_text(out, j.dump(2) + "\n");
  } else {
    write_text(out, sweep_csv(rows));
  }
  return 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  auto spec = parse_planted_spec(spec_path.empty() ? json::object() : read_json(spec_path));
  if (seed) spec.seed = *seed;
  const auto chain = planted_traces(spec);
  fs::create_directories(out_dir);
  json checkpoints = json::array();
  for (const auto& raw : chain.raw) {
    const std::string name = raw.info.checkpoint_id + ".actv";
    write_trace(out_dir / name, raw);
    checkpoints.push_back(name);
  }
  json partitions = json::array();
  for (const auto& p : chain.truth.partitions) partitions.push_back({{"groups", p.groups}, {"dead", p.dead}});
  const json truth = {{"spec", spec_json(spec)},
                      {"checkpoints", checkpoints},
                      {"module_of", chain.truth.module_of},
                      {"partitions", partitions},
                      {"permutations", chain.truth.permutations},
                      {"stable_modules", chain.truth.stable_modules}};
  write_text(out_dir / "truth.json", truth.dump(2) + "\n");
  // ready-to-run analysis config over the generated chain
  const json config = {{"runs", {{{"run_id", chain.raw.front().info.run_id},
                                  {"chains", {{{"layer", spec.layer}, {"checkpoints", checkpoints}}}}}}},
                       {"output_dir", "analysis"}};
  write_text(out_dir / "config.json", config.dump(2) + "\n");
  std::cerr << "wrote " << chain.raw.size() << " checkpoints to " << out_dir.string() << "\n";
  return 0;
}

int cmd_plateau(const fs::path& returns_path, const PlateauConfig& cfg, const fs::path& out) {
  const auto rows = read_numeric_csv(returns_path);
  PhaseState state;
  json trace = json::array();
  std::uint64_t last_step = 0;
  std::uint64_t last_completed = 0;
  PlateauDecision decision = PlateauDecision::Continue;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw Error(ErrorCode::InvalidArgument, "expected step,episode_return rows");
    const double step_value = rows[i][0];
    if (!(step_value >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative step count");
    const auto step = static_cast<std::uint64_t>(step_value);
    if (step < last_step) throw Error(ErrorCode::InvalidArgument, "steps must be non-decreasing");
    const double r = rows[i][1];
    auto outcome = plateau_step(std::move(state), std::span<const double>(&r, 1), step - last_step, cfg);
    state = std::move(outcome.state);
    decision = outcome.decision;
    last_step = step;
    const std::uint64_t completed = state.episodes_seen / cfg.episode_window;
    if (completed != last_completed || decision != PlateauDecision::Continue) {
      last_completed = completed;
      json e = {{"episode", state.episodes_seen}, {"step", step}, {"decision", to_string(decision)}};
      e["mu_prev"] = state.mu_prev ? json(*state.mu_prev) : json(nullptr);
      e["mu_recent"] = state.mu_recent ? json(*state.mu_recent) : json(nullptr);
      e["sigma"] = state.sigma ? json(*state.sigma) : json(nullptr);
      trace.push_back(e);
    }
    if (decision != PlateauDecision::Continue) break;
  }
  const auto event = phase_event(state);
  const json report = {{"config",
                        {{"plateau_min_steps", cfg.min_steps},
                         {"max_steps_phase", cfg.max_steps_phase},
                         {"plateau_episode_window", cfg.episode_window},
                         {"plateau_min_return", cfg.min_return},
                         {"plateau_rel_change", cfg.rel_change},
                         {"plateau_std_coeff", cfg.std_coeff},
                         {"epsilon", cfg.epsilon}}},
                       {"episodes", state.episodes_seen},
                       {"aggregated_steps", state.aggregated_steps},
                       {"decision", to_string(decision)},
                       {"status", to_string(state.status)},
                       {"event", event ? json(*event == PhaseEvent::Converged ? "converged" : "failed_budget")
                                       : json(nullptr)},
                       {"trace", trace}};
  write_text(out, report.dump(2) + "\n");
  return 0;
}

int cmd_export_alluvial(const fs::path& report_path, const fs::path& out, bool as_json) {
  const json report = read_json(report_path);
  if (!report.contains("chains")) throw Error(ErrorCode::ConfigError, "not an analysis report");
  json flows = json::array();
  std::ostringstream csv;
  csv << "run_id,layer,from,to,source_group,target_group,source_label,target_label,count,mean_persistence\n";
  csv.precision(12);
  for (const auto& chain : report["chains"]) {
    const auto& ids = chain["checkpoints"];
    for (const auto& f : chain["alluvial"]) {
      json e = f;
      e["run_id"] = chain["run_id"];
      e["layer"] = chain["layer"];
      e["from_checkpoint"] = ids.at(f["from"].get<std::size_t>());
      e["to_checkpoint"] = ids.at(f["to"].get<std::size_t>());
      flows.push_back(e);
      csv << chain["run_id"].get<std::string>() << ',' << chain["layer"].get<int>() << ','
          << e["from_checkpoint"].get<std::string>() << ',' << e["to_checkpoint"].get<std::string>() << ','
          << f["source_group"].get<int>() << ',' << f["target_group"].get<int>() << ','
          << f["source_label"].get<std::string>() << ',' << f["target_label"].get<std::string>() << ','
          << f["count"].get<std::size_t>() << ',' << f["mean_persistence"].get<double>() << '\n';
    }
  }
  write_text(out, as_json ? flows.dump(2) + "\n" : csv.str());
  return 0;
}

int cmd_blend(const std::vector<fs::path>& inputs, const fs::path& ordering_path, bool reorder, const fs::path& out) {
  std::vector<Matrix> mats;
  TraceInfo info;
  for (const auto& p : inputs) {
    auto t = read_trace(p);
    if (mats.empty()) info = t.info;
    mats.push_back(t.values.cwiseAbs());
  }
  NeuronOrdering ordering;
  if (!ordering_path.empty()) {
    const json j = read_json(ordering_path);
    ordering.perm = j.at("perm").get<std::vector<int>>();
    ordering.block_boundaries = j.value("boundaries", std::vector<int>{});
  } else {
    ordering.perm.resize(static_cast<std::size_t>(mats.front().rows()));
    std::iota(ordering.perm.begin(), ordering.perm.end(), 0);
  }
  if (reorder)
    for (auto& m : mats) {
      if (m.rows() != static_cast<Eigen::Index>(ordering.perm.size()))
        throw Error(ErrorCode::DimensionMismatch, "matrix does not fit the ordering");
      m = permute_symmetric(m, ordering);
    }
  ActivationTrace result;
  result.info = info;
  result.info.checkpoint_id = "overlay";
  result.values = overlay_blend(mats, ordering);
  write_trace(out, result);
  std::cerr << "blended " << mats.size() << " matrices into " << out.string() << "\n";
  return 0;
}

int cmd_collect(const fs::path& weights_path, const fs::path& states_path, const fs::path& out_dir, TraceInfo base,
                const std::string& behavior) {
  const auto weights = read_mlp_json(weights_path);
  const auto rows = read_numeric_csv(states_path);
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "no reference states");
  ReferenceSet refs;
  refs.states.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw Error(ErrorCode::DimensionMismatch, "ragged state rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      refs.states(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  base.behavior = Behavior::parse(behavior);
  if (base.reference_id.empty()) base.reference_id = states_path.filename().string();
  fs::create_directories(out_dir);
  for (const auto& t : mlp_forward_collect(weights, refs, base)) {
    const auto path = out_dir / (t.info.checkpoint_id + "_L" + std::to_string(t.info.layer) + ".actv");
    write_trace(path, t);
    std::cerr << path.string() << ": " << t.values.rows() << " x " << t.values.cols() << "\n";
  }
  return 0;
}

int cmd_import_csv(const fs::path& csv_path, const fs::path& out, TraceInfo info, const std::string& behavior) {
  info.behavior = Behavior::parse(behavior);
  write_trace(out, read_trace_csv(csv_path, info));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selfnet: persistent and plastic subnetworks across policy checkpoints"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  fs::path config_path, out_path, spec_path, returns_path, ordering_path, weights_path, states_path, csv_path;
  std::string grid_text, behavior = "other";
  bool as_json = false, reorder = false;
  std::optional<std::uint64_t> seed;
  std::vector<fs::path> inputs;
  PlateauConfig plateau;
  TraceInfo info;
  std::uint32_t cycle = 0;
  std::uint16_t layer = 1;

  auto* analyze = app.add_subcommand("analyze", "run the full analysis over a config and write the JSON report");
  analyze->add_option("--config", config_path, "analysis config (JSON)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", out_path, "report path (default: <output_dir>/report.json, else stdout)");

  auto* sweep = app.add_subcommand("sweep", "tau sensitivity sweep over the chains of a config");
  sweep->add_option("--config", config_path, "analysis config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid_text, "comma-separated tau values (default: config sweep_grid)");
  sweep->add_option("--out", out_path, "output path (default stdout)");
  sweep->add_flag("--json", as_json, "emit JSON rows instead of CSV");

  auto* synth = app.add_subcommand("synth", "write a planted-structure chain, its ground truth and a config");
  synth->add_option("--spec", spec_path, "planted spec (JSON); defaults when omitted")->check(CLI::ExistingFile);
  synth->add_option("--out", out_path, "output directory")->required();
  synth->add_option("--seed", seed, "override the spec seed");

  auto* plateau_sim = app.add_subcommand("plateau-sim", "replay episode returns through the plateau detector");
  plateau_sim->add_option("--returns", returns_path, "CSV of step,episode_return")->required()->check(CLI::ExistingFile);
  plateau_sim->add_option("--plateau_min_steps", plateau.min_steps, "warm-up guard in aggregated steps")
      ->capture_default_str();
  plateau_sim->add_option("--max_steps_phase", plateau.max_steps_phase, "hard cap in aggregated steps")
      ->capture_default_str();
  plateau_sim->add_option("--plateau_episode_window", plateau.episode_window, "episodes per window")
      ->capture_default_str();
  plateau_sim->add_option("--plateau_min_return", plateau.min_return, "minimum recent mean return")
      ->capture_default_str();
  plateau_sim->add_option("--plateau_rel_change", plateau.rel_change, "maximum relative change of window means")
      ->capture_default_str();
  plateau_sim->add_option("--plateau_std_coeff", plateau.std_coeff, "std safeguard coefficient")
      ->capture_default_str();
  plateau_sim->add_option("--epsilon", plateau.epsilon, "denominator guard")->capture_default_str();
  plateau_sim->add_option("--out", out_path, "output path (default stdout)");

  auto* alluvial = app.add_subcommand("export-alluvial", "extract alluvial flows from an analysis report");
  alluvial->add_option("--report", config_path, "report written by analyze")->required()->check(CLI::ExistingFile);
  alluvial->add_option("--out", out_path, "output path (default stdout)");
  alluvial->add_flag("--json", as_json, "emit JSON instead of CSV");

  auto* blend = app.add_subcommand("blend", "element-wise mean of |R| matrices in a shared ordering");
  blend->add_option("--inputs", inputs, ".actv matrices")->required()->check(CLI::ExistingFile);
  blend->add_option("--ordering", ordering_path, "ordering JSON with a perm array")->check(CLI::ExistingFile);
  blend->add_flag("--reorder", reorder, "apply the ordering to the inputs first");
  blend->add_option("--out", out_path, "output .actv")->required();

  auto* collect = app.add_subcommand("collect", "record hidden-layer traces of an MLP on reference states");
  collect->add_option("--weights", weights_path, ".mlpw JSON")->required()->check(CLI::ExistingFile);
  collect->add_option("--states", states_path, "CSV with one reference state per row")->required()->check(CLI::ExistingFile);
  collect->add_option("--out", out_path, "output directory")->required();
  collect->add_option("--checkpoint-id", info.checkpoint_id, "checkpoint id")->required();
  collect->add_option("--run-id", info.run_id, "run id");
  collect->add_option("--cycle", cycle, "curriculum cycle");
  collect->add_option("--behavior", behavior, "walk, wiggle, bob or other");
  collect->add_option("--reference-id", info.reference_id, "reference set tag (default: states file name)");

  auto* import_csv = app.add_subcommand("import-csv", "convert a neuron,s0,s1,... CSV into an .actv trace");
  import_csv->add_option("--csv", csv_path, "input CSV")->required()->check(CLI::ExistingFile);
  import_csv->add_option("--out", out_path, "output .actv")->required();
  import_csv->add_option("--checkpoint-id", info.checkpoint_id, "checkpoint id")->required();
  import_csv->add_option("--run-id", info.run_id, "run id");
  import_csv->add_option("--cycle", cycle, "curriculum cycle");
  import_csv->add_option("--layer", layer, "layer index");
  import_csv->add_option("--behavior", behavior, "walk, wiggle, bob or other");

  CLI11_PARSE(app, argc, argv);

  try {
    info.cycle = cycle;
    info.layer = layer;
    if (*analyze) return cmd_analyze(config_path, out_path);
    if (*sweep) return cmd_sweep(config_path, grid_text, out_path, as_json);
    if (*synth) return cmd_synth(spec_path, out_path, seed);
    if (*plateau_sim) {
      plateau.validate();
      return cmd_plateau(returns_path, plateau, out_path);
    }
    if (*alluvial) return cmd_export_alluvial(config_path, out_path, as_json);
    if (*blend) return cmd_blend(inputs, ordering_path, reorder, out_path);
    if (*collect) return cmd_collect(weights_path, states_path, out_path, info, behavior);
    if (*import_csv) return cmd_import_csv(csv_path, out_path, info, behavior);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
