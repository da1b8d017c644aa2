#include "selfnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "selfnet/error.hpp"

namespace selfnet {

using nlohmann::json;

std::vector<double> default_tau_grid() {
  return {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99, 1.00};
}

// ---------------------------------------------------------------------------
// config

std::size_t MembershipRule::resolve(std::size_t chain_length) const {
  switch (kind) {
    case Kind::First: return 0;
    case Kind::Last: return chain_length - 1;
    case Kind::Index:
      if (index < 0 || static_cast<std::size_t>(index) >= chain_length)
        throw Error(ErrorCode::ConfigError, "membership index " + std::to_string(index) + " outside the chain");
      return static_cast<std::size_t>(index);
  }
  return chain_length - 1;
}

std::string MembershipRule::describe() const {
  switch (kind) {
    case Kind::First: return "first";
    case Kind::Last: return "last";
    case Kind::Index: return std::to_string(index);
  }
  return "last";
}

MembershipRule MembershipRule::parse(const json& j) {
  MembershipRule rule;
  if (j.is_number_integer()) {
    rule.kind = Kind::Index;
    rule.index = j.get<int>();
  } else if (j.is_string() && j.get<std::string>() == "first") {
    rule.kind = Kind::First;
  } else if (j.is_string() && j.get<std::string>() == "last") {
    rule.kind = Kind::Last;
  } else {
    throw Error(ErrorCode::ConfigError, "membership must be \"first\", \"last\" or a checkpoint index");
  }
  return rule;
}

void AnalysisConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::TauOutOfRange, "tau = " + std::to_string(tau));
  for (double g : sweep_grid)
    if (!(g > 0.0 && g <= 1.0)) throw Error(ErrorCode::TauOutOfRange, "sweep grid value " + std::to_string(g));
  if (!(dead_std_threshold > 0.0)) throw Error(ErrorCode::ConfigError, "dead_std_threshold must be positive");
  for (const auto& run : runs)
    for (const auto& chain : run.chains)
      if (chain.checkpoints.size() < 2)
        throw Error(ErrorCode::ChainTooShort, "run " + run.run_id + " layer " + std::to_string(chain.layer));
}

json AnalysisConfig::to_json() const {
  json runs_json = json::array();
  for (const auto& run : runs) {
    json chains = json::array();
    for (const auto& c : run.chains) {
      json paths = json::array();
      for (const auto& p : c.checkpoints) paths.push_back(p.generic_string());
      chains.push_back({{"layer", c.layer}, {"checkpoints", paths}});
    }
    runs_json.push_back({{"run_id", run.run_id}, {"chains", chains}});
  }
  json membership_json = membership.kind == MembershipRule::Kind::Index ? json(membership.index) : json(membership.describe());
  return {{"runs", runs_json},
          {"tau", tau},
          {"dead_std_threshold", dead_std_threshold},
          {"membership", membership_json},
          {"benchmark", benchmark},
          {"sweep", sweep},
          {"sweep_grid", sweep_grid},
          {"stabilization_cutoff", stabilization_cutoff},
          {"output_dir", output_dir.generic_string()},
          {"seed", seed},
          {"export_matrices", export_matrices},
          {"overlay", overlay}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

AnalysisConfig AnalysisConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"runs", "tau", "dead_std_threshold", "membership", "benchmark", "sweep", "sweep_grid",
                     "stabilization_cutoff", "output_dir", "seed", "export_matrices", "overlay"},
                 "config");
  AnalysisConfig cfg;
  try {
    for (const auto& jr : j.at("runs")) {
      reject_unknown(jr, {"run_id", "chains"}, "run");
      RunSpec run;
      run.run_id = jr.at("run_id").get<std::string>();
      for (const auto& jc : jr.at("chains")) {
        reject_unknown(jc, {"layer", "checkpoints"}, "chain");
        ChainSpec chain;
        chain.layer = jc.at("layer").get<int>();
        for (const auto& p : jc.at("checkpoints")) chain.checkpoints.push_back(resolve(base_dir, p.get<std::string>()));
        run.chains.push_back(std::move(chain));
      }
      cfg.runs.push_back(std::move(run));
    }
    cfg.tau = j.value("tau", cfg.tau);
    cfg.dead_std_threshold = j.value("dead_std_threshold", cfg.dead_std_threshold);
    if (j.contains("membership")) cfg.membership = MembershipRule::parse(j.at("membership"));
    cfg.benchmark = j.value("benchmark", cfg.benchmark);
    cfg.sweep = j.value("sweep", cfg.sweep);
    if (j.contains("sweep_grid")) cfg.sweep_grid = j.at("sweep_grid").get<std::vector<double>>();
    cfg.stabilization_cutoff = j.value("stabilization_cutoff", cfg.stabilization_cutoff);
    if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.export_matrices = j.value("export_matrices", cfg.export_matrices);
    cfg.overlay = j.value("overlay", cfg.overlay);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  cfg.validate();
  return cfg;
}

AnalysisConfig AnalysisConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// alluvial flows and overlays

std::vector<AlluvialFlow> export_alluvial(const FamilySet& families, const std::vector<SubnetworkPartition>& partitions,
                                          const std::vector<PersistenceRecord>& records) {
  if (partitions.size() != families.chain.size())
    throw Error(ErrorCode::DimensionMismatch, "need one partition per checkpoint");
  std::vector<std::vector<int>> group_of;
  for (const auto& p : partitions) {
    int n = 0;
    for (const auto& g : p.groups) n = std::max(n, g.empty() ? 0 : g.back() + 1);
    for (int d : p.dead) n = std::max(n, d + 1);
    group_of.push_back(p.group_of(n));
  }
  std::vector<AlluvialFlow> flows;
  for (std::size_t c = 0; c + 1 < partitions.size(); ++c) {
    std::map<std::pair<int, int>, std::pair<std::size_t, double>> acc;
    for (const auto& rec : records) {
      const auto& fam = families.families.at(rec.family_id);
      if (!fam[c] || !fam[c + 1]) continue;
      const auto src_unit = static_cast<std::size_t>(*fam[c]);
      const auto dst_unit = static_cast<std::size_t>(*fam[c + 1]);
      if (src_unit >= group_of[c].size() || dst_unit >= group_of[c + 1].size()) continue;
      const int src = group_of[c][src_unit];
      const int dst = group_of[c + 1][dst_unit];
      if (src < 0 || dst < 0) continue;
      auto& slot = acc[{src, dst}];
      ++slot.first;
      slot.second += rec.persistence;
    }
    for (const auto& [key, value] : acc) {
      AlluvialFlow f;
      f.from_checkpoint = c;
      f.to_checkpoint = c + 1;
      f.source_group = key.first;
      f.target_group = key.second;
      f.count = value.first;
      f.mean_persistence = value.second / static_cast<double>(value.first);
      flows.push_back(f);
    }
  }
  return flows;
}

Matrix overlay_blend(const std::vector<Matrix>& reordered, const NeuronOrdering& ordering) {
  if (reordered.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to blend");
  const auto n = static_cast<Eigen::Index>(ordering.perm.size());
  Matrix sum = Matrix::Zero(n, n);
  for (const auto& m : reordered) {
    if (m.rows() != n || m.cols() != n)
      throw Error(ErrorCode::DimensionMismatch, "matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                                    " does not fit an ordering of " + std::to_string(n));
    sum += m;
  }
  return sum / static_cast<double>(reordered.size());
}

// ---------------------------------------------------------------------------
// per-chain analysis

ChainAnalysis analyze_chain(std::vector<NormalizedTrace> traces, const ChainOptions& options, std::string run_id) {
  if (traces.size() < 2) throw Error(ErrorCode::ChainTooShort, "need at least two checkpoints");
  ChainAnalysis out;
  out.run_id = std::move(run_id);
  out.layer = traces.front().info.layer;
  out.traces = std::move(traces);

  std::vector<Graph> graphs;
  for (const auto& t : out.traces) {
    out.similarities.push_back(coactivation_matrix(t));
    graphs.push_back(threshold_graph(out.similarities.back(), options.tau));
    auto part = connected_components(graphs.back());
    part.tau = options.tau;
    out.orderings.push_back(block_layout(part, graphs.back()));
    out.partitions.push_back(std::move(part));
  }

  out.membership_checkpoint = options.membership.resolve(out.traces.size());
  out.families = build_families(out.traces);
  out.persistence = persistence_scores(out.families, out.traces);
  const auto& member_trace = out.traces[out.membership_checkpoint];
  const auto& member_part = out.partitions[out.membership_checkpoint];
  out.stats = aggregate_by_subnetwork(out.persistence.records, out.families, member_part, out.membership_checkpoint,
                                      static_cast<int>(member_trace.neurons()));
  out.stats.layer = out.layer;
  out.stats.cycle = static_cast<int>(member_trace.info.cycle);
  out.group_persistence = group_persistence(out.persistence.records, out.families, member_part,
                                            out.membership_checkpoint, static_cast<int>(member_trace.neurons()));

  for (std::size_t c = 0; c + 1 < out.traces.size(); ++c) {
    TransitionResult tr;
    tr.from_checkpoint = c;
    tr.included = static_cast<long>(out.traces[c].info.cycle) > options.stabilization_cutoff;
    try {
      tr.delta = transition_delta(out.traces[c], out.traces[c + 1], out.partitions[c + 1], out.families.matchings[c]);
    } catch (const Error& e) {
      tr.included = false;
      tr.error = e.what();
    }
    out.transitions.push_back(std::move(tr));
  }
  out.flows = export_alluvial(out.families, out.partitions, out.persistence.records);
  return out;
}

// ---------------------------------------------------------------------------
// tau sweep

std::vector<SweepRow> tau_sweep(const std::vector<SweepChain>& chains, const std::vector<double>& grid,
                                const MembershipRule& membership) {
  for (double tau : grid)
    if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::TauOutOfRange, "tau = " + std::to_string(tau));

  struct Prepared {
    const SweepChain* chain;
    std::size_t member;
    SimilarityMatrix sim;
    FamilySet families;
    PersistenceResult persistence;
  };
  std::vector<Prepared> prepared;
  std::set<int> layers;
  for (const auto& chain : chains) {
    Prepared p{&chain, membership.resolve(chain.traces.size()), {}, {}, {}};
    p.sim = coactivation_matrix(chain.traces[p.member]);
    p.families = build_families(chain.traces);
    p.persistence = persistence_scores(p.families, chain.traces);
    layers.insert(chain.layer);
    prepared.push_back(std::move(p));
  }

  std::vector<SweepRow> rows;
  for (double tau : grid) {
    for (int layer : layers) {
      // run -> (separations, self sizes, task sizes)
      std::map<std::string, std::tuple<std::vector<double>, std::vector<double>, std::vector<double>>> per_run;
      for (const auto& p : prepared) {
        if (p.chain->layer != layer) continue;
        const Graph g = threshold_graph(p.sim, tau);
        auto part = connected_components(g);
        part.tau = tau;
        auto& [seps, selfs, tasks] = per_run[p.chain->run_id];
        if (part.groups.empty()) continue;
        const auto stats = aggregate_by_subnetwork(p.persistence.records, p.families, part, p.member,
                                                   static_cast<int>(p.chain->traces[p.member].neurons()));
        selfs.push_back(stats.self_size);
        tasks.push_back(stats.task_size);
        if (stats.separation) seps.push_back(*stats.separation);
      }
      SweepRow row;
      row.tau = tau;
      row.layer = layer;
      std::vector<double> run_seps, run_self, run_task;
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      for (const auto& [run, data] : per_run) {
        const auto& [seps, selfs, tasks] = data;
        if (!selfs.empty()) {
          run_self.push_back(mean(selfs));
          run_task.push_back(mean(tasks));
        }
        if (!seps.empty()) run_seps.push_back(mean(seps));
      }
      row.runs = run_self.size();
      if (!run_self.empty()) {
        row.self_size = mean(run_self);
        row.task_size = mean(run_task);
      }
      if (!run_seps.empty()) {
        row.sep_mean = mean(run_seps);
        row.q10 = quantile(run_seps, 0.10);
        row.q25 = quantile(run_seps, 0.25);
        row.q50 = quantile(run_seps, 0.50);
        row.q75 = quantile(run_seps, 0.75);
        row.q90 = quantile(run_seps, 0.90);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "tau,layer,self_size,task_size,sep_mean,q10,q25,q50,q75,q90\n";
  auto cell = [&](const std::optional<double>& v) {
    if (v) out << *v;
    else out << "nan";
  };
  for (const auto& r : rows) {
    out << r.tau << ',' << r.layer << ',' << r.self_size << ',' << r.task_size << ',';
    cell(r.sep_mean);
    for (const auto* q : {&r.q10, &r.q25, &r.q50, &r.q75, &r.q90}) {
      out << ',';
      cell(*q);
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON views

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json partition_json(const SubnetworkPartition& p, const std::string& checkpoint_id) {
  json sizes = json::array();
  for (const auto& g : p.groups) sizes.push_back(g.size());
  return {{"checkpoint", checkpoint_id}, {"tau", p.tau}, {"group_sizes", sizes}, {"groups", p.groups}, {"dead", p.dead}};
}

}  // namespace

json to_json(const StatSummary& s) {
  return {{"n", s.n},   {"mean", s.mean},       {"s", s.s},           {"se", s.se},
          {"z", opt(s.z)}, {"log10_p", opt(s.log10_p)}, {"lb99", s.lb99}, {"benchmark", s.benchmark},
          {"z_b", opt(s.z_b)}, {"log10_p_b", opt(s.log10_p_b)}, {"degenerate", s.degenerate()}};
}

json to_json(const SubnetworkStats& s) {
  return {{"layer", s.layer},
          {"cycle", s.cycle},
          {"self_size", s.self_size},
          {"task_size", s.task_size},
          {"self_families", s.self_families},
          {"task_families", s.task_families},
          {"self_persistence", opt(s.self_persistence)},
          {"task_persistence", opt(s.task_persistence)},
          {"separation", opt(s.separation)},
          {"empty_task_pool", s.empty_task_pool}};
}

json to_json(const FamilySet& f) {
  json families = json::array();
  for (const auto& fam : f.families) {
    json members = json::array();
    for (const auto& u : fam) members.push_back(u ? json(*u) : json(nullptr));
    families.push_back(members);
  }
  return {{"chain", f.chain}, {"families", families}, {"incomplete", f.incomplete_families()}};
}

json to_json(const AlluvialFlow& f) {
  return {{"from", f.from_checkpoint},          {"to", f.to_checkpoint},
          {"source_group", f.source_group},     {"target_group", f.target_group},
          {"source_label", f.source_label()},   {"target_label", f.target_label()},
          {"count", f.count},                   {"mean_persistence", f.mean_persistence}};
}

json to_json(const SweepRow& r) {
  return {{"tau", r.tau},         {"layer", r.layer},   {"self_size", r.self_size}, {"task_size", r.task_size},
          {"sep_mean", opt(r.sep_mean)}, {"q10", opt(r.q10)}, {"q25", opt(r.q25)},    {"q50", opt(r.q50)},
          {"q75", opt(r.q75)},    {"q90", opt(r.q90)},  {"runs", r.runs}};
}

json to_json(const TransitionDelta& d) {
  return {{"source", d.source_id}, {"target", d.target_id}, {"layer", d.layer}, {"source_cycle", d.source_cycle},
          {"c_self", d.c_self},    {"c_task", d.c_task},    {"delta", d.delta}, {"n_self", d.n_self},
          {"n_task", d.n_task}};
}

json to_json(const NeuronOrdering& o) { return {{"perm", o.perm}, {"boundaries", o.block_boundaries}}; }

json AnalysisReport::to_json() const {
  json j = body;
  j["generated_at"] = generated_at;
  return j;
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string matrix_stem(const std::string& run_id, int layer, const std::string& what) {
  std::string s = what + "_" + run_id + "_L" + std::to_string(layer);
  for (auto& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) ch = '_';
  return s;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m, const TraceInfo& info) {
  ActivationTrace container;
  container.info = info;
  container.values = m;
  write_trace(path, container);
}

json chain_json(const ChainAnalysis& a, const ChainSpec& spec) {
  json paths = json::array();
  for (const auto& p : spec.checkpoints) paths.push_back(p.generic_string());
  json ids = json::array();
  json partitions = json::array();
  for (std::size_t c = 0; c < a.traces.size(); ++c) {
    ids.push_back(a.traces[c].info.checkpoint_id);
    partitions.push_back(partition_json(a.partitions[c], a.traces[c].info.checkpoint_id));
  }
  json records = json::array();
  for (const auto& r : a.persistence.records)
    records.push_back({{"family", r.family_id},
                       {"act_sim", r.act_sim},
                       {"conn_sim", r.conn_sim},
                       {"persistence", r.persistence},
                       {"percent_change", r.percent_change}});
  json group_p = json::array();
  for (const auto& g : a.group_persistence) group_p.push_back(opt(g));
  json flows = json::array();
  for (const auto& f : a.flows) flows.push_back(to_json(f));
  return {{"run_id", a.run_id},
          {"layer", a.layer},
          {"checkpoints", ids},
          {"paths", paths},
          {"membership_checkpoint", a.membership_checkpoint},
          {"partitions", partitions},
          {"ordering", to_json(a.orderings[a.membership_checkpoint])},
          {"families", to_json(a.families)},
          {"records", records},
          {"incomplete_families", a.persistence.incomplete},
          {"stats", to_json(a.stats)},
          {"group_persistence", group_p},
          {"alluvial", flows}};
}

}  // namespace

AnalysisReport run_pipeline(const AnalysisConfig& config) {
  config.validate();
  if ((config.export_matrices || config.overlay) && config.output_dir.empty())
    throw Error(ErrorCode::ConfigError, "matrix export and overlays need output_dir");
  if (!config.output_dir.empty()) std::filesystem::create_directories(config.output_dir);

  ChainOptions options;
  options.tau = config.tau;
  options.membership = config.membership;
  options.stabilization_cutoff = config.stabilization_cutoff;

  json chains = json::array();
  json transitions = json::array();
  json errors = json::array();
  json overlays = json::array();
  json exports = json::array();
  std::vector<double> deltas;
  std::vector<SweepChain> sweep_chains;
  // (run, layer) -> |R| of post-cutoff checkpoints plus the first one's ordering
  std::map<std::pair<std::string, int>, std::pair<std::vector<Matrix>, std::optional<NeuronOrdering>>> overlay_input;

  for (const auto& run : config.runs) {
    for (const auto& spec : run.chains) {
      try {
        std::vector<NormalizedTrace> traces;
        for (const auto& path : spec.checkpoints) {
          try {
            traces.push_back(zscore_normalize(read_trace(path), config.dead_std_threshold));
          } catch (const Error& e) {
            throw Error(e.code(), path.generic_string() + ": " + e.what());
          }
          if (traces.back().info.layer != spec.layer)
            throw Error(ErrorCode::InvalidArgument, path.generic_string() + " holds layer " +
                                                        std::to_string(traces.back().info.layer));
        }
        ChainAnalysis a = analyze_chain(traces, options, run.run_id);
        chains.push_back(chain_json(a, spec));

        for (const auto& tr : a.transitions) {
          json t = {{"run_id", run.run_id}, {"layer", a.layer}, {"from", tr.from_checkpoint}, {"included", tr.included}};
          t["delta"] = tr.delta ? to_json(*tr.delta) : json(nullptr);
          if (!tr.error.empty()) t["error"] = tr.error;
          transitions.push_back(t);
          if (tr.included && tr.delta) deltas.push_back(tr.delta->delta);
        }

        if (config.export_matrices) {
          const auto m = a.membership_checkpoint;
          const auto& ord = a.orderings[m];
          const std::string stem = matrix_stem(run.run_id, a.layer, "absR");
          write_matrix(config.output_dir / (stem + ".actv"),
                       permute_symmetric(a.similarities[m].values.cwiseAbs(), ord), a.traces[m].info);
          json e = to_json(ord);
          e["matrix_path"] = stem + ".actv";
          e["checkpoint"] = a.traces[m].info.checkpoint_id;
          std::ofstream(config.output_dir / (stem + ".json")) << e.dump(2) << '\n';
          exports.push_back(e);
        }
        if (config.overlay) {
          auto& slot = overlay_input[{run.run_id, a.layer}];
          for (std::size_t c = 0; c < a.traces.size(); ++c) {
            if (static_cast<long>(a.traces[c].info.cycle) <= config.stabilization_cutoff) continue;
            if (!slot.second) slot.second = a.orderings[c];
            slot.first.push_back(permute_symmetric(a.similarities[c].values.cwiseAbs(), *slot.second));
          }
        }
        if (config.sweep && static_cast<long>(traces.front().info.cycle) > config.stabilization_cutoff)
          sweep_chains.push_back({run.run_id, spec.layer, std::move(traces)});
      } catch (const Error& e) {
        errors.push_back({{"run_id", run.run_id}, {"layer", spec.layer}, {"code", std::string(to_string(e.code()))},
                          {"message", e.what()}});
      }
    }
  }

  for (auto& [key, value] : overlay_input) {
    if (value.first.empty()) continue;
    const Matrix blended = overlay_blend(value.first, *value.second);
    const std::string stem = matrix_stem(key.first, key.second, "overlay");
    TraceInfo info;
    info.checkpoint_id = stem;
    info.run_id = key.first;
    info.layer = static_cast<std::uint16_t>(key.second);
    write_matrix(config.output_dir / (stem + ".actv"), blended, info);
    json o = to_json(*value.second);
    o["matrix_path"] = stem + ".actv";
    o["run_id"] = key.first;
    o["layer"] = key.second;
    o["snapshots"] = value.first.size();
    overlays.push_back(o);
  }

  json summary = nullptr;
  if (deltas.size() >= 2) {
    summary = to_json(summarize_deltas(deltas, config.benchmark));
  } else {
    errors.push_back({{"stage", "summary"},
                      {"code", std::string(to_string(ErrorCode::TooFewSamples))},
                      {"message", std::to_string(deltas.size()) + " included transitions"}});
  }

  json sweep = json::array();
  if (config.sweep) {
    try {
      for (const auto& row : tau_sweep(sweep_chains, config.sweep_grid, config.membership)) sweep.push_back(to_json(row));
    } catch (const Error& e) {
      errors.push_back({{"stage", "sweep"}, {"code", std::string(to_string(e.code()))}, {"message", e.what()}});
    }
  }

  AnalysisReport report;
  report.generated_at = utc_timestamp();
  report.body = {{"schema_version", kReportSchemaVersion},
                 {"tool_version", kToolVersion},
                 {"config", config.to_json()},
                 {"chains", chains},
                 {"transitions", transitions},
                 {"summary", summary},
                 {"sweep", sweep},
                 {"overlays", overlays},
                 {"matrix_exports", exports},
                 {"errors", errors}};
  return report;
}

}  // namespace selfnet
