#pragma once

// Scripted return streams with hand-derived decision traces, shared by the
// unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "selfnet/curriculum.hpp"

namespace selfnet::testing {

struct ScriptBatch {
  std::vector<double> returns;
  std::uint64_t steps = 0;
  PlateauDecision expected = PlateauDecision::Continue;
};

struct PlateauScript {
  std::string name;
  std::vector<ScriptBatch> batches;
  PhaseStatus final_status = PhaseStatus::Running;
};

// window 4, warm-up 100 steps, cap 1000 steps, min return 500
inline PlateauConfig scripted_config() {
  PlateauConfig cfg;
  cfg.min_steps = 100;
  cfg.max_steps_phase = 1000;
  cfg.episode_window = 4;
  cfg.min_return = 500.0;
  cfg.rel_change = 0.05;
  cfg.std_coeff = 1.0;
  cfg.epsilon = 1e-8;
  return cfg;
}

inline std::vector<double> repeat(double v, int n) { return std::vector<double>(static_cast<std::size_t>(n), v); }

inline std::vector<PlateauScript> plateau_scripts() {
  using D = PlateauDecision;
  using S = PhaseStatus;
  std::vector<PlateauScript> s;
  // flat 600s, but the first two windows complete at 80 steps < 100
  s.push_back({"guard-dominated",
               {{repeat(600, 4), 40, D::Continue}, {repeat(600, 4), 40, D::Continue}, {repeat(600, 4), 40, D::Converged}},
               S::Converged});
  s.push_back({"flat-converge", {{repeat(600, 8), 200, D::Converged}}, S::Converged});
  // mu_prev 400, mu_recent 404: 1% change and sigma 8.155 >= 4, fails min_return
  s.push_back({"below-min-return",
               {{{390, 410, 395, 405}, 50, D::Continue}, {{394, 414, 399, 409}, 60, D::Continue}},
               S::Running});
  // 600 -> 620: 3.3% change but |diff| 20 > sigma 10; next window is flat
  s.push_back({"std-safeguard-violating",
               {{repeat(600, 4), 60, D::Continue}, {repeat(620, 4), 60, D::Continue}, {repeat(620, 4), 60, D::Converged}},
               S::Converged});
  // 1000 -> 1150: sigma 396 covers |diff| 150 but 15% > 5%
  s.push_back({"relative-change-violating",
               {{repeat(1000, 4), 60, D::Continue}, {{600, 1700, 600, 1700}, 60, D::Continue}},
               S::Running});
  // alternating 600 / 800 windows never stabilise; cap reached with mu_recent 600
  s.push_back({"cap-hit",
               {{repeat(600, 4), 300, D::Continue},
                {repeat(800, 4), 300, D::Continue},
                {repeat(600, 4), 300, D::Continue},
                {repeat(800, 4), 50, D::Continue},
                {repeat(600, 4), 50, D::Capped}},
               S::Capped});
  s.push_back({"cap-hit-below-min-return",
               {{repeat(100, 4), 500, D::Continue}, {repeat(100, 4), 500, D::Capped}},
               S::Failed});
  // the batch crossing the cap also converges; convergence wins
  s.push_back({"converge-at-cap", {{repeat(700, 4), 900, D::Continue}, {repeat(700, 4), 100, D::Converged}}, S::Converged});
  // six episodes form one complete window only
  s.push_back({"partial-window",
               {{repeat(600, 6), 150, D::Continue}, {repeat(600, 2), 10, D::Converged}},
               S::Converged});
  // tumbling blocks: 100s then 600s, only the aligned pair of 600 blocks converges
  s.push_back({"tumbling-alignment",
               {{repeat(100, 4), 100, D::Continue},
                {repeat(600, 4), 100, D::Continue},
                {repeat(600, 3), 10, D::Continue},
                {repeat(600, 1), 10, D::Converged}},
               S::Converged});
  // a finished attempt ignores further input
  s.push_back({"sticky-after-converged",
               {{repeat(600, 8), 200, D::Converged}, {repeat(10, 8), 200, D::Converged}},
               S::Converged});
  return s;
}

}  // namespace selfnet::testing
