#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace selfnet {

struct PlateauConfig {
  std::uint64_t min_steps = 250'000'000;         // warm-up guard, aggregated env-steps
  std::uint64_t max_steps_phase = 1'500'000'000;  // hard cap
  std::size_t episode_window = 50'000;           // episodes per window
  double min_return = 500.0;
  double rel_change = 0.05;
  double std_coeff = 1.0;
  double epsilon = 1e-8;

  void validate() const;
};

enum class PhaseStatus { Running, Converged, Capped, Failed };
enum class PlateauDecision { Continue, Converged, Capped };

std::string to_string(PhaseStatus s);
std::string to_string(PlateauDecision d);

// Rolling state of one phase attempt. Windows are tumbling: episode k falls
// in block k / episode_window, and the two most recent completed blocks are
// compared.
struct PhaseState {
  std::string phase;
  std::uint64_t aggregated_steps = 0;
  std::uint64_t episodes_seen = 0;
  std::deque<double> returns;  // last two completed blocks plus the open one
  int retries_used = 0;
  PhaseStatus status = PhaseStatus::Running;

  // filled whenever two completed windows exist
  std::optional<double> mu_prev;
  std::optional<double> mu_recent;
  std::optional<double> sigma;
};

struct PlateauOutcome {
  PlateauDecision decision = PlateauDecision::Continue;
  PhaseState state;
};

// Appends returns and steps, then checks: convergence first, then the cap.
// A capped phase whose recent mean misses min_return is marked Failed.
PlateauOutcome plateau_step(PhaseState state, std::span<const double> new_returns, std::uint64_t new_steps,
                            const PlateauConfig& cfg);

enum class Phase { Walk, Wiggle, Bob };
std::string to_string(Phase p);

inline constexpr int kMaxRetries = 2;

struct CurriculumState {
  Phase phase = Phase::Walk;
  int cycle = 0;
  int retries_used = 0;
  std::uint64_t seed_offset = 0;
  // checkpoint the next phase starts from; "" means fresh initialisation
  std::string policy_ref;
  bool revert_pending = false;
  bool aborted = false;
  int phases_completed = 0;
};

enum class PhaseEvent { Converged, FailedBudget };

// converged: advance walk -> wiggle -> bob -> walk (cycle + 1) and carry the
// finished checkpoint forward. failed_budget: revert and retry with a new
// seed offset; the third failure of one phase aborts the run.
CurriculumState phase_controller_step(CurriculumState state, PhaseEvent event,
                                      const std::string& finished_checkpoint = {});

// Maps a finished phase attempt to the controller event.
std::optional<PhaseEvent> phase_event(const PhaseState& state);

struct RewardCoeffs {
  // wiggle
  double alpha = 0.0;
  double lambda_back = 0.0;
  double lambda_v = 0.0;
  double lambda_jerk_wiggle = 0.0;
  double k = 0.0;
  // bob
  double beta = 0.0;
  double lambda_drift = 0.0;
  double lambda_jerk_bob = 0.0;

  void validate() const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double wiggle_reward(int direction, double omega_z, Vec2 v_bxy, std::span<const double> delta_a, long streak,
                     const RewardCoeffs& c);
double bob_reward(double v_z, Vec2 v_bxy, std::span<const double> delta_a, const RewardCoeffs& c);

// Consecutive steps with s * omega_z > 0; optional cap on the count.
class WiggleStreak {
 public:
  explicit WiggleStreak(std::optional<long> cap = std::nullopt) : cap_(cap) {}

  long update(int direction, double omega_z);
  long value() const { return streak_; }
  void reset() { streak_ = 0; }

 private:
  std::optional<long> cap_;
  long streak_ = 0;
};

}  // namespace selfnet
