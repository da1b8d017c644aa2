#include "selfnet/curriculum.hpp"

#include <cmath>

#include "selfnet/error.hpp"

namespace selfnet {

void PlateauConfig::validate() const {
  if (min_steps == 0 || max_steps_phase == 0) throw Error(ErrorCode::InvalidArgument, "step limits must be positive");
  if (episode_window < 2) throw Error(ErrorCode::InvalidArgument, "episode_window must be at least 2");
  if (!(min_return > 0.0 && rel_change > 0.0 && std_coeff > 0.0 && epsilon > 0.0))
    throw Error(ErrorCode::InvalidArgument, "plateau thresholds must be positive");
}

std::string to_string(PhaseStatus s) {
  switch (s) {
    case PhaseStatus::Running: return "running";
    case PhaseStatus::Converged: return "converged";
    case PhaseStatus::Capped: return "capped";
    case PhaseStatus::Failed: return "failed";
  }
  return "running";
}

std::string to_string(PlateauDecision d) {
  switch (d) {
    case PlateauDecision::Continue: return "continue";
    case PlateauDecision::Converged: return "converged";
    case PlateauDecision::Capped: return "capped";
  }
  return "continue";
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Walk: return "walk";
    case Phase::Wiggle: return "wiggle";
    case Phase::Bob: return "bob";
  }
  return "walk";
}

PlateauOutcome plateau_step(PhaseState state, std::span<const double> new_returns, std::uint64_t new_steps,
                            const PlateauConfig& cfg) {
  cfg.validate();
  if (state.status != PhaseStatus::Running) {
    const auto d = state.status == PhaseStatus::Converged ? PlateauDecision::Converged : PlateauDecision::Capped;
    return {d, std::move(state)};
  }
  for (double r : new_returns) {
    if (!std::isfinite(r)) throw Error(ErrorCode::NonFiniteValue, "episode return");
    state.returns.push_back(r);
    ++state.episodes_seen;
  }
  state.aggregated_steps += new_steps;

  const std::size_t w = cfg.episode_window;
  const std::uint64_t completed = state.episodes_seen / w;
  const auto open = static_cast<std::size_t>(state.episodes_seen % w);
  const std::size_t keep = 2 * w + open;
  while (state.returns.size() > keep) state.returns.pop_front();

  if (completed >= 2) {
    const std::size_t end = state.returns.size() - open;
    const std::size_t mid = end - w;
    const std::size_t begin = mid - w;
    double prev = 0.0, recent = 0.0;
    for (std::size_t i = begin; i < mid; ++i) prev += state.returns[i];
    for (std::size_t i = mid; i < end; ++i) recent += state.returns[i];
    prev /= static_cast<double>(w);
    recent /= static_cast<double>(w);
    const double both = (prev + recent) / 2.0;
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) ss += (state.returns[i] - both) * (state.returns[i] - both);
    state.mu_prev = prev;
    state.mu_recent = recent;
    state.sigma = std::sqrt(ss / static_cast<double>(2 * w));
  }

  if (state.aggregated_steps >= cfg.min_steps && state.mu_recent) {
    const double diff = std::abs(*state.mu_recent - *state.mu_prev);
    const bool performs = *state.mu_recent >= cfg.min_return;
    const bool stable = diff / (std::abs(*state.mu_prev) + cfg.epsilon) <= cfg.rel_change;
    const bool within_noise = diff <= cfg.std_coeff * *state.sigma;
    if (performs && stable && within_noise) {
      state.status = PhaseStatus::Converged;
      return {PlateauDecision::Converged, std::move(state)};
    }
  }
  if (state.aggregated_steps >= cfg.max_steps_phase) {
    const bool performs = state.mu_recent && *state.mu_recent >= cfg.min_return;
    state.status = performs ? PhaseStatus::Capped : PhaseStatus::Failed;
    return {PlateauDecision::Capped, std::move(state)};
  }
  return {PlateauDecision::Continue, std::move(state)};
}

std::optional<PhaseEvent> phase_event(const PhaseState& state) {
  switch (state.status) {
    case PhaseStatus::Running: return std::nullopt;
    case PhaseStatus::Converged:
    case PhaseStatus::Capped: return PhaseEvent::Converged;
    case PhaseStatus::Failed: return PhaseEvent::FailedBudget;
  }
  return std::nullopt;
}

CurriculumState phase_controller_step(CurriculumState state, PhaseEvent event, const std::string& finished_checkpoint) {
  if (state.aborted) return state;
  if (event == PhaseEvent::Converged) {
    if (!finished_checkpoint.empty()) state.policy_ref = finished_checkpoint;
    state.retries_used = 0;
    state.revert_pending = false;
    ++state.phases_completed;
    switch (state.phase) {
      case Phase::Walk: state.phase = Phase::Wiggle; break;
      case Phase::Wiggle: state.phase = Phase::Bob; break;
      case Phase::Bob:
        state.phase = Phase::Walk;
        ++state.cycle;
        break;
    }
    return state;
  }
  if (state.retries_used >= kMaxRetries) {
    state.aborted = true;
    state.revert_pending = false;
    return state;
  }
  ++state.retries_used;
  ++state.seed_offset;
  state.revert_pending = true;  // policy_ref still names the previous checkpoint
  return state;
}

void RewardCoeffs::validate() const {
  for (double v : {alpha, lambda_back, lambda_v, lambda_jerk_wiggle, k, beta, lambda_drift, lambda_jerk_bob})
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidArgument, "reward coefficients must be finite and >= 0");
}

namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, "action difference");
    s += x * x;
  }
  return s;
}

double planar_speed(Vec2 v) {
  if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw Error(ErrorCode::NonFiniteValue, "planar velocity");
  return std::hypot(v.x, v.y);
}

}  // namespace

double wiggle_reward(int direction, double omega_z, Vec2 v_bxy, std::span<const double> delta_a, long streak,
                     const RewardCoeffs& c) {
  if (direction != 1 && direction != -1) throw Error(ErrorCode::BadDirection, "direction must be +1 or -1");
  if (!std::isfinite(omega_z)) throw Error(ErrorCode::NonFiniteValue, "yaw rate");
  const double spin = direction * omega_z;
  return c.alpha * std::max(spin, 0.0) - c.lambda_back * std::max(-spin, 0.0) - c.lambda_v * planar_speed(v_bxy) -
         c.lambda_jerk_wiggle * squared_norm(delta_a) + c.k * static_cast<double>(streak);
}

double bob_reward(double v_z, Vec2 v_bxy, std::span<const double> delta_a, const RewardCoeffs& c) {
  if (!std::isfinite(v_z)) throw Error(ErrorCode::NonFiniteValue, "vertical velocity");
  return c.beta * std::max(v_z, 0.0) - c.lambda_drift * planar_speed(v_bxy) - c.lambda_jerk_bob * squared_norm(delta_a);
}

long WiggleStreak::update(int direction, double omega_z) {
  if (direction != 1 && direction != -1) throw Error(ErrorCode::BadDirection, "direction must be +1 or -1");
  if (direction * omega_z > 0.0) {
    ++streak_;
    if (cap_ && streak_ > *cap_) streak_ = *cap_;
  } else {
    streak_ = 0;
  }
  return streak_;
}

}  // namespace selfnet
