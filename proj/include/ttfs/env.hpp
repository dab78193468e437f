#pragma once

#include <functional>
#include <string>

#include "ttfs/baseline.hpp"
#include "ttfs/dynamics.hpp"
#include "ttfs/nn.hpp"
#include "ttfs/reference.hpp"
#include "ttfs/types.hpp"

namespace ttfs {

enum class DoneReason { None, Divergence, Goal, Horizon };
const char* to_string(DoneReason r);

/// One MDP sample with normalized observations and action.
struct Transition {
  VecX s;
  VecX a;
  double r = 0.0;
  VecX s_next;
  bool done = false;
  DoneReason reason = DoneReason::None;

  /// Divergence ends the MDP; goal and horizon are time-limit truncations.
  bool terminal() const { return reason == DoneReason::Divergence; }
};

struct NormalizationBounds {
  VecX min;
  VecX max;

  Eigen::Index size() const { return min.size(); }
  void validate() const;
  VecX span() const { return max - min; }
};

/// (x - min) / (max - min), clipped to [0, 1]. Clipped components are added
/// to `clip_count` when given.
VecX normalize(const VecX& raw, const NormalizationBounds& b, long* clip_count = nullptr);

/// min + a (max - min); throws std::invalid_argument outside [0, 1].
VecX denormalize_action(const VecX& a_norm, const NormalizationBounds& b);

struct RewardParams {
  double alpha1 = 1.0;
  double alpha2 = 2.5;
  double alpha3 = 1.0;
  double alpha4 = 7.0;
  double beta1 = 1.0;
  double beta2 = 1.5;
  double beta3 = 100.0;

  void validate() const;
  double tether_floor() const { return -(alpha1 + alpha2); }
  double satellite_floor() const { return -(alpha3 + alpha4 + beta1 + 3.0); }
};

double reward_tether(const Vec6& e_l, const RewardParams& rp);

struct SatelliteReward {
  double tracking = 0.0;
  double energy = 0.0;
  double distance = 0.0;
  double total() const { return tracking + energy + distance; }
};

SatelliteReward reward_satellite(const Vec12& e_sat, const Vec6& u, const SatelliteState& sat,
                                 const TetherState& teth, const RewardParams& rp);

enum class EnvKind { Tether, Satellite, Centralized };
enum class ResetMode { RandomOnTrajectory, FixedPoint };
const char* to_string(EnvKind k);
const char* to_string(ResetMode m);

struct EpisodeConfig {
  double theta1 = 2.0;          // m, tether length error limit
  double theta2 = 5.0;          // m, satellite position error limit
  double reset_fraction = 0.01; // perturbation half-width, fraction of error span
  double dt = 0.1;              // s, control interval
  double goal_tolerance = 1e-3; // normalized error for a goal termination
  ResetMode reset_mode = ResetMode::RandomOnTrajectory;
  bool normalize_observations = true;
  double penalty_discount = 0.99; // discount used to size the divergence penalty

  void validate() const;
};

/// Authority of the learned compensator.
struct LearnedActionBounds {
  double nu_max = 6.0;   // V
  double u_max = 0.02;   // m/s^2
};

struct EnvConfig {
  SystemParams system;
  ReferenceParams reference;
  GainSet gains = GainSet::pd(100.0, 5.0, 0.1, 0.6);
  ActuatorBounds actuators;
  LearnedActionBounds learned;
  RewardParams reward;
  EpisodeConfig episode;
  DisturbanceSpec disturbance;
  IntegratorSettings integrator;
};

/// `done` is set by the caller; this only classifies the state.
/// `error_norm` is the position/length error norm compared against
/// `threshold`; `normalized_error` is max_k |e_k| / span_k.
DoneReason check_termination(double error_norm, double threshold, double normalized_error,
                             double t, double t_final, const EpisodeConfig& cfg);

struct InitialStates {
  double t0 = 0.0;
  TetherState tether;
  SatelliteState satellite;
};

/// Samples a start time uniformly in [0, t_final) (or t = 0 in fixed-point
/// mode) and perturbs the reference there by uniform noise of half-width
/// reset_fraction * (error span) per component.
InitialStates reset(const EpisodeConfig& cfg, const ReferenceParams& rp,
                    const Vec6& tether_error_span, const Vec12& satellite_error_span, Rng& rng);

/// Maps a normalized tether observation to a normalized tether action.
using TetherPolicyFn = std::function<VecX(const VecX&)>;

struct StepInfo {
  ControlInputs applied;       // after saturation of baseline + learned
  ControlInputs baseline;
  ControlInputs learned;
  double tether_reward = 0.0;
  SatelliteReward satellite_reward;
  double penalty = 0.0;        // added on divergence
  long clip_events = 0;
};

/// Tether-level, satellite-level or centralized deployment environment.
class FormationEnv {
 public:
  FormationEnv(EnvKind kind, EnvConfig cfg, TetherPolicyFn frozen_tether = {});

  EnvKind kind() const { return kind_; }
  const EnvConfig& config() const { return cfg_; }
  int obs_dim() const;
  int act_dim() const;

  /// Randomized reset per the episode config; returns the observation.
  VecX reset(Rng& rng);
  VecX reset_to(const InitialStates& init);

  Transition step(const VecX& a_norm);

  /// Baseline, learned and saturated total controls for `a_norm` at the
  /// current state, without advancing time.
  StepInfo compose_controls(const VecX& a_norm) const;

  double time() const { return t_; }
  int steps_taken() const { return steps_; }
  int horizon_steps() const;
  const SatelliteState& satellite() const { return sat_; }
  const TetherState& tether() const { return teth_; }
  const StepInfo& last_info() const { return info_; }

  Vec6 tether_error() const;      // eta_r - eta
  Vec12 satellite_error() const;  // eps_r - eps

  VecX raw_observation() const;
  VecX observation() const;
  const NormalizationBounds& observation_bounds() const { return obs_bounds_; }
  const NormalizationBounds& action_bounds() const { return act_bounds_; }
  /// Normalized action whose raw value is zero.
  VecX zero_action() const;

  /// Tether part of the observation (normalized), as seen by a tether policy.
  VecX tether_observation() const;

  Vec6 tether_error_span() const;
  Vec12 satellite_error_span() const;

  /// Reward recomputed from a state (consistency checks).
  double reward_for_state(const ControlInputs& applied) const;

 private:
  VecX tether_raw() const;
  VecX satellite_raw() const;
  double normalized_error() const;
  double divergence_penalty() const;

  EnvKind kind_;
  EnvConfig cfg_;
  TetherPolicyFn frozen_tether_;
  NormalizationBounds obs_bounds_;
  NormalizationBounds act_bounds_;
  NormalizationBounds tether_obs_bounds_;
  NormalizationBounds tether_act_bounds_;
  NormalizationBounds sat_obs_bounds_;
  double t_ = 0.0;
  int steps_ = 0;
  SatelliteState sat_;
  TetherState teth_;
  StepInfo info_;
  long clip_total_ = 0;
};

NormalizationBounds tether_observation_bounds(const EnvConfig& cfg);
NormalizationBounds satellite_observation_bounds(const EnvConfig& cfg);

}  // namespace ttfs
