#include "ttfs/env.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ttfs {

const char* to_string(DoneReason r) {
  switch (r) {
    case DoneReason::None: return "none";
    case DoneReason::Divergence: return "divergence";
    case DoneReason::Goal: return "goal";
    case DoneReason::Horizon: return "horizon";
  }
  return "?";
}

const char* to_string(EnvKind k) {
  switch (k) {
    case EnvKind::Tether: return "tether";
    case EnvKind::Satellite: return "satellite";
    case EnvKind::Centralized: return "centralized";
  }
  return "?";
}

const char* to_string(ResetMode m) {
  return m == ResetMode::FixedPoint ? "fixed-point" : "random";
}

void NormalizationBounds::validate() const {
  if (min.size() != max.size() || min.size() == 0) {
    throw std::invalid_argument("NormalizationBounds: size mismatch");
  }
  if (!((max - min).array() > 0.0).all()) {
    throw std::invalid_argument("NormalizationBounds: max must exceed min");
  }
}

VecX normalize(const VecX& raw, const NormalizationBounds& b, long* clip_count) {
  if (raw.size() != b.size()) throw std::invalid_argument("normalize: size mismatch");
  VecX out = (raw - b.min).cwiseQuotient(b.max - b.min);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < 0.0 || out(i) > 1.0) {
      if (clip_count) ++*clip_count;
      out(i) = std::clamp(out(i), 0.0, 1.0);
    }
  }
  return out;
}

VecX denormalize_action(const VecX& a_norm, const NormalizationBounds& b) {
  if (a_norm.size() != b.size()) throw std::invalid_argument("denormalize_action: size mismatch");
  if (!a_norm.allFinite() || (a_norm.array() < 0.0).any() || (a_norm.array() > 1.0).any()) {
    throw std::invalid_argument("denormalize_action: action outside [0, 1]");
  }
  return b.min + a_norm.cwiseProduct(b.max - b.min);
}

void RewardParams::validate() const {
  for (double w : {alpha1, alpha2, alpha3, alpha4, beta1, beta2, beta3}) {
    if (!(w > 0.0)) throw std::invalid_argument("RewardParams: weights must be positive");
  }
}

double reward_tether(const Vec6& e_l, const RewardParams& rp) {
  const double len = e_l.head<3>().norm();
  const double rate = e_l.tail<3>().norm();
  return rp.alpha1 * (1.0 / (1.0 + len) - 1.0) + rp.alpha2 * std::tanh(-rate);
}

SatelliteReward reward_satellite(const Vec12& e_sat, const Vec6& u, const SatelliteState& sat,
                                 const TetherState& teth, const RewardParams& rp) {
  SatelliteReward r;
  r.tracking = rp.alpha3 * (1.0 / (1.0 + e_sat.head<6>().norm()) - 1.0) +
               rp.alpha4 * std::tanh(-e_sat.tail<6>().norm());
  r.energy = rp.beta1 * (1.0 / (1.0 + rp.beta2 * u.norm()) - 1.0);
  double dist = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double sep =
        (sat.position(kTetherPairs[k][0]) - sat.position(kTetherPairs[k][1])).norm();
    if (sep < kCoincidenceThreshold) throw CoincidentSatellitesError("reward_satellite: coincident satellites");
    const double ratio = teth.length(k) / sep - 1.0;
    dist += 1.0 / (1.0 + rp.beta3 * ratio * ratio);
  }
  r.distance = dist - 3.0;
  return r;
}

void EpisodeConfig::validate() const {
  if (!(theta1 > 0.0) || !(theta2 > 0.0)) throw std::invalid_argument("EpisodeConfig: thresholds must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("EpisodeConfig: dt must be positive");
  if (!(reset_fraction >= 0.0)) throw std::invalid_argument("EpisodeConfig: reset_fraction must be >= 0");
  if (!(penalty_discount >= 0.0 && penalty_discount <= 1.0)) {
    throw std::invalid_argument("EpisodeConfig: penalty_discount must be in [0, 1]");
  }
}

DoneReason check_termination(double error_norm, double threshold, double normalized_error,
                             double t, double t_final, const EpisodeConfig& cfg) {
  if (!std::isfinite(error_norm) || error_norm > threshold) return DoneReason::Divergence;
  if (t >= t_final - 1e-9 * cfg.dt) {
    return normalized_error < cfg.goal_tolerance ? DoneReason::Goal : DoneReason::Horizon;
  }
  return DoneReason::None;
}

InitialStates reset(const EpisodeConfig& cfg, const ReferenceParams& rp,
                    const Vec6& tether_error_span, const Vec12& satellite_error_span, Rng& rng) {
  InitialStates init;
  if (cfg.reset_mode == ResetMode::RandomOnTrajectory) {
    // Start on the control grid so that episodes end exactly at t_final.
    const long slots = std::max(1L, std::lround(rp.t_final / cfg.dt));
    std::uniform_real_distribution<double> when(0.0, static_cast<double>(slots));
    init.t0 = std::floor(when(rng)) * cfg.dt;
  }
  init.tether = desired_tether_state(init.t0, rp);
  init.satellite = desired_satellite(init.t0, rp);
  if (cfg.reset_mode == ResetMode::RandomOnTrajectory && cfg.reset_fraction > 0.0) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vec6 eta = init.tether.stacked();
    for (int i = 0; i < 6; ++i) eta(i) += cfg.reset_fraction * tether_error_span(i) * unit(rng);
    Vec12 eps = init.satellite.stacked();
    for (int i = 0; i < 12; ++i) eps(i) += cfg.reset_fraction * satellite_error_span(i) * unit(rng);
    init.tether = TetherState::from_stacked(eta);
    init.satellite = SatelliteState::from_stacked(eps);
  }
  return init;
}

namespace {

double speed_bound(const EnvConfig& cfg) {
  const double reel_max = cfg.system.D_r * cfg.actuators.nu_max / cfg.system.k_e;
  return 1.2 * std::max(reel_max, cfg.reference.a);
}

void put3(VecX& v, Eigen::Index at, double value) { v.segment(at, 3).setConstant(value); }
void put6(VecX& v, Eigen::Index at, double value) { v.segment(at, 6).setConstant(value); }

}  // namespace

NormalizationBounds tether_observation_bounds(const EnvConfig& cfg) {
  const ReferenceParams& rp = cfg.reference;
  const double th = cfg.episode.theta1;
  const double vb = speed_bound(cfg);
  NormalizationBounds b{VecX(18), VecX(18)};
  for (int block = 0; block < 2; ++block) {  // reference, actual
    put3(b.min, 6 * block, rp.l0 - th);
    put3(b.max, 6 * block, rp.final_length() + th);
    put3(b.min, 6 * block + 3, -vb);
    put3(b.max, 6 * block + 3, vb);
  }
  put3(b.min, 12, -th);
  put3(b.max, 12, th);
  put3(b.min, 15, -vb);
  put3(b.max, 15, vb);
  return b;
}

NormalizationBounds satellite_observation_bounds(const EnvConfig& cfg) {
  const ReferenceParams& rp = cfg.reference;
  const double th = cfg.episode.theta2;
  const double rmax = rp.final_length() / std::numbers::sqrt3 + th;
  const double vmax = (rp.a + rp.final_length() * std::abs(rp.spin_rate)) / std::numbers::sqrt3 + 1.0;
  NormalizationBounds b{VecX(36), VecX(36)};
  for (int block = 0; block < 2; ++block) {
    put6(b.min, 12 * block, -rmax);
    put6(b.max, 12 * block, rmax);
    put6(b.min, 12 * block + 6, -vmax);
    put6(b.max, 12 * block + 6, vmax);
  }
  put6(b.min, 24, -th);
  put6(b.max, 24, th);
  put6(b.min, 30, -1.0);
  put6(b.max, 30, 1.0);
  return b;
}

FormationEnv::FormationEnv(EnvKind kind, EnvConfig cfg, TetherPolicyFn frozen_tether)
    : kind_(kind), cfg_(std::move(cfg)), frozen_tether_(std::move(frozen_tether)) {
  cfg_.system.validate();
  cfg_.reference.validate();
  cfg_.reward.validate();
  cfg_.episode.validate();
  tether_obs_bounds_ = tether_observation_bounds(cfg_);
  sat_obs_bounds_ = satellite_observation_bounds(cfg_);
  tether_act_bounds_ = {VecX::Constant(3, -cfg_.learned.nu_max), VecX::Constant(3, cfg_.learned.nu_max)};
  const NormalizationBounds sat_act{VecX::Constant(6, -cfg_.learned.u_max), VecX::Constant(6, cfg_.learned.u_max)};
  switch (kind_) {
    case EnvKind::Tether:
      obs_bounds_ = tether_obs_bounds_;
      act_bounds_ = tether_act_bounds_;
      break;
    case EnvKind::Satellite:
      obs_bounds_ = sat_obs_bounds_;
      act_bounds_ = sat_act;
      break;
    case EnvKind::Centralized:
      obs_bounds_ = {VecX(54), VecX(54)};
      obs_bounds_.min << tether_obs_bounds_.min, sat_obs_bounds_.min;
      obs_bounds_.max << tether_obs_bounds_.max, sat_obs_bounds_.max;
      act_bounds_ = {VecX(9), VecX(9)};
      act_bounds_.min << tether_act_bounds_.min, sat_act.min;
      act_bounds_.max << tether_act_bounds_.max, sat_act.max;
      break;
  }
  obs_bounds_.validate();
  act_bounds_.validate();
  reset_to(InitialStates{0.0, desired_tether_state(0.0, cfg_.reference),
                         desired_satellite(0.0, cfg_.reference)});
}

int FormationEnv::obs_dim() const { return static_cast<int>(obs_bounds_.size()); }
int FormationEnv::act_dim() const { return static_cast<int>(act_bounds_.size()); }

int FormationEnv::horizon_steps() const {
  return static_cast<int>(std::lround(cfg_.reference.t_final / cfg_.episode.dt));
}

Vec6 FormationEnv::tether_error_span() const {
  return tether_obs_bounds_.span().segment(12, 6);
}

Vec12 FormationEnv::satellite_error_span() const {
  return sat_obs_bounds_.span().segment(24, 12);
}

VecX FormationEnv::reset(Rng& rng) {
  return reset_to(ttfs::reset(cfg_.episode, cfg_.reference, tether_error_span(),
                              satellite_error_span(), rng));
}

VecX FormationEnv::reset_to(const InitialStates& init) {
  t_ = init.t0;
  steps_ = 0;
  teth_ = init.tether;
  sat_ = init.satellite;
  info_ = StepInfo{};
  return observation();
}

Vec6 FormationEnv::tether_error() const {
  return desired_tether_state(t_, cfg_.reference).stacked() - teth_.stacked();
}

Vec12 FormationEnv::satellite_error() const {
  return desired_satellite(t_, cfg_.reference).stacked() - sat_.stacked();
}

VecX FormationEnv::tether_raw() const {
  VecX raw(18);
  raw << desired_tether_state(t_, cfg_.reference).stacked(), teth_.stacked(), tether_error();
  return raw;
}

VecX FormationEnv::satellite_raw() const {
  VecX raw(36);
  raw << desired_satellite(t_, cfg_.reference).stacked(), sat_.stacked(), satellite_error();
  return raw;
}

VecX FormationEnv::raw_observation() const {
  switch (kind_) {
    case EnvKind::Tether: return tether_raw();
    case EnvKind::Satellite: return satellite_raw();
    case EnvKind::Centralized: {
      VecX raw(54);
      raw << tether_raw(), satellite_raw();
      return raw;
    }
  }
  return {};
}

VecX FormationEnv::observation() const {
  const VecX raw = raw_observation();
  if (!cfg_.episode.normalize_observations) return raw;
  return normalize(raw, obs_bounds_);
}

VecX FormationEnv::tether_observation() const {
  const VecX raw = tether_raw();
  if (!cfg_.episode.normalize_observations) return raw;
  return normalize(raw, tether_obs_bounds_);
}

VecX FormationEnv::zero_action() const {
  return (-act_bounds_.min).cwiseQuotient(act_bounds_.span());
}

double FormationEnv::normalized_error() const {
  double worst = 0.0;
  if (kind_ != EnvKind::Satellite) {
    worst = std::max(worst, tether_error().cwiseAbs().cwiseQuotient(tether_error_span()).maxCoeff());
  }
  if (kind_ != EnvKind::Tether) {
    worst = std::max(worst, satellite_error().cwiseAbs().cwiseQuotient(satellite_error_span()).maxCoeff());
  }
  return worst;
}

double FormationEnv::divergence_penalty() const {
  double floor = 0.0;
  if (kind_ != EnvKind::Satellite) floor += cfg_.reward.tether_floor();
  if (kind_ != EnvKind::Tether) floor += cfg_.reward.satellite_floor();
  const long remaining = std::max(0L, std::lround((cfg_.reference.t_final - t_) / cfg_.episode.dt));
  const double g = cfg_.episode.penalty_discount;
  const double discounted =
      (g >= 1.0) ? static_cast<double>(remaining) : (1.0 - std::pow(g, static_cast<double>(remaining))) / (1.0 - g);
  return floor * discounted;
}

double FormationEnv::reward_for_state(const ControlInputs& applied) const {
  double r = 0.0;
  if (kind_ != EnvKind::Satellite) r += reward_tether(tether_error(), cfg_.reward);
  if (kind_ != EnvKind::Tether) {
    r += reward_satellite(satellite_error(), applied.u, sat_, teth_, cfg_.reward).total();
  }
  return r;
}

StepInfo FormationEnv::compose_controls(const VecX& a_norm) const {
  if (a_norm.size() != act_dim()) throw std::invalid_argument("FormationEnv: action size mismatch");
  const VecX learned_raw = denormalize_action(a_norm, act_bounds_);
  StepInfo info;
  const Vec6 eta_dev = -tether_error();
  info.baseline.nu = tether_baseline(eta_dev, cfg_.gains, cfg_.actuators.nu_max);
  switch (kind_) {
    case EnvKind::Tether:
      info.learned.nu = learned_raw;
      break;
    case EnvKind::Satellite:
      if (frozen_tether_) {
        info.learned.nu = denormalize_action(frozen_tether_(tether_observation()), tether_act_bounds_);
      }
      info.learned.u = learned_raw;
      break;
    case EnvKind::Centralized:
      info.learned.nu = learned_raw.head(3);
      info.learned.u = learned_raw.tail(6);
      break;
  }
  info.applied.nu = clamp_symmetric(info.baseline.nu + info.learned.nu, cfg_.actuators.nu_max);
  if (kind_ != EnvKind::Tether) {
    info.baseline.u = satellite_baseline(-satellite_error(), cfg_.gains, cfg_.actuators.u_max);
    info.applied.u = clamp_symmetric(info.baseline.u + info.learned.u, cfg_.actuators.u_max);
  }
  return info;
}

Transition FormationEnv::step(const VecX& a_norm) {
  if (a_norm.size() != act_dim()) throw std::invalid_argument("FormationEnv::step: action size mismatch");
  Transition tr;
  tr.s = observation();
  tr.a = a_norm;
  StepInfo info = compose_controls(a_norm);

  bool blew_up = false;
  try {
    if (kind_ == EnvKind::Tether) {
      teth_ = step_reels(teth_, info.applied.nu, cfg_.disturbance, cfg_.episode.dt, cfg_.system,
                         cfg_.integrator);
      t_ += cfg_.episode.dt;
      sat_ = desired_satellite(t_, cfg_.reference);
    } else {
      auto [sat, teth] = ttfs::step(sat_, teth_, info.applied, cfg_.disturbance, t_, cfg_.episode.dt,
                                    cfg_.system, cfg_.integrator);
      sat_ = sat;
      teth_ = teth;
      t_ += cfg_.episode.dt;
    }
  } catch (const NonFiniteStateError&) {
    blew_up = true;
  } catch (const CoincidentSatellitesError&) {
    blew_up = true;
  }
  ++steps_;
  // Snap to the control grid so horizon detection is exact.
  t_ = std::round(t_ / cfg_.episode.dt) * cfg_.episode.dt;

  if (blew_up) {
    info.penalty = divergence_penalty() + (kind_ == EnvKind::Tether ? cfg_.reward.tether_floor()
                                                                     : cfg_.reward.satellite_floor());
    tr.r = info.penalty;
    tr.done = true;
    tr.reason = DoneReason::Divergence;
    tr.s_next = tr.s;
    info_ = info;
    return tr;
  }

  if (kind_ != EnvKind::Satellite) info.tether_reward = reward_tether(tether_error(), cfg_.reward);
  if (kind_ != EnvKind::Tether) {
    info.satellite_reward = reward_satellite(satellite_error(), info.applied.u, sat_, teth_, cfg_.reward);
  }
  tr.r = info.tether_reward + info.satellite_reward.total();

  DoneReason reason = DoneReason::None;
  const double nerr = normalized_error();
  const double t_final = cfg_.reference.t_final;
  if (kind_ != EnvKind::Satellite) {
    reason = check_termination(tether_error().head<3>().norm(), cfg_.episode.theta1, nerr, t_, t_final, cfg_.episode);
  }
  if (kind_ != EnvKind::Tether && reason != DoneReason::Divergence) {
    const DoneReason rs =
        check_termination(satellite_error().head<6>().norm(), cfg_.episode.theta2, nerr, t_, t_final, cfg_.episode);
    if (rs == DoneReason::Divergence || reason == DoneReason::None) reason = rs;
  }
  if (reason == DoneReason::Divergence) {
    info.penalty = divergence_penalty();
    tr.r += info.penalty;
  }
  tr.reason = reason;
  tr.done = reason != DoneReason::None;
  long clips = 0;
  tr.s_next = cfg_.episode.normalize_observations ? normalize(raw_observation(), obs_bounds_, &clips)
                                                  : raw_observation();
  clip_total_ += clips;
  info.clip_events = clips;
  info_ = info;
  return tr;
}

}  // namespace ttfs
