#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttfs/env.hpp"
#include "ttfs/sac.hpp"

namespace ttfs {

/// Training budgets and the convergence rule.
struct TrainSettings {
  int tether_episodes = 500;
  int satellite_episodes = 300;
  int paper_tether_episodes = 3800;
  int paper_satellite_episodes = 1800;
  int window = 50;                  // episodes per moving-average window
  double threshold = 0.02;          // relative change between windows
  double min_length_fraction = 0.95;
  // Learner sizing used unless paper scale is requested.
  std::vector<int> desk_hidden{64, 64};
  double desk_lr = 3e-4;
  int desk_batch_size = 128;
};

struct ExperimentConfig {
  EnvConfig env;
  SacConfig sac;
  TrainSettings train;
  double kp1 = 100.0, kd1 = 5.0, kp2 = 0.1, kd2 = 0.6;
  bool paper_scale = false;

  /// Rebuilds env.gains from the scalar PD gains.
  void apply_gains();
  /// SAC settings with the desk-scale overrides applied unless paper_scale.
  SacConfig effective_sac() const;
  int tether_budget() const { return paper_scale ? train.paper_tether_episodes : train.tether_episodes; }
  int satellite_budget() const {
    return paper_scale ? train.paper_satellite_episodes : train.satellite_episodes;
  }
};

/// Parses an INI-style file with sections [system], [reference], [gains],
/// [bounds], [reward], [sac], [episode], [disturbance], [integrator] and
/// [train]. Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

/// Fully resolved configuration in the same INI format.
std::string to_ini(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the resolved configuration text.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

}  // namespace ttfs
