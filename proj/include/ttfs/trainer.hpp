#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ttfs/config.hpp"
#include "ttfs/sac.hpp"

namespace ttfs {

enum class Stage { Tether, Satellite };
enum class Framework { Hierarchical, Centralized };
const char* to_string(Stage s);
const char* to_string(Framework f);

struct StagePlan {
  Stage stage = Stage::Tether;
  int episodes = 500;
  /// Hard cap on environment steps; 0 uses SacConfig::total_steps.
  std::int64_t max_steps = 0;
  int window = 50;
  double threshold = 0.02;
  double min_length_fraction = 0.95;
  bool stop_on_convergence = true;
  ResetMode reset_mode = ResetMode::RandomOnTrajectory;
  bool normalize = true;
  Framework framework = Framework::Hierarchical;
  /// Required for a hierarchical satellite stage.
  std::string tether_checkpoint;
  std::string tag = "run";

  /// Throws std::invalid_argument on a malformed plan or a missing
  /// prerequisite checkpoint.
  void validate() const;
  /// Short name used in artifact paths, e.g. "tether" or "centralized".
  std::string stage_name() const;
};

/// Plan for `stage` with budget, window and threshold taken from the config.
StagePlan default_plan(Stage stage, const ExperimentConfig& cfg);

struct EpisodeRecord {
  int episode = 0;
  double reward = 0.0;
  int length = 0;
  /// length / (steps available from the episode's start time to t_final)
  double completion = 0.0;
  DoneReason reason = DoneReason::None;
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  double temperature = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double moving_average = 0.0;
};

/// Convergence rule over an episode history: the mean reward of the last
/// `window` episodes differs from the previous window by less than
/// `threshold` (relative), and the last window's episodes ran on average at
/// least `min_length_fraction` of the steps available to them. Randomized
/// starts shorten the available horizon, so completion rather than raw
/// length is compared.
bool converged(const std::vector<EpisodeRecord>& log, int window, double threshold,
               double min_length_fraction);

struct StageResult {
  SacAgent agent;
  std::vector<EpisodeRecord> log;
  bool converged = false;
  int episodes_to_convergence = -1;
  double final_window_reward = 0.0;
  std::string checkpoint_path;
  std::string log_path;
  /// FNV-1a of the frozen tether actor parameters at stage start and end.
  std::uint64_t frozen_hash_start = 0;
  std::uint64_t frozen_hash_end = 0;
};

/// Runs SAC on the stage's environment until the episode budget, the step
/// cap or (if enabled) convergence. Writes
///   <out>/checkpoints/<stage>-<tag>.ckpt and <out>/logs/<stage>-<tag>.csv.
/// An empty `out_dir` skips all file output.
StageResult train_stage(const StagePlan& plan, const ExperimentConfig& cfg, std::uint64_t seed,
                        const std::string& out_dir);

/// Environment configuration a plan trains against.
EnvConfig stage_env_config(const StagePlan& plan, const ExperimentConfig& cfg);

std::uint64_t parameter_hash(const VecX& params);

struct AblationCell {
  std::string name;
  StagePlan plan;
};

struct AblationRow {
  std::string cell;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  bool converged = false;
  int episodes_to_convergence = -1;
  int episodes_run = 0;
  double final_window_reward = 0.0;
};

struct AblationSummary {
  std::string cell;
  int runs = 0;
  int converged_runs = 0;
  /// Mean over runs; a run that did not converge counts as budget + 1.
  double mean_episodes_to_convergence = 0.0;
  double mean_final_window_reward = 0.0;
  int rank = 0;  // 1 = fastest to converge
  bool flagged_not_converged = false;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;
};

/// The standard cells: {random, fixed} reset x {normalized, raw} for the
/// tether stage, plus a centralized cell when `include_centralized`.
std::vector<AblationCell> default_ablation_cells(const ExperimentConfig& cfg, const std::string& tag,
                                                 bool include_centralized);

/// Runs every cell under every seed (at least two seeds). Cell failures are
/// recorded in the report rather than thrown. Writes
/// <out>/reports/ablation-<tag>.csv and per-cell logs when `out_dir` is set.
AblationReport run_ablation(const std::vector<AblationCell>& cells, const std::vector<std::uint64_t>& seeds,
                            const ExperimentConfig& cfg, const std::string& out_dir, const std::string& tag);

void write_ablation_csv(const AblationReport& report, const std::string& path);

}  // namespace ttfs
