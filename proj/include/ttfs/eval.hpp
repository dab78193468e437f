#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ttfs/config.hpp"
#include "ttfs/nn.hpp"

namespace ttfs {

/// One sample per control-grid point, t = 0 .. T. Controls are those applied
/// from that point on (the last one is the control the policy would apply).
struct EvalSeries {
  std::vector<double> t;
  std::vector<Vec6> e_l;
  std::vector<Vec12> e_sat;
  std::vector<Vec3> elongation_pct;
  std::vector<Vec6> u;
  std::vector<Vec3> nu;
  std::vector<double> r_tether;
  std::vector<double> r_tracking;
  std::vector<double> r_energy;
  std::vector<double> r_distance;

  std::size_t size() const { return t.size(); }
};

struct EvalReport {
  std::string label;
  std::string config_hash;
  std::uint64_t seed = 0;
  double dt = 0.1;
  double steady_state_fraction = 0.2;
  std::string done_reason = "none";
  EvalSeries series;

  double rms_length = 0.0;
  double rms_rate = 0.0;
  double rms_position = 0.0;
  double rms_velocity = 0.0;
  double ss_length = 0.0;
  double ss_rate = 0.0;
  double ss_position = 0.0;
  double ss_velocity = 0.0;
  double min_elongation = 0.0;  // percent
  double max_elongation = 0.0;  // percent
  double elongation_within_band = 0.0;  // fraction of samples with all |elongation| <= 2.5 %
  double isv_u = 0.0;
  double isv_nu = 0.0;
  double total_reward = 0.0;

  /// Every scalar metric with its name, in a fixed order.
  std::vector<std::pair<std::string, double>> scalars() const;
  /// First index of the steady-state window.
  std::size_t steady_state_begin() const;
};

inline constexpr double kElongationBandPct = 2.5;

/// Policies used by evaluate; unset members fall back to the baseline alone.
struct EvalPolicies {
  std::optional<GaussianPolicy> tether;       // 18 -> 3
  std::optional<GaussianPolicy> satellite;    // 36 -> 6
  std::optional<GaussianPolicy> centralized;  // 54 -> 9
  bool baseline_only() const { return !tether && !satellite && !centralized; }
};

/// Loads checkpoints and sorts them into slots by action dimension.
EvalPolicies load_policies(const std::vector<std::string>& checkpoint_paths);

/// Trapezoid integral of samples `y` on a uniform grid over [begin, end).
double trapezoid(const std::vector<double>& y, double dt, std::size_t begin, std::size_t end);

/// One deterministic full-length episode from t = 0 with the coupled
/// dynamics. The initial state is the reference plus the seeded reset
/// perturbation. Divergence ends the run and is recorded, not thrown.
EvalReport evaluate(const EvalPolicies& policies, const ExperimentConfig& cfg, std::uint64_t seed,
                    const std::string& label);

/// Recomputes the scalar metrics from the series.
void compute_metrics(EvalReport& report);

struct ComparisonRow {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double ratio = 1.0;          // b / a
  double reduction_pct = 0.0;  // (1 - b / a) * 100
  std::string winner;          // "a", "b" or "tie"
};

/// Per-metric comparison of `b` against `a`. Throws std::invalid_argument
/// when the reports were produced under different configurations.
std::vector<ComparisonRow> compare(const EvalReport& a, const EvalReport& b);
void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

/// Time-series CSV, one row per sample.
void write_series_csv(const EvalReport& report, const std::string& path);

void save_report(const EvalReport& report, const std::string& path);
EvalReport load_report(const std::string& path);

enum class PlotKind { TetherError, SatelliteError, Elongation, Thrust };
const char* to_string(PlotKind k);

/// Writes <dir>/<kind>.svg plus <dir>/<kind>.csv for every report set.
/// Returns the SVG paths. Throws on empty input.
std::vector<std::string> emit_plots(const std::vector<EvalReport>& reports, const std::vector<PlotKind>& kinds,
                                    const std::string& dir);

/// Reward curve from one or more training logs; writes training.svg/.csv.
std::string emit_training_plot(const std::vector<std::string>& log_paths, const std::string& dir);

}  // namespace ttfs
