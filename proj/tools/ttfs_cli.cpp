// Command-line front end: simulation, training stages, evaluation and gain checks.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "ttfs/baseline.hpp"
#include "ttfs/config.hpp"
#include "ttfs/eval.hpp"
#include "ttfs/trainer.hpp"

namespace fs = std::filesystem;
using namespace ttfs;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::vector<std::string> checkpoints;
  bool paper_scale = false;
  std::string tag = "run";
};

void add_common(CLI::App* app, Common& c, bool with_checkpoint) {
  app->add_option("--config", c.config, "Experiment config file (INI)");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--tag", c.tag, "Name fragment for artifacts");
  app->add_flag("--paper-scale", c.paper_scale, "Use the full-scale training budgets and network sizes");
  if (with_checkpoint) app->add_option("--checkpoint", c.checkpoints, "Policy checkpoint(s)");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? parse_config("") : load_config(c.config);
  if (c.paper_scale) cfg.paper_scale = true;
  return cfg;
}

const std::vector<PlotKind> kAllPlots{PlotKind::TetherError, PlotKind::SatelliteError, PlotKind::Elongation,
                                      PlotKind::Thrust};

void print_report(const EvalReport& r) {
  std::cout << "report " << r.label << " (seed " << r.seed << ", config " << r.config_hash
            << ", done: " << r.done_reason << ", steady state = final "
            << std::lround(r.steady_state_fraction * 100) << "% of the episode)\n";
  for (const auto& [k, v] : r.scalars()) std::cout << "  " << std::left << std::setw(24) << k << v << "\n";
}

void write_report_artifacts(const EvalReport& r, const std::string& out) {
  const fs::path dir = fs::path(out) / "reports";
  fs::create_directories(dir);
  save_report(r, (dir / (r.label + ".json")).string());
  write_series_csv(r, (dir / (r.label + ".csv")).string());
  emit_plots({r}, kAllPlots, (fs::path(out) / "plots" / r.label).string());
}

void print_comparison(const std::vector<ComparisonRow>& rows) {
  std::cout << std::left << std::setw(24) << "metric" << std::setw(16) << "a" << std::setw(16) << "b"
            << std::setw(14) << "ratio" << std::setw(14) << "reduction%"
            << "winner\n";
  for (const auto& r : rows) {
    std::cout << std::setw(24) << r.metric << std::setw(16) << r.a << std::setw(16) << r.b << std::setw(14)
              << r.ratio << std::setw(14) << r.reduction_pct << r.winner << "\n";
  }
}

void print_stage(const StageResult& res) {
  std::cout << "episodes: " << res.log.size() << ", env steps: " << res.agent.env_steps
            << ", updates: " << res.agent.updates << "\n"
            << "final window reward: " << res.final_window_reward << "\n"
            << (res.converged ? "converged after " + std::to_string(res.episodes_to_convergence) + " episodes"
                              : std::string("budget exhausted without convergence"))
            << "\n";
  if (!res.checkpoint_path.empty()) std::cout << "checkpoint: " << res.checkpoint_path << "\n";
  if (!res.log_path.empty()) std::cout << "log: " << res.log_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tethered formation deployment: baseline control, SAC compensation and evaluation"};
  app.require_subcommand(1);

  Common sim_c, tt_c, ts_c, ab_c, ev_c, cmp_c, cert_c;

  auto* sim = app.add_subcommand("simulate", "Baseline-only closed-loop run");
  add_common(sim, sim_c, false);

  int tether_episodes = 0;
  auto* tt = app.add_subcommand("train-tether", "Train the tether-level compensator");
  add_common(tt, tt_c, false);
  tt->add_option("--episodes", tether_episodes, "Override the episode budget");
  bool tether_full = false;
  tt->add_flag("--full-budget", tether_full, "Run the whole budget even after convergence");

  int sat_episodes = 0;
  bool centralized = false;
  auto* ts = app.add_subcommand("train-sat", "Train the satellite-level compensator around a frozen tether policy");
  add_common(ts, ts_c, true);
  ts->add_option("--episodes", sat_episodes, "Override the episode budget");
  ts->add_flag("--centralized", centralized, "Train one agent on the concatenated problem instead");
  bool sat_full = false;
  ts->add_flag("--full-budget", sat_full, "Run the whole budget even after convergence");

  std::vector<std::uint64_t> ablation_seeds{1, 2};
  int ablation_episodes = 0;
  bool ablation_centralized = false;
  auto* ab = app.add_subcommand("train-ablation", "Reset-mode / normalization / framework ablation");
  add_common(ab, ab_c, false);
  ab->add_option("--seeds", ablation_seeds, "Seeds per cell (at least two)");
  ab->add_option("--episodes", ablation_episodes, "Override the per-run episode budget");
  ab->add_flag("--with-centralized", ablation_centralized, "Add a centralized-training cell");

  bool with_baseline = false;
  auto* ev = app.add_subcommand("evaluate", "Deterministic evaluation of checkpoints (none = baseline only)");
  add_common(ev, ev_c, true);
  ev->add_flag("--compare-baseline", with_baseline, "Also run the baseline and write a comparison");

  std::string report_a, report_b;
  auto* cmp = app.add_subcommand("compare", "Compare two saved evaluation reports");
  add_common(cmp, cmp_c, false);
  cmp->add_option("report_a", report_a, "Reference report (JSON)")->required();
  cmp->add_option("report_b", report_b, "Candidate report (JSON)")->required();

  double l_min = 1.0;
  auto* cert = app.add_subcommand("certify-gains", "Lyapunov certificates for the configured gains");
  add_common(cert, cert_c, false);
  cert->add_option("--l-min", l_min, "Smallest tether length used in the coupling bound (m)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const ExperimentConfig cfg = load(sim_c);
      const EvalReport r = evaluate(EvalPolicies{}, cfg, sim_c.seed, "baseline-" + sim_c.tag);
      write_report_artifacts(r, sim_c.out);
      print_report(r);
    } else if (*tt) {
      const ExperimentConfig cfg = load(tt_c);
      StagePlan plan = default_plan(Stage::Tether, cfg);
      if (tether_episodes > 0) plan.episodes = tether_episodes;
      if (tether_full) plan.stop_on_convergence = false;
      plan.tag = tt_c.tag;
      const StageResult res = train_stage(plan, cfg, tt_c.seed, tt_c.out);
      print_stage(res);
      emit_training_plot({res.log_path}, (fs::path(tt_c.out) / "plots" / ("tether-" + tt_c.tag)).string());
    } else if (*ts) {
      const ExperimentConfig cfg = load(ts_c);
      StagePlan plan = default_plan(Stage::Satellite, cfg);
      if (sat_episodes > 0) plan.episodes = sat_episodes;
      if (sat_full) plan.stop_on_convergence = false;
      plan.tag = ts_c.tag;
      if (centralized) {
        plan.framework = Framework::Centralized;
      } else {
        if (ts_c.checkpoints.size() != 1) {
          std::cerr << "train-sat: pass the tether policy with --checkpoint (or use --centralized)\n";
          return 2;
        }
        plan.tether_checkpoint = ts_c.checkpoints.front();
      }
      const StageResult res = train_stage(plan, cfg, ts_c.seed, ts_c.out);
      print_stage(res);
      if (plan.framework == Framework::Hierarchical) {
        std::cout << "frozen tether policy unchanged: "
                  << (res.frozen_hash_start == res.frozen_hash_end ? "yes" : "NO") << "\n";
      }
      emit_training_plot({res.log_path},
                         (fs::path(ts_c.out) / "plots" / (plan.stage_name() + "-" + ts_c.tag)).string());
    } else if (*ab) {
      const ExperimentConfig cfg = load(ab_c);
      auto cells = default_ablation_cells(cfg, ab_c.tag, ablation_centralized);
      if (ablation_episodes > 0) {
        for (auto& c : cells) c.plan.episodes = ablation_episodes;
      }
      const AblationReport rep = run_ablation(cells, ablation_seeds, cfg, ab_c.out, ab_c.tag);
      std::cout << std::left << std::setw(28) << "cell" << std::setw(8) << "runs" << std::setw(11) << "converged"
                << std::setw(14) << "mean episodes" << std::setw(8) << "rank"
                << "status\n";
      for (const auto& s : rep.summary) {
        std::cout << std::setw(28) << s.cell << std::setw(8) << s.runs << std::setw(11) << s.converged_runs
                  << std::setw(14) << s.mean_episodes_to_convergence << std::setw(8) << s.rank
                  << (s.flagged_not_converged ? "did not converge" : "converged") << "\n";
      }
      for (const auto& r : rep.rows) {
        if (!r.ok) std::cout << "failed: " << r.cell << " seed " << r.seed << ": " << r.error << "\n";
      }
    } else if (*ev) {
      const ExperimentConfig cfg = load(ev_c);
      const EvalPolicies policies = load_policies(ev_c.checkpoints);
      const std::string label = (policies.baseline_only() ? "baseline-" : "compensated-") + ev_c.tag;
      const EvalReport r = evaluate(policies, cfg, ev_c.seed, label);
      write_report_artifacts(r, ev_c.out);
      print_report(r);
      if (with_baseline && !policies.baseline_only()) {
        const EvalReport b = evaluate(EvalPolicies{}, cfg, ev_c.seed, "baseline-" + ev_c.tag);
        write_report_artifacts(b, ev_c.out);
        emit_plots({b, r}, kAllPlots, (fs::path(ev_c.out) / "plots" / ("comparison-" + ev_c.tag)).string());
        const auto rows = compare(b, r);
        write_comparison_csv(rows, (fs::path(ev_c.out) / "reports" / ("compare-" + ev_c.tag + ".csv")).string());
        print_comparison(rows);
      }
    } else if (*cmp) {
      const EvalReport a = load_report(report_a);
      const EvalReport b = load_report(report_b);
      const auto rows = compare(a, b);
      fs::create_directories(fs::path(cmp_c.out) / "reports");
      write_comparison_csv(rows, (fs::path(cmp_c.out) / "reports" / ("compare-" + cmp_c.tag + ".csv")).string());
      print_comparison(rows);
    } else if (*cert) {
      const ExperimentConfig cfg = load(cert_c);
      const GainCertificates c = certify_gains(cfg.env.gains, cfg.env.system, l_min);
      std::cout << format_certificates(c) << "\n";
      return c.all_valid() ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
