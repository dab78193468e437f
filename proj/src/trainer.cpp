#include "ttfs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ttfs {

namespace fs = std::filesystem;

const char* to_string(Stage s) { return s == Stage::Tether ? "tether" : "satellite"; }
const char* to_string(Framework f) { return f == Framework::Hierarchical ? "hierarchical" : "centralized"; }

void StagePlan::validate() const {
  if (episodes <= 0) throw std::invalid_argument("StagePlan: episodes must be positive");
  if (max_steps < 0) throw std::invalid_argument("StagePlan: max_steps must be >= 0");
  if (window <= 0) throw std::invalid_argument("StagePlan: window must be positive");
  if (!(threshold > 0.0)) throw std::invalid_argument("StagePlan: threshold must be positive");
  if (tag.empty() || tag.find('/') != std::string::npos) {
    throw std::invalid_argument("StagePlan: tag must be a non-empty file-name fragment");
  }
  if (stage == Stage::Satellite && framework == Framework::Hierarchical) {
    if (tether_checkpoint.empty()) {
      throw std::invalid_argument("StagePlan: hierarchical satellite stage needs a tether checkpoint");
    }
    if (!fs::exists(tether_checkpoint)) {
      throw std::invalid_argument("StagePlan: tether checkpoint not found: " + tether_checkpoint);
    }
  }
}

std::string StagePlan::stage_name() const {
  if (stage == Stage::Tether) return "tether";
  return framework == Framework::Centralized ? "centralized" : "satellite";
}

StagePlan default_plan(Stage stage, const ExperimentConfig& cfg) {
  StagePlan plan;
  plan.stage = stage;
  plan.episodes = stage == Stage::Tether ? cfg.tether_budget() : cfg.satellite_budget();
  plan.window = cfg.train.window;
  plan.threshold = cfg.train.threshold;
  plan.min_length_fraction = cfg.train.min_length_fraction;
  plan.reset_mode = cfg.env.episode.reset_mode;
  plan.normalize = cfg.env.episode.normalize_observations;
  return plan;
}

EnvConfig stage_env_config(const StagePlan& plan, const ExperimentConfig& cfg) {
  EnvConfig env = cfg.env;
  env.episode.reset_mode = plan.reset_mode;
  env.episode.normalize_observations = plan.normalize;
  return env;
}

std::uint64_t parameter_hash(const VecX& params) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(params.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

double mean_reward(const std::vector<EpisodeRecord>& log, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += log[i].reward;
  return s / static_cast<double>(end - begin);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_log_preamble(std::ostream& os, const StagePlan& plan, const ExperimentConfig& cfg,
                        const SacConfig& sac, std::uint64_t seed) {
  os << "# stage = " << plan.stage_name() << "\n"
     << "# framework = " << to_string(plan.framework) << "\n"
     << "# reset_mode = " << to_string(plan.reset_mode) << "\n"
     << "# normalize = " << (plan.normalize ? "true" : "false") << "\n"
     << "# episodes = " << plan.episodes << "\n"
     << "# seed = " << seed << "\n"
     << "# effective_hidden =";
  for (int h : sac.hidden) os << " " << h;
  os << "\n# effective_lr = " << fmt(sac.lr) << "\n"
     << "# effective_batch_size = " << sac.batch_size << "\n";
  if (plan.framework == Framework::Centralized && plan.stage == Stage::Satellite) {
    os << "# action_split = nu:0-2 u:3-8\n"
       << "# observation_split = tether:0-17 satellite:18-53\n";
  }
  os << "# config_hash = " << config_hash_hex(cfg) << "\n";
  std::istringstream ini(to_ini(cfg));
  std::string line;
  while (std::getline(ini, line)) {
    if (!line.empty()) os << "# " << line << "\n";
  }
  os << "episode,reward,length,completion,done_reason,env_steps,updates,temperature,critic_loss,actor_loss,"
        "moving_average\n";
}

void write_log_row(std::ostream& os, const EpisodeRecord& r) {
  os << r.episode << "," << fmt(r.reward) << "," << r.length << "," << fmt(r.completion) << "," << to_string(r.reason) << ","
     << r.env_steps << "," << r.updates << "," << fmt(r.temperature) << "," << fmt(r.critic_loss) << ","
     << fmt(r.actor_loss) << "," << fmt(r.moving_average) << "\n";
  os.flush();
}

}  // namespace

bool converged(const std::vector<EpisodeRecord>& log, int window, double threshold,
               double min_length_fraction) {
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t n = log.size();
  if (n < 2 * w) return false;
  const double prev = mean_reward(log, n - 2 * w, n - w);
  const double last = mean_reward(log, n - w, n);
  const double scale = std::max(std::abs(prev), 1e-12);
  if (std::abs(last - prev) / scale >= threshold) return false;
  double completion = 0.0;
  for (std::size_t i = n - w; i < n; ++i) completion += log[i].completion;
  return completion / static_cast<double>(w) >= min_length_fraction;
}

StageResult train_stage(const StagePlan& plan, const ExperimentConfig& cfg, std::uint64_t seed,
                        const std::string& out_dir) {
  plan.validate();
  const SacConfig sac = cfg.effective_sac();
  sac.validate();
  const EnvConfig env_cfg = stage_env_config(plan, cfg);

  EnvKind kind = EnvKind::Tether;
  std::shared_ptr<const GaussianPolicy> frozen;
  TetherPolicyFn frozen_fn;
  if (plan.stage == Stage::Satellite) {
    if (plan.framework == Framework::Centralized) {
      kind = EnvKind::Centralized;
    } else {
      kind = EnvKind::Satellite;
      SacAgent tether = SacAgent::load_file(plan.tether_checkpoint);
      if (tether.act_dim() != 3 || tether.obs_dim() != 18) {
        throw std::invalid_argument("train_stage: checkpoint is not a tether policy");
      }
      frozen = std::make_shared<const GaussianPolicy>(tether.actor);
      frozen_fn = [frozen](const VecX& obs) { return frozen->act_deterministic(obs); };
    }
  }

  FormationEnv env(kind, env_cfg, frozen_fn);
  StageResult result;
  result.agent = SacAgent(env.obs_dim(), env.act_dim(), sac, seed);
  ReplayBuffer buffer(env.obs_dim(), env.act_dim(), sac.buffer_capacity);
  if (frozen) result.frozen_hash_start = parameter_hash(frozen->net().params());

  std::ofstream log_os;
  if (!out_dir.empty()) {
    fs::create_directories(fs::path(out_dir) / "logs");
    fs::create_directories(fs::path(out_dir) / "checkpoints");
    result.log_path = (fs::path(out_dir) / "logs" / (plan.stage_name() + "-" + plan.tag + ".csv")).string();
    result.checkpoint_path =
        (fs::path(out_dir) / "checkpoints" / (plan.stage_name() + "-" + plan.tag + ".ckpt")).string();
    log_os.open(result.log_path, std::ios::trunc);
    if (!log_os) throw std::runtime_error("cannot write " + result.log_path);
    write_log_preamble(log_os, plan, cfg, sac, seed);
  }

  const std::int64_t step_cap = plan.max_steps > 0 ? plan.max_steps : sac.total_steps;
  EpisodeState episode;
  UpdateStats last_update;
  while (static_cast<int>(result.log.size()) < plan.episodes && result.agent.env_steps < step_cap) {
    const StepDiagnostics diag = train_step(result.agent, env, buffer, sac, episode);
    if (diag.updated) last_update = diag.update;
    if (!diag.episode_finished) continue;

    EpisodeRecord rec;
    rec.episode = static_cast<int>(result.log.size()) + 1;
    rec.reward = diag.episode_reward;
    rec.length = diag.episode_length;
    rec.reason = diag.reason;
    const long remaining = std::max(0L, std::lround((env_cfg.reference.t_final - env.time()) / env_cfg.episode.dt));
    rec.completion = static_cast<double>(rec.length) / static_cast<double>(rec.length + remaining);
    rec.env_steps = result.agent.env_steps;
    rec.updates = result.agent.updates;
    rec.temperature = result.agent.temperature();
    rec.critic_loss = 0.5 * (last_update.critic.q1 + last_update.critic.q2);
    rec.actor_loss = last_update.actor_loss;
    result.log.push_back(rec);
    const std::size_t w = std::min<std::size_t>(plan.window, result.log.size());
    result.log.back().moving_average = mean_reward(result.log, result.log.size() - w, result.log.size());
    if (log_os.is_open()) write_log_row(log_os, result.log.back());

    if (!result.converged &&
        converged(result.log, plan.window, plan.threshold, plan.min_length_fraction)) {
      result.converged = true;
      result.episodes_to_convergence = rec.episode;
      if (plan.stop_on_convergence) break;
    }
  }

  if (!result.log.empty()) {
    const std::size_t w = std::min<std::size_t>(plan.window, result.log.size());
    result.final_window_reward = mean_reward(result.log, result.log.size() - w, result.log.size());
  }
  if (frozen) result.frozen_hash_end = parameter_hash(frozen->net().params());
  if (!result.checkpoint_path.empty()) result.agent.save_file(result.checkpoint_path);
  return result;
}

std::vector<AblationCell> default_ablation_cells(const ExperimentConfig& cfg, const std::string& tag,
                                                 bool include_centralized) {
  std::vector<AblationCell> cells;
  for (ResetMode mode : {ResetMode::RandomOnTrajectory, ResetMode::FixedPoint}) {
    for (bool norm : {true, false}) {
      StagePlan plan = default_plan(Stage::Tether, cfg);
      plan.reset_mode = mode;
      plan.normalize = norm;
      plan.tag = tag;
      cells.push_back({std::string(to_string(mode)) + (norm ? "-normalized" : "-raw"), plan});
    }
  }
  if (include_centralized) {
    StagePlan plan = default_plan(Stage::Satellite, cfg);
    plan.framework = Framework::Centralized;
    plan.tag = tag;
    cells.push_back({"centralized-normalized", plan});
  }
  return cells;
}

AblationReport run_ablation(const std::vector<AblationCell>& cells, const std::vector<std::uint64_t>& seeds,
                            const ExperimentConfig& cfg, const std::string& out_dir, const std::string& tag) {
  if (cells.empty()) throw std::invalid_argument("run_ablation: no cells");
  if (seeds.size() < 2) throw std::invalid_argument("run_ablation: need at least two seeds per cell");
  AblationReport report;
  for (const auto& cell : cells) {
    AblationSummary sum;
    sum.cell = cell.name;
    double etc_total = 0.0, reward_total = 0.0;
    for (std::uint64_t seed : seeds) {
      AblationRow row;
      row.cell = cell.name;
      row.seed = seed;
      try {
        StagePlan plan = cell.plan;
        plan.tag = tag + "-" + cell.name + "-s" + std::to_string(seed);
        const StageResult res = train_stage(plan, cfg, seed, out_dir);
        row.converged = res.converged;
        row.episodes_to_convergence = res.episodes_to_convergence;
        row.episodes_run = static_cast<int>(res.log.size());
        row.final_window_reward = res.final_window_reward;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      ++sum.runs;
      if (row.ok && row.converged) ++sum.converged_runs;
      etc_total += row.converged ? row.episodes_to_convergence : cell.plan.episodes + 1;
      reward_total += row.final_window_reward;
      report.rows.push_back(row);
    }
    sum.mean_episodes_to_convergence = etc_total / sum.runs;
    sum.mean_final_window_reward = reward_total / sum.runs;
    sum.flagged_not_converged = 2 * sum.converged_runs < sum.runs;
    report.summary.push_back(sum);
  }
  std::vector<std::size_t> order(report.summary.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.summary[a].mean_episodes_to_convergence < report.summary[b].mean_episodes_to_convergence;
  });
  for (std::size_t r = 0; r < order.size(); ++r) report.summary[order[r]].rank = static_cast<int>(r) + 1;

  if (!out_dir.empty()) {
    fs::create_directories(fs::path(out_dir) / "reports");
    write_ablation_csv(report, (fs::path(out_dir) / "reports" / ("ablation-" + tag + ".csv")).string());
  }
  return report;
}

void write_ablation_csv(const AblationReport& report, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "cell,seed,status,converged,episodes_to_convergence,episodes_run,final_window_reward,error\n";
  for (const auto& r : report.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    os << r.cell << "," << r.seed << "," << (r.ok ? "ok" : "failed") << "," << (r.converged ? 1 : 0) << ","
       << r.episodes_to_convergence << "," << r.episodes_run << "," << fmt(r.final_window_reward) << "," << err
       << "\n";
  }
  const std::string summary_path =
      path.size() > 4 && path.substr(path.size() - 4) == ".csv" ? path.substr(0, path.size() - 4) + "-summary.csv"
                                                                : path + ".summary";
  std::ofstream ss(summary_path);
  if (!ss) throw std::runtime_error("cannot write " + summary_path);
  ss << "cell,runs,converged_runs,mean_episodes_to_convergence,mean_final_window_reward,rank,status\n";
  for (const auto& s : report.summary) {
    ss << s.cell << "," << s.runs << "," << s.converged_runs << "," << fmt(s.mean_episodes_to_convergence) << ","
       << fmt(s.mean_final_window_reward) << "," << s.rank << ","
       << (s.flagged_not_converged ? "did not converge" : "converged") << "\n";
  }
}

}  // namespace ttfs
