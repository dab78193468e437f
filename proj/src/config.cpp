#include "ttfs/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ttfs {

namespace pt = boost::property_tree;

void ExperimentConfig::apply_gains() { env.gains = GainSet::pd(kp1, kd1, kp2, kd2); }

SacConfig ExperimentConfig::effective_sac() const {
  SacConfig s = sac;
  if (!paper_scale) {
    s.hidden = train.desk_hidden;
    s.lr = train.desk_lr;
    s.batch_size = train.desk_batch_size;
  }
  return s;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stoi(item));
  }
  if (out.empty()) throw std::invalid_argument("config: empty integer list");
  return out;
}

const char* to_string(DisturbanceMode m) {
  switch (m) {
    case DisturbanceMode::None: return "none";
    case DisturbanceMode::Paper: return "paper";
    case DisturbanceMode::CustomTable: return "custom-table";
  }
  return "?";
}

/// Binds every key of the config to a string getter/setter pair so that
/// parsing, unknown-key detection and serialization share one table.
struct Binding {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename Member>
Binding dbl(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](const ExperimentConfig& c) { return fmt(member(const_cast<ExperimentConfig&>(c))); },
          [member](ExperimentConfig& c, const std::string& v) { member(c) = std::stod(v); }};
}

template <typename Member>
Binding integer(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](const ExperimentConfig& c) {
            return std::to_string(member(const_cast<ExperimentConfig&>(c)));
          },
          [member](ExperimentConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(member(c))>;
            member(c) = static_cast<T>(std::stoll(v));
          }};
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "'");
}

const std::vector<Binding>& bindings() {
  using C = ExperimentConfig;
  static const std::vector<Binding> table = {
      dbl("system", "mass", [](C& c) -> double& { return c.env.system.mass; }),
      dbl("system", "R", [](C& c) -> double& { return c.env.system.R; }),
      dbl("system", "mu", [](C& c) -> double& { return c.env.system.mu; }),
      dbl("system", "n", [](C& c) -> double& { return c.env.system.n; }),
      dbl("system", "E", [](C& c) -> double& { return c.env.system.E; }),
      dbl("system", "A", [](C& c) -> double& { return c.env.system.A; }),
      dbl("system", "D_r", [](C& c) -> double& { return c.env.system.D_r; }),
      dbl("system", "R_a", [](C& c) -> double& { return c.env.system.R_a; }),
      dbl("system", "k_e", [](C& c) -> double& { return c.env.system.k_e; }),
      dbl("system", "k_m", [](C& c) -> double& { return c.env.system.k_m; }),
      dbl("system", "J", [](C& c) -> double& { return c.env.system.J; }),
      dbl("reference", "a", [](C& c) -> double& { return c.env.reference.a; }),
      dbl("reference", "l0", [](C& c) -> double& { return c.env.reference.l0; }),
      dbl("reference", "spin_rate", [](C& c) -> double& { return c.env.reference.spin_rate; }),
      dbl("reference", "t_final", [](C& c) -> double& { return c.env.reference.t_final; }),
      dbl("gains", "kp1", [](C& c) -> double& { return c.kp1; }),
      dbl("gains", "kd1", [](C& c) -> double& { return c.kd1; }),
      dbl("gains", "kp2", [](C& c) -> double& { return c.kp2; }),
      dbl("gains", "kd2", [](C& c) -> double& { return c.kd2; }),
      dbl("bounds", "nu_max", [](C& c) -> double& { return c.env.actuators.nu_max; }),
      dbl("bounds", "u_max", [](C& c) -> double& { return c.env.actuators.u_max; }),
      dbl("bounds", "nu_learned_max", [](C& c) -> double& { return c.env.learned.nu_max; }),
      dbl("bounds", "u_learned_max", [](C& c) -> double& { return c.env.learned.u_max; }),
      dbl("reward", "alpha1", [](C& c) -> double& { return c.env.reward.alpha1; }),
      dbl("reward", "alpha2", [](C& c) -> double& { return c.env.reward.alpha2; }),
      dbl("reward", "alpha3", [](C& c) -> double& { return c.env.reward.alpha3; }),
      dbl("reward", "alpha4", [](C& c) -> double& { return c.env.reward.alpha4; }),
      dbl("reward", "beta1", [](C& c) -> double& { return c.env.reward.beta1; }),
      dbl("reward", "beta2", [](C& c) -> double& { return c.env.reward.beta2; }),
      dbl("reward", "beta3", [](C& c) -> double& { return c.env.reward.beta3; }),
      dbl("sac", "gamma", [](C& c) -> double& { return c.sac.gamma; }),
      dbl("sac", "lr", [](C& c) -> double& { return c.sac.lr; }),
      integer("sac", "batch_size", [](C& c) -> int& { return c.sac.batch_size; }),
      integer("sac", "total_steps", [](C& c) -> std::int64_t& { return c.sac.total_steps; }),
      dbl("sac", "tau", [](C& c) -> double& { return c.sac.tau; }),
      dbl("sac", "target_entropy", [](C& c) -> double& { return c.sac.target_entropy; }),
      dbl("sac", "initial_temperature", [](C& c) -> double& { return c.sac.initial_temperature; }),
      integer("sac", "updates_per_step", [](C& c) -> int& { return c.sac.updates_per_step; }),
      integer("sac", "warmup_steps", [](C& c) -> std::int64_t& { return c.sac.warmup_steps; }),
      dbl("sac", "grad_clip", [](C& c) -> double& { return c.sac.grad_clip; }),
      {"sac", "hidden", [](const C& c) { return join(c.sac.hidden); },
       [](C& c, const std::string& v) { c.sac.hidden = split_ints(v); }},
      integer("sac", "buffer_capacity", [](C& c) -> std::size_t& { return c.sac.buffer_capacity; }),
      dbl("episode", "theta1", [](C& c) -> double& { return c.env.episode.theta1; }),
      dbl("episode", "theta2", [](C& c) -> double& { return c.env.episode.theta2; }),
      dbl("episode", "reset_fraction", [](C& c) -> double& { return c.env.episode.reset_fraction; }),
      dbl("episode", "dt", [](C& c) -> double& { return c.env.episode.dt; }),
      dbl("episode", "goal_tolerance", [](C& c) -> double& { return c.env.episode.goal_tolerance; }),
      dbl("episode", "penalty_discount", [](C& c) -> double& { return c.env.episode.penalty_discount; }),
      {"episode", "reset_mode", [](const C& c) { return std::string(to_string(c.env.episode.reset_mode)); },
       [](C& c, const std::string& v) {
         if (v == "random") c.env.episode.reset_mode = ResetMode::RandomOnTrajectory;
         else if (v == "fixed-point") c.env.episode.reset_mode = ResetMode::FixedPoint;
         else throw std::invalid_argument("config: reset_mode must be random or fixed-point");
       }},
      {"episode", "normalize", [](const C& c) { return std::string(c.env.episode.normalize_observations ? "true" : "false"); },
       [](C& c, const std::string& v) { c.env.episode.normalize_observations = parse_bool(v); }},
      {"disturbance", "mode", [](const C& c) { return std::string(to_string(c.env.disturbance.mode)); },
       [](C& c, const std::string& v) {
         if (v == "none") c.env.disturbance.mode = DisturbanceMode::None;
         else if (v == "paper") c.env.disturbance.mode = DisturbanceMode::Paper;
         else if (v == "custom-table") c.env.disturbance.mode = DisturbanceMode::CustomTable;
         else throw std::invalid_argument("config: disturbance mode must be none, paper or custom-table");
       }},
      dbl("disturbance", "scale", [](C& c) -> double& { return c.env.disturbance.scale; }),
      {"disturbance", "reel_amplitude",
       [](const C& c) {
         const auto& v = c.env.disturbance.reel_amplitude;
         return fmt(v(0)) + "," + fmt(v(1)) + "," + fmt(v(2));
       },
       [](C& c, const std::string& v) {
         std::stringstream ss(v);
         std::string item;
         for (int i = 0; i < 3; ++i) {
           if (!std::getline(ss, item, ',')) throw std::invalid_argument("config: reel_amplitude needs 3 values");
           c.env.disturbance.reel_amplitude(i) = std::stod(item);
         }
       }},
      {"disturbance", "satellite_amplitude",
       [](const C& c) {
         std::string s;
         for (int i = 0; i < 6; ++i) s += (i ? "," : "") + fmt(c.env.disturbance.satellite_amplitude(i));
         return s;
       },
       [](C& c, const std::string& v) {
         std::stringstream ss(v);
         std::string item;
         for (int i = 0; i < 6; ++i) {
           if (!std::getline(ss, item, ',')) throw std::invalid_argument("config: satellite_amplitude needs 6 values");
           c.env.disturbance.satellite_amplitude(i) = std::stod(item);
         }
       }},
      dbl("integrator", "satellite_dt", [](C& c) -> double& { return c.env.integrator.satellite_dt; }),
      dbl("integrator", "reel_dt", [](C& c) -> double& { return c.env.integrator.reel_dt; }),
      integer("train", "tether_episodes", [](C& c) -> int& { return c.train.tether_episodes; }),
      integer("train", "satellite_episodes", [](C& c) -> int& { return c.train.satellite_episodes; }),
      integer("train", "paper_tether_episodes", [](C& c) -> int& { return c.train.paper_tether_episodes; }),
      integer("train", "paper_satellite_episodes", [](C& c) -> int& { return c.train.paper_satellite_episodes; }),
      integer("train", "window", [](C& c) -> int& { return c.train.window; }),
      dbl("train", "threshold", [](C& c) -> double& { return c.train.threshold; }),
      dbl("train", "min_length_fraction", [](C& c) -> double& { return c.train.min_length_fraction; }),
      {"train", "desk_hidden", [](const C& c) { return join(c.train.desk_hidden); },
       [](C& c, const std::string& v) { c.train.desk_hidden = split_ints(v); }},
      dbl("train", "desk_lr", [](C& c) -> double& { return c.train.desk_lr; }),
      integer("train", "desk_batch_size", [](C& c) -> int& { return c.train.desk_batch_size; }),
      {"train", "paper_scale", [](const C& c) { return std::string(c.paper_scale ? "true" : "false"); },
       [](C& c, const std::string& v) { c.paper_scale = parse_bool(v); }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  std::map<std::string, const Binding*> index;
  for (const auto& b : bindings()) index[b.section + "." + b.key] = &b;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw std::invalid_argument("config: key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      const auto it = index.find(section + "." + key);
      if (it == index.end()) throw std::invalid_argument("config: unknown key [" + section + "] " + key);
      try {
        it->second->set(cfg, value.data());
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("config: bad value for [" + section + "] " + key + ": " + e.what());
      } catch (const std::out_of_range&) {
        throw std::invalid_argument("config: value out of range for [" + section + "] " + key);
      }
    }
  }
  cfg.apply_gains();
  cfg.env.system.validate();
  cfg.env.reference.validate();
  cfg.env.reward.validate();
  cfg.env.episode.validate();
  cfg.sac.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::string current;
  for (const auto& b : bindings()) {
    if (b.section != current) {
      if (!current.empty()) os << "\n";
      os << "[" << b.section << "]\n";
      current = b.section;
    }
    os << b.key << " = " << b.get(cfg) << "\n";
  }
  return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_ini(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

}  // namespace ttfs
