#include "ttfs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ttfs/sac.hpp"

namespace ttfs {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t EvalReport::steady_state_begin() const {
  const std::size_t n = series.size();
  if (n == 0) return 0;
  const auto begin = static_cast<std::size_t>(std::floor((1.0 - steady_state_fraction) * static_cast<double>(n)));
  return std::min(begin, n - 1);
}

std::vector<std::pair<std::string, double>> EvalReport::scalars() const {
  return {{"rms_length", rms_length},
          {"rms_rate", rms_rate},
          {"rms_position", rms_position},
          {"rms_velocity", rms_velocity},
          {"ss_length", ss_length},
          {"ss_rate", ss_rate},
          {"ss_position", ss_position},
          {"ss_velocity", ss_velocity},
          {"min_elongation_pct", min_elongation},
          {"max_elongation_pct", max_elongation},
          {"elongation_within_band", elongation_within_band},
          {"isv_u", isv_u},
          {"isv_nu", isv_nu},
          {"total_reward", total_reward}};
}

EvalPolicies load_policies(const std::vector<std::string>& checkpoint_paths) {
  EvalPolicies p;
  for (const auto& path : checkpoint_paths) {
    SacAgent agent = SacAgent::load_file(path);
    std::optional<GaussianPolicy>* slot = nullptr;
    int obs = 0;
    switch (agent.act_dim()) {
      case 3: slot = &p.tether; obs = 18; break;
      case 6: slot = &p.satellite; obs = 36; break;
      case 9: slot = &p.centralized; obs = 54; break;
      default: throw std::invalid_argument("load_policies: unexpected action size in " + path);
    }
    if (agent.obs_dim() != obs) throw std::invalid_argument("load_policies: unexpected observation size in " + path);
    if (slot->has_value()) throw std::invalid_argument("load_policies: two checkpoints for the same role: " + path);
    *slot = agent.actor;
  }
  if (p.centralized && (p.tether || p.satellite)) {
    throw std::invalid_argument("load_policies: a centralized policy cannot be combined with stage policies");
  }
  return p;
}

double trapezoid(const std::vector<double>& y, double dt, std::size_t begin, std::size_t end) {
  if (end > y.size() || begin > end) throw std::out_of_range("trapezoid: bad range");
  if (end - begin < 2) return 0.0;
  double s = 0.0;
  for (std::size_t k = begin; k + 1 < end; ++k) s += 0.5 * (y[k] + y[k + 1]);
  return s * dt;
}

namespace {

void record(EvalSeries& s, const FormationEnv& env, const StepInfo& info, double r_tether,
            const SatelliteReward& r_sat) {
  s.t.push_back(env.time());
  s.e_l.push_back(env.tether_error());
  s.e_sat.push_back(env.satellite_error());
  s.elongation_pct.push_back(100.0 * elongation(env.satellite(), env.tether()));
  s.u.push_back(info.applied.u);
  s.nu.push_back(info.applied.nu);
  s.r_tether.push_back(r_tether);
  s.r_tracking.push_back(r_sat.tracking);
  s.r_energy.push_back(r_sat.energy);
  s.r_distance.push_back(r_sat.distance);
}

double rms(const std::vector<double>& sq, std::size_t begin, std::size_t end) {
  if (end <= begin) return 0.0;
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) s += sq[k];
  return std::sqrt(s / static_cast<double>(end - begin));
}

}  // namespace

void compute_metrics(EvalReport& rep) {
  const EvalSeries& s = rep.series;
  const std::size_t n = s.size();
  if (n == 0) throw std::invalid_argument("compute_metrics: empty report");
  std::vector<double> len(n), rate(n), pos(n), vel(n), uu(n), nn(n);
  rep.min_elongation = std::numeric_limits<double>::infinity();
  rep.max_elongation = -std::numeric_limits<double>::infinity();
  std::size_t within = 0;
  for (std::size_t k = 0; k < n; ++k) {
    len[k] = s.e_l[k].head<3>().squaredNorm();
    rate[k] = s.e_l[k].tail<3>().squaredNorm();
    pos[k] = s.e_sat[k].head<6>().squaredNorm();
    vel[k] = s.e_sat[k].tail<6>().squaredNorm();
    uu[k] = s.u[k].squaredNorm();
    nn[k] = s.nu[k].squaredNorm();
    rep.min_elongation = std::min(rep.min_elongation, s.elongation_pct[k].minCoeff());
    rep.max_elongation = std::max(rep.max_elongation, s.elongation_pct[k].maxCoeff());
    if (s.elongation_pct[k].cwiseAbs().maxCoeff() <= kElongationBandPct) ++within;
  }
  const std::size_t ss = rep.steady_state_begin();
  rep.rms_length = rms(len, 0, n);
  rep.rms_rate = rms(rate, 0, n);
  rep.rms_position = rms(pos, 0, n);
  rep.rms_velocity = rms(vel, 0, n);
  rep.ss_length = rms(len, ss, n);
  rep.ss_rate = rms(rate, ss, n);
  rep.ss_position = rms(pos, ss, n);
  rep.ss_velocity = rms(vel, ss, n);
  rep.elongation_within_band = static_cast<double>(within) / static_cast<double>(n);
  rep.isv_u = trapezoid(uu, rep.dt, 0, n);
  rep.isv_nu = trapezoid(nn, rep.dt, 0, n);
}

EvalReport evaluate(const EvalPolicies& policies, const ExperimentConfig& cfg, std::uint64_t seed,
                    const std::string& label) {
  EnvConfig env_cfg = cfg.env;
  env_cfg.gains = GainSet::pd(cfg.kp1, cfg.kd1, cfg.kp2, cfg.kd2);

  const bool centralized = policies.centralized.has_value();
  TetherPolicyFn frozen;
  if (policies.tether) {
    const GaussianPolicy tether = *policies.tether;
    frozen = [tether](const VecX& obs) { return tether.act_deterministic(obs); };
  }
  FormationEnv env(centralized ? EnvKind::Centralized : EnvKind::Satellite, env_cfg, frozen);

  // Seeded perturbation of the t = 0 reference, sized like a training reset.
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double frac = env_cfg.episode.reset_fraction;
  Vec6 eta = desired_tether_state(0.0, env_cfg.reference).stacked();
  const Vec6 tspan = env.tether_error_span();
  for (int i = 0; i < 6; ++i) eta(i) += frac * tspan(i) * unit(rng);
  Vec12 eps = desired_satellite(0.0, env_cfg.reference).stacked();
  const Vec12 sspan = env.satellite_error_span();
  for (int i = 0; i < 12; ++i) eps(i) += frac * sspan(i) * unit(rng);
  const InitialStates init{0.0, TetherState::from_stacked(eta), SatelliteState::from_stacked(eps)};
  env.reset_to(init);

  auto choose_action = [&](const VecX& obs) -> VecX {
    if (centralized) return policies.centralized->act_deterministic(obs);
    if (policies.satellite) return policies.satellite->act_deterministic(obs);
    return env.zero_action();
  };

  EvalReport rep;
  rep.label = label;
  rep.config_hash = config_hash_hex(cfg);
  rep.seed = seed;
  rep.dt = env_cfg.episode.dt;

  VecX a = choose_action(env.observation());
  record(rep.series, env, env.compose_controls(a), 0.0, SatelliteReward{});
  DoneReason reason = DoneReason::None;
  while (true) {
    const Transition tr = env.step(a);
    rep.total_reward += tr.r;
    a = choose_action(env.observation());
    const StepInfo& info = env.last_info();
    record(rep.series, env, env.compose_controls(a), info.tether_reward, info.satellite_reward);
    if (tr.done) {
      reason = tr.reason;
      break;
    }
  }
  rep.done_reason = to_string(reason);
  compute_metrics(rep);
  return rep;
}

namespace {

enum class Better { Lower, Higher, CloserToZero };

Better direction(const std::string& metric) {
  if (metric == "elongation_within_band" || metric == "total_reward") return Better::Higher;
  if (metric == "min_elongation_pct" || metric == "max_elongation_pct") return Better::CloserToZero;
  return Better::Lower;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<ComparisonRow> compare(const EvalReport& a, const EvalReport& b) {
  if (a.config_hash != b.config_hash) {
    throw std::invalid_argument("compare: reports come from different configurations (" + a.config_hash + " vs " +
                                b.config_hash + ")");
  }
  const auto sa = a.scalars();
  const auto sb = b.scalars();
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    ComparisonRow row;
    row.metric = sa[i].first;
    row.a = sa[i].second;
    row.b = sb[i].second;
    if (row.a == row.b) {
      row.ratio = 1.0;
    } else if (row.a == 0.0) {
      row.ratio = std::copysign(std::numeric_limits<double>::infinity(), row.b);
    } else {
      row.ratio = row.b / row.a;
    }
    row.reduction_pct = (1.0 - row.ratio) * 100.0;
    double ka = row.a, kb = row.b;
    switch (direction(row.metric)) {
      case Better::Lower: break;
      case Better::Higher: ka = -ka; kb = -kb; break;
      case Better::CloserToZero: ka = std::abs(ka); kb = std::abs(kb); break;
    }
    row.winner = ka < kb ? "a" : (kb < ka ? "b" : "tie");
    rows.push_back(row);
  }
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "metric,a,b,ratio,reduction_pct,winner\n";
  for (const auto& r : rows) {
    os << r.metric << "," << fmt(r.a) << "," << fmt(r.b) << "," << fmt(r.ratio) << "," << fmt(r.reduction_pct)
       << "," << r.winner << "\n";
  }
}

void write_series_csv(const EvalReport& rep, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "t";
  for (int i = 1; i <= 3; ++i) os << ",e_len" << i;
  for (int i = 1; i <= 3; ++i) os << ",e_rate" << i;
  for (int i = 1; i <= 3; ++i) os << ",e_x" << i << ",e_y" << i;
  for (int i = 1; i <= 3; ++i) os << ",e_vx" << i << ",e_vy" << i;
  for (int i = 1; i <= 3; ++i) os << ",elongation_pct" << i;
  for (int i = 1; i <= 3; ++i) os << ",u_x" << i << ",u_y" << i;
  for (int i = 1; i <= 3; ++i) os << ",nu" << i;
  os << ",u_norm,r_tether,r_tracking,r_energy,r_distance\n";
  const EvalSeries& s = rep.series;
  for (std::size_t k = 0; k < s.size(); ++k) {
    os << fmt(s.t[k]);
    for (int i = 0; i < 6; ++i) os << "," << fmt(s.e_l[k](i));
    for (int i = 0; i < 12; ++i) os << "," << fmt(s.e_sat[k](i));
    for (int i = 0; i < 3; ++i) os << "," << fmt(s.elongation_pct[k](i));
    for (int i = 0; i < 6; ++i) os << "," << fmt(s.u[k](i));
    for (int i = 0; i < 3; ++i) os << "," << fmt(s.nu[k](i));
    os << "," << fmt(s.u[k].norm()) << "," << fmt(s.r_tether[k]) << "," << fmt(s.r_tracking[k]) << ","
       << fmt(s.r_energy[k]) << "," << fmt(s.r_distance[k]) << "\n";
  }
}

namespace {

template <typename V>
json vec_rows(const std::vector<V>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  return out;
}

template <typename V>
std::vector<V> rows_vec(const json& j) {
  std::vector<V> out;
  for (const auto& row : j) {
    const auto v = row.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != V::SizeAtCompileTime) throw std::invalid_argument("report: bad row size");
    out.push_back(Eigen::Map<const V>(v.data()));
  }
  return out;
}

}  // namespace

void save_report(const EvalReport& rep, const std::string& path) {
  json j;
  j["label"] = rep.label;
  j["config_hash"] = rep.config_hash;
  j["seed"] = rep.seed;
  j["dt"] = rep.dt;
  j["steady_state_window"] = "final " + std::to_string(static_cast<int>(std::lround(rep.steady_state_fraction * 100))) +
                             "% of the episode";
  j["steady_state_fraction"] = rep.steady_state_fraction;
  j["done_reason"] = rep.done_reason;
  json sc = json::object();
  for (const auto& [k, v] : rep.scalars()) sc[k] = v;
  j["scalars"] = sc;
  const EvalSeries& s = rep.series;
  j["series"] = {{"t", s.t},
                 {"e_l", vec_rows(s.e_l)},
                 {"e_sat", vec_rows(s.e_sat)},
                 {"elongation_pct", vec_rows(s.elongation_pct)},
                 {"u", vec_rows(s.u)},
                 {"nu", vec_rows(s.nu)},
                 {"r_tether", s.r_tether},
                 {"r_tracking", s.r_tracking},
                 {"r_energy", s.r_energy},
                 {"r_distance", s.r_distance}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(1) << "\n";
}

EvalReport load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open report " + path);
  json j;
  try {
    is >> j;
    EvalReport rep;
    rep.label = j.at("label").get<std::string>();
    rep.config_hash = j.at("config_hash").get<std::string>();
    rep.seed = j.at("seed").get<std::uint64_t>();
    rep.dt = j.at("dt").get<double>();
    rep.steady_state_fraction = j.at("steady_state_fraction").get<double>();
    rep.done_reason = j.at("done_reason").get<std::string>();
    const json& s = j.at("series");
    rep.series.t = s.at("t").get<std::vector<double>>();
    rep.series.e_l = rows_vec<Vec6>(s.at("e_l"));
    rep.series.e_sat = rows_vec<Vec12>(s.at("e_sat"));
    rep.series.elongation_pct = rows_vec<Vec3>(s.at("elongation_pct"));
    rep.series.u = rows_vec<Vec6>(s.at("u"));
    rep.series.nu = rows_vec<Vec3>(s.at("nu"));
    rep.series.r_tether = s.at("r_tether").get<std::vector<double>>();
    rep.series.r_tracking = s.at("r_tracking").get<std::vector<double>>();
    rep.series.r_energy = s.at("r_energy").get<std::vector<double>>();
    rep.series.r_distance = s.at("r_distance").get<std::vector<double>>();
    const std::size_t n = rep.series.t.size();
    for (std::size_t m : {rep.series.e_l.size(), rep.series.e_sat.size(), rep.series.elongation_pct.size(),
                          rep.series.u.size(), rep.series.nu.size()}) {
      if (m != n) throw std::invalid_argument("series lengths differ");
    }
    rep.total_reward = j.at("scalars").at("total_reward").get<double>();
    compute_metrics(rep);
    return rep;
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed report " + path + ": " + e.what());
  }
}

const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::TetherError: return "tether_error";
    case PlotKind::SatelliteError: return "satellite_error";
    case PlotKind::Elongation: return "elongation";
    case PlotKind::Thrust: return "thrust";
  }
  return "?";
}

namespace {

struct Line {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_svg(const std::string& path, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Line>& lines) {
  const double W = 900, H = 480, L = 80, R = 200, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& ln : lines) {
    for (std::size_t k = 0; k < ln.x.size(); ++k) {
      if (!std::isfinite(ln.y[k])) continue;
      x0 = std::min(x0, ln.x[k]);
      x1 = std::max(x1, ln.x[k]);
      y0 = std::min(y0, ln.y[k]);
      y1 = std::max(y1, ln.y[k]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    os << "<line x1=\"" << px(xv) << "\" y1=\"" << T << "\" x2=\"" << px(xv) << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - R << "\" y2=\"" << py(yv)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">" << svg_escape(xlabel)
     << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t k = 0; k < lines[i].x.size(); ++k) {
      if (!std::isfinite(lines[i].y[k])) continue;
      os << px(lines[i].x[k]) << "," << py(lines[i].y[k]) << " ";
    }
    os << "\"/>\n";
    const double ly = T + 10 + 16.0 * static_cast<double>(i);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << svg_escape(lines[i].name) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_lines_csv(const std::string& path, const std::string& xname, const std::vector<Line>& lines) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  std::size_t rows = 0;
  os << xname;
  for (const auto& ln : lines) {
    os << "," << ln.name;
    rows = std::max(rows, ln.x.size());
  }
  os << "\n";
  for (std::size_t k = 0; k < rows; ++k) {
    // All lines of one plot share the x grid of the longest one.
    const Line* ref = nullptr;
    for (const auto& ln : lines) {
      if (ln.x.size() > k) {
        ref = &ln;
        break;
      }
    }
    os << fmt(ref->x[k]);
    for (const auto& ln : lines) {
      os << ",";
      if (k < ln.y.size()) os << fmt(ln.y[k]);
    }
    os << "\n";
  }
}

std::vector<Line> lines_for(const EvalReport& rep, PlotKind kind, const std::string& prefix) {
  const EvalSeries& s = rep.series;
  std::vector<Line> out;
  auto add = [&](const std::string& name, auto get) {
    Line ln{prefix + name, s.t, std::vector<double>(s.size())};
    for (std::size_t k = 0; k < s.size(); ++k) ln.y[k] = get(k);
    out.push_back(std::move(ln));
  };
  switch (kind) {
    case PlotKind::TetherError:
      for (int i = 0; i < 3; ++i) add("e_len" + std::to_string(i + 1), [&](std::size_t k) { return s.e_l[k](i); });
      break;
    case PlotKind::SatelliteError:
      for (int i = 0; i < 3; ++i) {
        add("|e_r" + std::to_string(i + 1) + "|", [&](std::size_t k) { return s.e_sat[k].segment<2>(2 * i).norm(); });
      }
      for (int i = 0; i < 3; ++i) {
        add("|e_v" + std::to_string(i + 1) + "|",
            [&](std::size_t k) { return s.e_sat[k].segment<2>(6 + 2 * i).norm(); });
      }
      break;
    case PlotKind::Elongation:
      for (int i = 0; i < 3; ++i) {
        add("elong" + std::to_string(i + 1), [&](std::size_t k) { return s.elongation_pct[k](i); });
      }
      break;
    case PlotKind::Thrust:
      for (int i = 0; i < 3; ++i) {
        add("|F" + std::to_string(i + 1) + "|", [&](std::size_t k) { return s.u[k].segment<2>(2 * i).norm(); });
      }
      break;
  }
  return out;
}

const char* ylabel(PlotKind k) {
  switch (k) {
    case PlotKind::TetherError: return "length error (m)";
    case PlotKind::SatelliteError: return "position (m) / velocity (m/s) error";
    case PlotKind::Elongation: return "elongation (%)";
    case PlotKind::Thrust: return "thrust acceleration (m/s^2)";
  }
  return "";
}

}  // namespace

std::vector<std::string> emit_plots(const std::vector<EvalReport>& reports, const std::vector<PlotKind>& kinds,
                                    const std::string& dir) {
  if (reports.empty()) throw std::invalid_argument("emit_plots: no reports");
  for (const auto& r : reports) {
    if (r.series.size() == 0) throw std::invalid_argument("emit_plots: empty report '" + r.label + "'");
  }
  if (kinds.empty()) throw std::invalid_argument("emit_plots: no plot kinds");
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (PlotKind kind : kinds) {
    std::vector<Line> lines;
    for (const auto& r : reports) {
      const std::string prefix = reports.size() > 1 ? r.label + ":" : "";
      auto ls = lines_for(r, kind, prefix);
      lines.insert(lines.end(), ls.begin(), ls.end());
    }
    const std::string base = (fs::path(dir) / to_string(kind)).string();
    write_svg(base + ".svg", to_string(kind), "t (s)", ylabel(kind), lines);
    write_lines_csv(base + ".csv", "t", lines);
    paths.push_back(base + ".svg");
  }
  return paths;
}

std::string emit_training_plot(const std::vector<std::string>& log_paths, const std::string& dir) {
  if (log_paths.empty()) throw std::invalid_argument("emit_training_plot: no logs");
  std::vector<Line> lines;
  for (const auto& path : log_paths) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open log " + path);
    std::string line;
    bool header = false;
    Line reward{fs::path(path).stem().string() + " reward", {}, {}};
    Line avg{fs::path(path).stem().string() + " moving avg", {}, {}};
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header) {
        header = true;
        continue;
      }
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 11) throw std::invalid_argument("malformed training log " + path);
      reward.x.push_back(std::stod(cells[0]));
      reward.y.push_back(std::stod(cells[1]));
      avg.x.push_back(std::stod(cells[0]));
      avg.y.push_back(std::stod(cells[10]));
    }
    if (reward.x.empty()) throw std::invalid_argument("training log has no episodes: " + path);
    lines.push_back(std::move(reward));
    lines.push_back(std::move(avg));
  }
  fs::create_directories(dir);
  const std::string base = (fs::path(dir) / "training").string();
  write_svg(base + ".svg", "training", "episode", "episode reward", lines);
  write_lines_csv(base + ".csv", "episode", lines);
  return base + ".svg";
}

}  // namespace ttfs
