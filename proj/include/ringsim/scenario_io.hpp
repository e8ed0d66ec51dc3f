#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ringsim/analysis.hpp"
#include "ringsim/simulation.hpp"
#include "ringsim/types.hpp"

namespace ringsim {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct RawScenarioFile {
  // section -> key -> value; the top of the file is section "".
  std::map<std::string, std::map<std::string, std::string>> sections;
};

inline RawScenarioFile parse_raw(std::istream& in, const std::string& origin) {
  RawScenarioFile raw;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      raw.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    raw.sections[section][key] = value;
  }
  return raw;
}

// Typed access to one section with consumed-key tracking, so leftovers can be
// reported as unknown keys.
class SectionReader {
 public:
  SectionReader(const RawScenarioFile& raw, std::string section,
                std::string origin)
      : section_(std::move(section)), origin_(std::move(origin)) {
    const auto it = raw.sections.find(section_);
    if (it != raw.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) const {
    return entries_ && entries_->count(key) > 0;
  }

  std::string get_string(const std::string& key, const std::string& dflt) {
    if (!has(key)) return dflt;
    consumed_.insert(key);
    return entries_->at(key);
  }

  double get_double(const std::string& key, double dflt) {
    if (!has(key)) return dflt;
    consumed_.insert(key);
    return parse_double(entries_->at(key), key);
  }

  int get_int(const std::string& key, int dflt) {
    if (!has(key)) return dflt;
    consumed_.insert(key);
    const double v = parse_double(entries_->at(key), key);
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) fail(key, "expected an integer");
    return i;
  }

  bool get_bool(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    consumed_.insert(key);
    const std::string v = entries_->at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true/false");
    return dflt;
  }

  std::vector<double> get_list(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    consumed_.insert(key);
    std::istringstream ss(entries_->at(key));
    std::string tok;
    while (ss >> tok) out.push_back(parse_double(tok, key));
    return out;
  }

  void check_consumed() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_)
      if (!consumed_.count(key))
        throw ConfigError(origin_ + ": unknown key '" + key + "' in section [" +
                          section_ + "]");
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(origin_ + ": key '" + key + "' in section [" + section_ +
                      "]: " + what);
  }

  double parse_double(const std::string& text, const std::string& key) const {
    try {
      size_t pos = 0;
      const double v = std::stod(text, &pos);
      if (pos != text.size()) fail(key, "invalid number '" + text + "'");
      return v;
    } catch (const std::logic_error&) {
      fail(key, "invalid number '" + text + "'");
    }
  }

  const std::map<std::string, std::string>* entries_ = nullptr;
  std::string section_;
  std::string origin_;
  std::set<std::string> consumed_;
};

}  // namespace detail

// Parses the structured-text scenario format. All quantities are SI; absent
// keys fall back to the reference parameter set.
inline RingScenario parse_scenario(std::istream& in, const std::string& origin,
                                   const std::string& default_name) {
  const detail::RawScenarioFile raw = detail::parse_raw(in, origin);
  const std::set<std::string> known = {"",         "scenario", "ring",
                                       "vehicle",  "gains",    "initial",
                                       "simulation", "coordination"};
  for (const auto& [name, entries] : raw.sections)
    if (!known.count(name))
      throw ConfigError(origin + ": unknown section [" + name + "]");

  RingScenario sc;
  {
    detail::SectionReader top(raw, "", origin);
    detail::SectionReader meta(raw, "scenario", origin);
    sc.name = meta.get_string("name", top.get_string("name", default_name));
    top.check_consumed();
    meta.check_consumed();
  }
  {
    detail::SectionReader ring(raw, "ring", origin);
    sc.perimeter = ring.get_double("perimeter", sc.perimeter);
    sc.count = ring.get_int("count", sc.count);
    sc.free_flow_speed = ring.get_double("free_flow_speed", sc.free_flow_speed);
    ring.check_consumed();
  }
  {
    detail::SectionReader veh(raw, "vehicle", origin);
    sc.vehicle.length = veh.get_double("length", sc.vehicle.length);
    sc.vehicle.mass = veh.get_double("mass", sc.vehicle.mass);
    sc.vehicle.drag_coeff = veh.get_double("drag_coeff", sc.vehicle.drag_coeff);
    sc.vehicle.friction_coeff =
        veh.get_double("friction_coeff", sc.vehicle.friction_coeff);
    sc.vehicle.engine_time_const =
        veh.get_double("engine_time_const", sc.vehicle.engine_time_const);
    veh.check_consumed();
  }
  {
    detail::SectionReader g(raw, "gains", origin);
    sc.gains.K_a = g.get_double("K_a", sc.gains.K_a);
    sc.gains.C_p = g.get_double("C_p", sc.gains.C_p);
    sc.gains.C_v = g.get_double("C_v", sc.gains.C_v);
    sc.gains.C_q = g.get_double("C_q", sc.gains.C_q);
    sc.gains.C_s = g.get_double("C_s", sc.gains.C_s);
    sc.gains.C_a = g.get_double("C_a", sc.gains.C_a);
    sc.gains.C_b = g.get_double("C_b", sc.gains.C_b);
    sc.gains.p = g.get_double("p", sc.gains.p);
    sc.gains.lambda = g.get_double("lambda", sc.gains.lambda);
    sc.gains.r = g.get_double("r", sc.gains.r);
    sc.gains.h = g.get_double("h", sc.gains.h);
    sc.gains.S_0 = g.get_double("S_0", sc.gains.S_0);
    sc.gains.a_min = g.get_double("a_min", sc.gains.a_min);
    sc.gains.a_max = g.get_double("a_max", sc.gains.a_max);
    g.check_consumed();
  }
  {
    detail::SectionReader init(raw, "initial", origin);
    sc.initial_gaps = init.get_list("gaps");
    sc.initial_speeds = init.get_list("speeds");
    if (sc.initial_speeds.empty()) sc.initial_speeds = {0.0};
    sc.initial_accels = init.get_list("accels");
    init.check_consumed();
  }
  {
    detail::SectionReader sim(raw, "simulation", origin);
    sc.dt = sim.get_double("dt", sc.dt);
    sc.t_end = sim.get_double("t_end", sc.t_end);
    sc.sensing_range = sim.get_double("sensing_range", sc.sensing_range);
    sc.v2v_enabled = sim.get_bool("v2v", sc.v2v_enabled);
    const std::string fid = sim.get_string("fidelity", "linearized");
    if (fid == "linearized")
      sc.fidelity = Fidelity::Linearized;
    else if (fid == "full_nonlinear")
      sc.fidelity = Fidelity::FullNonlinear;
    else
      throw ConfigError(origin + ": fidelity must be linearized or full_nonlinear");
    sim.check_consumed();
  }
  if (raw.sections.count("coordination")) {
    detail::SectionReader coord(raw, "coordination", origin);
    CoordinationPlan plan;
    const std::string kind = coord.get_string("kind", "");
    if (kind == "one_platoon_asymmetrical")
      plan.kind = CoordKind::OnePlatoonAsymmetrical;
    else if (kind == "symmetrical")
      plan.kind = CoordKind::Symmetrical;
    else if (kind == "m_platoon_symmetrical")
      plan.kind = CoordKind::MPlatoonSymmetrical;
    else
      throw ConfigError(origin +
                        ": coordination kind must be one_platoon_asymmetrical, "
                        "symmetrical or m_platoon_symmetrical");
    for (double v : coord.get_list("leaders")) {
      const int idx = static_cast<int>(std::llround(v));
      plan.leaders.push_back(idx - 1);  // file uses 1-based vehicle numbers
    }
    plan.alpha = coord.get_double("alpha", plan.alpha);
    plan.issue_time = coord.get_double("issue_time", plan.issue_time);
    sc.plan = plan;
    coord.check_consumed();
  }
  sc.validate();
  return sc;
}

inline RingScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  return parse_scenario(in, path, std::filesystem::path(path).stem().string());
}

// CSV trajectory export, one row per (time, vehicle).
inline void write_trajectory_csv(const TrajectoryLog& log, std::ostream& out,
                                 int stride = 1) {
  if (stride < 1) throw ConfigError("csv stride must be at least 1");
  out << "t,vehicle,x,v,a,u,w,v_r,mode,y,delta,V_s,h_now\n";
  for (size_t k = 0; k < log.samples(); k += static_cast<size_t>(stride)) {
    for (int i = 0; i < log.vehicle_count; ++i) {
      const auto& se = log.veh[static_cast<size_t>(i)];
      out << format_double(log.time[k]) << ',' << (i + 1) << ','
          << format_double(se.x[k]) << ',' << format_double(se.v[k]) << ','
          << format_double(se.a[k]) << ',' << format_double(se.u[k]) << ','
          << format_double(se.w[k]) << ',' << format_double(se.v_r[k]) << ','
          << to_string(se.mode[k]) << ',' << format_double(se.y[k]) << ','
          << format_double(se.delta[k]) << ','
          << format_double(se.speed_limit[k]) << ','
          << format_double(se.h_now[k]) << '\n';
    }
  }
}

inline void write_trajectory_csv(const TrajectoryLog& log,
                                 const std::string& path, int stride = 1) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory CSV '" + path + "'");
  write_trajectory_csv(log, out, stride);
}

struct SimulatedFdPoint {
  double rho = 0.0;
  double v_sim = 0.0;
  double q_sim = 0.0;
};

inline void write_fd_csv(const FundamentalDiagram& fd,
                         std::span<const SimulatedFdPoint> simulated,
                         std::ostream& out) {
  out << "rho,v_star,q_star,regime\n";
  for (const auto& pt : fd.points)
    out << format_double(pt.rho) << ',' << format_double(pt.v_star) << ','
        << format_double(pt.q_star) << ',' << to_string(pt.regime) << '\n';
  for (const auto& pt : simulated)
    out << format_double(pt.rho) << ',' << format_double(pt.v_sim) << ','
        << format_double(pt.q_sim) << ",Simulated\n";
}

inline std::string format_stability_report(const StabilityReport& rep) {
  std::ostringstream os;
  os << rep.label << ":\n";
  os << "  denominator:";
  for (double c : rep.denominator) os << ' ' << format_double(c);
  os << "\n  roots:";
  for (const auto& r : rep.roots) {
    os << ' ' << format_double(r.real());
    if (r.imag() != 0.0) os << (r.imag() > 0 ? "+" : "") << format_double(r.imag()) << 'j';
  }
  os << "\n  hurwitz: " << (rep.hurwitz ? "yes" : "no") << '\n';
  if (!std::isnan(rep.cruise_condition))
    os << "  K_a*C_v + C_s: " << format_double(rep.cruise_condition) << '\n';
  if (!std::isnan(rep.c1)) os << "  C_1: " << format_double(rep.c1) << '\n';
  if (!std::isnan(rep.c2_minus_cv2))
    os << "  C_2 - C_v^2: " << format_double(rep.c2_minus_cv2) << '\n';
  if (!std::isnan(rep.rescale_condition))
    os << "  K_a*C_p + C_q: " << format_double(rep.rescale_condition) << '\n';
  if (!std::isnan(rep.max_gain))
    os << "  max |.(jw)|: " << format_double(rep.max_gain) << " at w = "
       << format_double(rep.argmax_omega) << " rad/s\n";
  if (rep.hurwitz) {
    os << "  impulse response nonnegative: "
       << (rep.impulse_nonnegative ? "yes" : "no");
    if (!rep.impulse_nonnegative)
      os << " (first negative at t = " << format_double(rep.first_negative_time)
         << " s, min " << format_double(rep.impulse_min) << ")";
    os << '\n';
  }
  os << "  verdict: " << (rep.pass ? "pass" : "fail") << '\n';
  return os.str();
}

inline std::string stability_report_keyvalues(const StabilityReport& rep) {
  std::ostringstream os;
  const std::string prefix = rep.label.substr(0, rep.label.find('('));
  os << prefix << ".hurwitz = " << (rep.hurwitz ? "true" : "false") << '\n';
  if (!std::isnan(rep.c1)) os << prefix << ".c1 = " << format_double(rep.c1) << '\n';
  if (!std::isnan(rep.c2_minus_cv2))
    os << prefix << ".c2_minus_cv2 = " << format_double(rep.c2_minus_cv2) << '\n';
  if (!std::isnan(rep.cruise_condition))
    os << prefix << ".cruise_condition = " << format_double(rep.cruise_condition) << '\n';
  if (!std::isnan(rep.max_gain))
    os << prefix << ".max_gain = " << format_double(rep.max_gain) << '\n';
  os << prefix << ".impulse_nonnegative = "
     << (rep.impulse_nonnegative ? "true" : "false") << '\n';
  os << prefix << ".pass = " << (rep.pass ? "true" : "false") << '\n';
  return os.str();
}

struct RunReport {
  std::string scenario_name;
  SteadyStateReport steady;
  size_t violation_count = 0;
  size_t warning_count = 0;
  std::vector<StringAttenuationReport> attenuation;  // one per multi-vehicle platoon
  double runtime_seconds = 0.0;
  std::string seed_note;
};

inline std::string format_run_report(const RunReport& rep) {
  std::ostringstream os;
  os << "scenario: " << rep.scenario_name << '\n';
  os << "converged: " << (rep.steady.converged ? "yes" : "no") << '\n';
  if (rep.steady.converged) {
    os << "settle_time_s: " << format_double(rep.steady.settle_time) << '\n';
    os << "mean_speed_mps: " << format_double(rep.steady.mean_speed) << '\n';
    os << "equilibrium (vehicle: speed m/s, gap m):\n";
    for (size_t i = 0; i < rep.steady.equilibrium_speed.size(); ++i)
      os << "  " << (i + 1) << ": " << format_double(rep.steady.equilibrium_speed[i])
         << ", " << format_double(rep.steady.equilibrium_gap[i]) << '\n';
    os << "platoons:\n";
    for (const auto& p : rep.steady.platoons) {
      os << "  members:";
      for (int mbr : p.members) os << ' ' << (mbr + 1);
      if (p.front)
        os << "  front: " << (*p.front + 1)
           << "  gap_ahead: " << format_double(p.inter_platoon_gap);
      else
        os << "  front: none (closed ring platoon)";
      os << '\n';
    }
  }
  os << "safety_violations: " << rep.violation_count << '\n';
  os << "switch_warnings: " << rep.warning_count << '\n';
  for (const auto& att : rep.attenuation) {
    os << "string_attenuation (downstream to upstream, vehicle: max|a|, ||delta||_2):\n";
    for (const auto& vn : att.vehicles)
      os << "  " << (vn.vehicle + 1) << ": " << format_double(vn.max_abs_accel)
         << ", " << format_double(vn.delta_l2) << '\n';
    os << "  attenuating: " << (att.attenuating ? "yes" : "no") << '\n';
  }
  os << "runtime_s: " << format_double(rep.runtime_seconds) << '\n';
  if (!rep.seed_note.empty()) os << "seed_note: " << rep.seed_note << '\n';
  return os.str();
}

}  // namespace ringsim
