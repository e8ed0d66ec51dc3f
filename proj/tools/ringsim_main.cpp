// Command-line front end: run ring-road scenarios, sweep the fundamental
// diagram, and validate controller gain sets.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ringsim/analysis.hpp"
#include "ringsim/scenario_io.hpp"
#include "ringsim/simulation.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;    // configuration or integration error
constexpr int kExitVerdict = 2;  // safety violation / failed gain verdict

std::string default_out_dir() {
  if (const char* env = std::getenv("RINGSIM_OUT_DIR")) return env;
  return ".";
}

struct RunOptions {
  std::string scenario_path;
  std::string out_dir = default_out_dir();
  int stride = 1;
  double dt = 0.0;     // 0 = keep scenario value
  double t_end = 0.0;  // 0 = keep scenario value
  double headway = 0.0;
  bool v2v = false;
  std::string seed_note;
};

int cmd_run(const RunOptions& opt) {
  ringsim::RingScenario sc = ringsim::load_scenario(opt.scenario_path);
  if (opt.dt > 0.0) sc.dt = opt.dt;
  if (opt.t_end > 0.0) sc.t_end = opt.t_end;
  if (opt.headway > 0.0) sc.gains.h = opt.headway;
  if (opt.v2v) sc.v2v_enabled = true;
  sc.validate();

  const auto start = std::chrono::steady_clock::now();
  const ringsim::TrajectoryLog log = ringsim::run(sc);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(opt.out_dir);
  const fs::path traj_path = fs::path(opt.out_dir) / (sc.name + "_trajectory.csv");
  ringsim::write_trajectory_csv(log, traj_path.string(), opt.stride);

  ringsim::RunReport report;
  report.scenario_name = sc.name;
  report.steady = ringsim::detect_steady_state(log);
  const ringsim::SafetyReport safety = ringsim::safety_monitor(log);
  report.violation_count = safety.violations.size();
  report.warning_count = safety.warnings.size();
  for (const auto& platoon : report.steady.platoons) {
    // attenuation is directional: it needs a front vehicle and followers
    if (platoon.members.size() < 2 || !platoon.front) continue;
    report.attenuation.push_back(
        ringsim::string_attenuation_metrics(log, platoon.members));
  }
  report.runtime_seconds = runtime;
  report.seed_note = opt.seed_note;

  const std::string text = ringsim::format_run_report(report);
  const fs::path report_path = fs::path(opt.out_dir) / (sc.name + "_report.txt");
  std::ofstream rf(report_path);
  if (!rf) throw ringsim::ConfigError("cannot write report '" + report_path.string() + "'");
  rf << text;
  std::cout << text;
  for (const auto& note : log.notes) std::cout << "note: " << note << '\n';
  std::cout << "trajectory: " << traj_path.string() << '\n';
  std::cout << "report: " << report_path.string() << '\n';

  return report.violation_count == 0 ? kExitOk : kExitVerdict;
}

struct FdOptions {
  double perimeter = 320.0;
  double headway = 1.5;
  double free_flow = 29.0;
  double standstill = 4.0;
  double length = 4.5;
  double rho_min = 0.0;  // 0 = auto
  double rho_max = 0.0;  // 0 = auto
  int points = 101;
  bool simulate = false;
  int n_max = 12;
  double t_end = 600.0;
  double dt = 0.01;
  std::string out_path;
};

ringsim::RingScenario sweep_scenario(const FdOptions& opt, int n) {
  ringsim::RingScenario sc;
  sc.name = "fd_n" + std::to_string(n);
  sc.perimeter = opt.perimeter;
  sc.count = n;
  sc.free_flow_speed = opt.free_flow;
  sc.gains.h = opt.headway;
  sc.gains.S_0 = opt.standstill;
  sc.vehicle.length = opt.length;
  sc.initial_gaps.assign(static_cast<size_t>(n - 1), 4.0);
  sc.initial_speeds = {0.0};
  sc.dt = opt.dt;
  sc.t_end = opt.t_end;
  return sc;
}

int cmd_fd(const FdOptions& opt) {
  if (opt.points < 1) throw ringsim::ConfigError("fd grid must have at least one point");
  const double jam = 1.0 / (opt.standstill + opt.length);
  const double lo = opt.rho_min > 0.0 ? opt.rho_min : jam / 200.0;
  const double hi = opt.rho_max > 0.0 ? opt.rho_max : jam * 0.999;
  if (!(lo < hi)) throw ringsim::ConfigError("fd grid bounds must satisfy rho_min < rho_max");
  std::vector<double> grid;
  grid.reserve(static_cast<size_t>(opt.points));
  for (int k = 0; k < opt.points; ++k)
    grid.push_back(opt.points == 1 ? lo : lo + (hi - lo) * k / (opt.points - 1));

  const ringsim::FundamentalDiagram fd = ringsim::fundamental_diagram(
      opt.headway, opt.free_flow, opt.standstill, opt.length, grid);

  std::vector<ringsim::SimulatedFdPoint> simulated;
  if (opt.simulate) {
    // Independent deterministic runs; fan out over a small worker pool.
    const int n_lo = std::max(1, static_cast<int>(std::ceil(lo * opt.perimeter)));
    const int n_hi = std::min(opt.n_max,
                              static_cast<int>(std::floor(hi * opt.perimeter)));
    std::vector<std::future<ringsim::SimulatedFdPoint>> jobs;
    for (int n = n_lo; n <= n_hi; ++n) {
      jobs.push_back(std::async(std::launch::async, [opt, n]() {
        const ringsim::RingScenario sc = sweep_scenario(opt, n);
        const ringsim::TrajectoryLog log = ringsim::run(sc);
        const ringsim::SteadyStateReport ss = ringsim::detect_steady_state(log);
        ringsim::SimulatedFdPoint pt;
        pt.rho = static_cast<double>(n) / opt.perimeter;
        pt.v_sim = ss.mean_speed;
        pt.q_sim = pt.rho * ss.mean_speed;
        return pt;
      }));
    }
    for (auto& job : jobs) simulated.push_back(job.get());
  }

  std::string out_path = opt.out_path;
  if (out_path.empty())
    out_path = (fs::path(default_out_dir()) / "fd.csv").string();
  if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty())
    fs::create_directories(parent);
  std::ofstream out(out_path);
  if (!out) throw ringsim::ConfigError("cannot write fd CSV '" + out_path + "'");
  ringsim::write_fd_csv(fd, simulated, out);

  std::cout << "critical_density_veh_per_m: " << ringsim::format_double(fd.rho_c) << '\n';
  std::cout << "capacity_veh_per_s: " << ringsim::format_double(fd.capacity) << '\n';
  std::cout << "critical_count: "
            << ringsim::format_double(ringsim::critical_count(
                   opt.perimeter, opt.headway, opt.free_flow, opt.standstill,
                   opt.length))
            << '\n';
  std::cout << "fd_csv: " << out_path << '\n';
  return kExitOk;
}

struct CheckOptions {
  ringsim::ControllerGains gains;
  std::string gains_file;
  double h_target = 0.0;
  std::string out_path;  // optional structured key=value report
};

int cmd_check_gains(const CheckOptions& opt) {
  ringsim::ControllerGains g = opt.gains;
  if (!opt.gains_file.empty()) {
    const ringsim::RingScenario sc = ringsim::load_scenario(opt.gains_file);
    g = sc.gains;
  }
  g.validate();

  const ringsim::StabilityReport cruise = ringsim::cruise_stability(g);
  const ringsim::StabilityReport following = ringsim::following_stability(g, g.h);
  std::cout << ringsim::format_stability_report(cruise);
  std::cout << ringsim::format_stability_report(following);
  std::string structured = ringsim::stability_report_keyvalues(cruise) +
                           ringsim::stability_report_keyvalues(following);

  bool all_pass = cruise.pass && following.pass;
  if (opt.h_target > 0.0) {
    const auto [cp, cq] = ringsim::coordinated_gain_rescale(g, opt.h_target);
    std::cout << "rescaled gains for h_target = " << ringsim::format_double(opt.h_target)
              << ": C_p~ = " << ringsim::format_double(cp)
              << ", C_q~ = " << ringsim::format_double(cq) << '\n';
    const ringsim::StabilityReport coord =
        ringsim::coordination_stability(g, opt.h_target);
    std::cout << ringsim::format_stability_report(coord);
    structured += ringsim::stability_report_keyvalues(coord);
    all_pass = all_pass && coord.pass;
  }
  std::cout << "overall: " << (all_pass ? "pass" : "fail") << '\n';
  if (!opt.out_path.empty()) {
    std::ofstream out(opt.out_path);
    if (!out)
      throw ringsim::ConfigError("cannot write report '" + opt.out_path + "'");
    out << structured << "overall.pass = " << (all_pass ? "true" : "false") << '\n';
  }
  return all_pass ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ring-road platooning simulator and analysis toolkit"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "Simulate a scenario file");
  run->set_help_flag("--help", "Print help");  // frees -h/--h for the headway
  run->add_option("scenario", run_opt.scenario_path, "Scenario file")->required();
  run->add_option("--out", run_opt.out_dir, "Output directory");
  run->add_option("--stride", run_opt.stride, "CSV decimation stride");
  run->add_option("--dt", run_opt.dt, "Override integration step [s]");
  run->add_option("--t-end", run_opt.t_end, "Override horizon [s]");
  run->add_option("--h", run_opt.headway, "Override time headway [s]");
  run->add_flag("--v2v", run_opt.v2v, "Enable acceleration sharing");
  run->add_option("--seed-note", run_opt.seed_note,
                  "Free-form note recorded in the report (runs are deterministic)");

  FdOptions fd_opt;
  CLI::App* fd = app.add_subcommand("fd", "Fundamental-diagram sweep");
  fd->set_help_flag("--help", "Print help");
  fd->add_option("--perimeter", fd_opt.perimeter, "Ring perimeter [m]");
  fd->add_option("--h", fd_opt.headway, "Time headway [s]");
  fd->add_option("--v-f", fd_opt.free_flow, "Free flow speed [m/s]");
  fd->add_option("--s0", fd_opt.standstill, "Standstill distance [m]");
  fd->add_option("--vehicle-length", fd_opt.length, "Vehicle length [m]");
  fd->add_option("--rho-min", fd_opt.rho_min, "Lowest density [veh/m]");
  fd->add_option("--rho-max", fd_opt.rho_max, "Highest density [veh/m]");
  fd->add_option("--points", fd_opt.points, "Grid points");
  fd->add_flag("--simulate", fd_opt.simulate,
               "Cross-check integer vehicle counts by simulation");
  fd->add_option("--n-max", fd_opt.n_max, "Largest simulated vehicle count");
  fd->add_option("--t-end", fd_opt.t_end, "Simulated horizon [s]");
  fd->add_option("--dt", fd_opt.dt, "Integration step [s]");
  fd->add_option("--out", fd_opt.out_path, "Output CSV path");

  CheckOptions chk_opt;
  CLI::App* chk = app.add_subcommand("check-gains", "Validate a gain set");
  chk->set_help_flag("--help", "Print help");
  chk->add_option("--ka", chk_opt.gains.K_a, "K_a");
  chk->add_option("--cp", chk_opt.gains.C_p, "C_p");
  chk->add_option("--cv", chk_opt.gains.C_v, "C_v");
  chk->add_option("--cq", chk_opt.gains.C_q, "C_q");
  chk->add_option("--cs", chk_opt.gains.C_s, "C_s");
  chk->add_option("--ca", chk_opt.gains.C_a, "C_a");
  chk->add_option("--cb", chk_opt.gains.C_b, "C_b");
  chk->add_option("--p", chk_opt.gains.p, "Reference filter gain p");
  chk->add_option("--lambda", chk_opt.gains.lambda, "Ramp rate lambda");
  chk->add_option("--r", chk_opt.gains.r, "Threshold relative-speed weight r");
  chk->add_option("--h", chk_opt.gains.h, "Time headway h");
  chk->add_option("--s0", chk_opt.gains.S_0, "Standstill distance S_0");
  chk->add_option("--a-min", chk_opt.gains.a_min, "Comfort deceleration bound");
  chk->add_option("--a-max", chk_opt.gains.a_max, "Comfort acceleration bound");
  chk->add_option("--gains", chk_opt.gains_file, "Read gains from a scenario file");
  chk->add_option("--h-target", chk_opt.h_target,
                  "Also check the rescaled loop at this headway");
  chk->add_option("--out", chk_opt.out_path, "Write a key=value report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (fd->parsed()) return cmd_fd(fd_opt);
    if (chk->parsed()) return cmd_check_gains(chk_opt);
  } catch (const ringsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitError;
  } catch (const ringsim::IntegrationError& e) {
    std::cerr << "integration error: " << e.what() << '\n';
    return kExitError;
  } catch (const ringsim::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
