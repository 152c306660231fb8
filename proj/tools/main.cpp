// hjtraj: trajectory planning over quadratic traffic landscapes.
//
// Subcommands: preprocess (fit a landscape from measurements), plan (solve a
// planning instance), analyze (curvature and non-convexity diagnostics),
// estimate (prior mass/deadline estimation), sweep (plan over a K x T grid).
//
// Exit codes: 0 success, 1 input error, 2 computation error,
// 3 non-convergence (partial output written).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hjtraj/bi_phase.hpp"
#include "hjtraj/io.hpp"
#include "hjtraj/model.hpp"
#include "hjtraj/preprocess.hpp"
#include "hjtraj/solvers.hpp"

namespace {

using nlohmann::json;
using namespace hjtraj;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;
constexpr int kExitNotConverged = 3;
constexpr int kTrajectorySamples = 512;

struct CliError {
  int code;
  std::string message;
};

Vec2 parse_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw CliError{kExitInput, "expected 'X,Y', got '" + text + "'"};
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CliError{kExitInput, "expected 'X,Y', got '" + text + "'"};
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CliError{kExitInput, "expected a comma-separated number list, got '" + text + "'"};
    }
  }
  if (out.empty()) throw CliError{kExitInput, "empty number list"};
  return out;
}

/// Applies a JSON config file under the explicitly passed flags of one
/// subcommand: every key must name a known option, and options the user set on
/// the command line keep their values.
void merge_config(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{kExitInput, "cannot open config " + path};
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw CliError{kExitInput, path + ": " + e.what()};
  }
  if (!cfg.is_object()) throw CliError{kExitInput, path + ": config must be a JSON object"};
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw CliError{kExitInput, path + ": unknown config key '" + key + "'"};
    if (opt->count() > 0) continue;  // explicit flag wins
    std::string text;
    if (value.is_string())
      text = value.get<std::string>();
    else if (value.is_number_integer())
      text = std::to_string(value.get<long long>());
    else if (value.is_number())
      text = io::format_double(value.get<double>());
    else if (value.is_boolean())
      text = value.get<bool>() ? "true" : "false";
    else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!v.is_number()) throw CliError{kExitInput, path + ": key '" + key + "': arrays must be numeric"};
        if (!joined.empty()) joined += ',';
        joined += io::format_double(v.get<double>());
      }
      text = joined;
    } else {
      throw CliError{kExitInput, path + ": unsupported value type for key '" + key + "'"};
    }
    opt->add_result(text);
    opt->run_callback();
  }
}

json hessian_to_json(const HessianSummary& h) {
  return {{"alpha", h.alpha},
          {"spatial", h.spatial},
          {"mixed", {h.mixed.x, h.mixed.y}},
          {"eigenvalues", {h.eigenvalues[0], h.eigenvalues[1], h.eigenvalues[2]}},
          {"positive_definite", h.positive_definite}};
}

json locus_to_json(const std::optional<Disk>& locus) {
  if (!locus) return {{"empty", true}};
  return {{"empty", false},
          {"center", {locus->center.x, locus->center.y}},
          {"radius", locus->radius}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw CliError{kExitInput, "cannot open " + path + " for writing"};
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  std::string input;
  std::string output = "model.json";
  int clusters = 2;
  int neighbors = 5;
  int iterations = 12;
  double alpha = 0.25;
  int grid = 50;
};

int run_preprocess(const PreprocessArgs& args) {
  if (args.clusters != 1 && args.clusters != 2)
    throw CliError{kExitInput, "--kc must be 1 or 2"};
  if (args.grid < 2) throw CliError{kExitInput, "--grid must be at least 2"};
  if (!(args.alpha > 0.0 && args.alpha <= 1.0))
    throw CliError{kExitInput, "--alpha must lie in (0, 1]"};
  if (args.iterations < 1) throw CliError{kExitInput, "--iters must be at least 1"};
  if (args.neighbors < 0) throw CliError{kExitInput, "--kn must be nonnegative (0 = unbounded)"};

  const std::vector<TrafficSample> raw = io::read_samples_csv(args.input);
  const TrafficGrid grid = aggregate(raw, args.grid, bounding_box(raw));
  const auto smoothed = lowess(grid.cell_samples(), args.alpha);
  const auto normed = normalize(smoothed);
  const FittedModel model = kmeans_quadratic(normed, args.clusters, args.neighbors, args.iterations);

  write_json(args.output, io::model_to_json(model));
  std::cout << "fitted " << model.phases.size() << " phase(s), quad_error = "
            << io::format_double(model.quad_error) << " after "
            << (model.error_history.size() - 1) << " iterations\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
  std::string model;
  std::string z_start, z_end;
  double t_start = 0.0;
  double t_end = 0.0;
  double mass = 0.0;
  std::string solver = "b";
  std::string out_prefix = "plan";
};

Instance make_instance(const std::string& model_path, const std::string& z0_text,
                       const std::string& zT_text, double t0, double T, double mass) {
  if (!(mass > 0.0)) throw CliError{kExitInput, "--K must be positive"};
  if (!(T > t0)) throw CliError{kExitInput, "--T must exceed --t0"};
  const auto phases = io::read_model_phases(model_path);
  if (phases.size() > 2) throw CliError{kExitInput, "model must have 1 or 2 phases"};
  return Instance{mass, t0, T, parse_point(z0_text), parse_point(zT_text), phases};
}

int run_plan(const PlanArgs& args) {
  const Instance inst = make_instance(args.model, args.z_start, args.z_end, args.t_start,
                                      args.t_end, args.mass);
  json out;
  out["solver"] = args.solver;
  int exit_code = kExitOk;
  std::vector<TrajectorySample> samples;

  if (!inst.bi_phase()) {
    const TrajectoryArc arc = solve_arc(inst.mass, inst.phases[0], inst.t_start, inst.z_start,
                                        inst.t_end, inst.z_end);
    samples = sample_arc(arc, kTrajectorySamples);
    out["converged"] = true;
    out["S"] = value(arc);
    out["tau"] = nullptr;
    out["xi"] = nullptr;
    out["residuals"] = nullptr;
    out["iterations"] = nullptr;
    out["hessian"] = nullptr;
  } else if (args.solver == "mpc") {
    const MpcResult r = mpc(inst, inst.duration() / (kTrajectorySamples - 1));
    samples.reserve(r.samples.size());
    for (const auto& s : r.samples)
      samples.push_back({s.t, s.position, s.velocity,
                         hamiltonian(inst.mass, inst.phases[s.active_phase], s.position,
                                     s.velocity * inst.mass),
                         s.active_phase + 1});
    out["converged"] = true;
    out["S"] = r.total_cost;
    out["tau"] = nullptr;
    out["xi"] = nullptr;
    out["residuals"] = nullptr;
    out["iterations"] = static_cast<int>(r.samples.size()) - 1;
    out["hessian"] = nullptr;
  } else {
    PlanResult r;
    if (args.solver == "b")
      r = b_algo(inst);
    else if (args.solver == "grad")
      r = grad_algo(inst);
    else if (args.solver == "aoa")
      r = aoa(inst);
    else
      throw CliError{kExitInput, "--solver must be one of b, grad, aoa, mpc"};
    samples = sample_plan(r.first_arc, r.second_arc, kTrajectorySamples);
    out["converged"] = r.converged;
    out["S"] = r.solution.total_cost;
    out["tau"] = r.solution.tau;
    out["xi"] = {r.solution.xi.x, r.solution.xi.y};
    out["residuals"] = {{"g_p", r.solution.g_impulsion},
                        {"g_H", r.solution.g_hamiltonian},
                        {"delta_H", r.solution.H_after - r.solution.H_before},
                        {"mu", r.solution.multiplier}};
    out["iterations"] = r.solution.iterations;
    out["hessian"] = hessian_to_json(r.solution.hessian);
    out["zone_changes"] = r.zone_changes;
    if (r.zone_changes != 1)
      std::cerr << "warning: trajectory crosses the interface " << r.zone_changes
                << " times (single-crossing model)\n";
    if (!r.converged) exit_code = kExitNotConverged;
  }

  io::write_trajectory_csv(args.out_prefix + "_traj.csv", samples);
  write_json(args.out_prefix + ".json", out);
  std::cout << "S = " << io::format_double(out["S"].get<double>()) << ", outputs "
            << args.out_prefix << ".json, " << args.out_prefix << "_traj.csv\n";
  return exit_code;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string model;
  std::string z_start, z_end;
  double t_start = 0.0;
  double t_end = 0.0;
  double mass = 0.0;
  double tau = 0.0;
  std::string output = "analysis.json";
};

int run_analyze(const AnalyzeArgs& args) {
  const Instance inst = make_instance(args.model, args.z_start, args.z_end, args.t_start,
                                      args.t_end, args.mass);
  if (!inst.bi_phase()) throw CliError{kExitInput, "analyze needs a bi-phase model"};

  const Vec2 b = b_point(inst, args.tau);
  json out;
  out["tau"] = args.tau;
  out["b_point"] = {b.x, b.y};
  out["h"] = h_coefficient(inst, args.tau);
  out["hessian"] = hessian_to_json(two_phase_hessian(inst, args.tau, b));
  const auto [arc1, arc2] = split_arcs(inst, args.tau, b);
  json convexity = json::array();
  for (const TrajectoryArc* arc : {&arc1, &arc2}) {
    try {
      convexity.push_back(convexity_test(*arc) == ConvexityVerdict::SufficientlyNonconvex
                              ? "sufficiently_nonconvex"
                              : "inconclusive");
    } catch (const UndefinedRatioError&) {
      convexity.push_back("undefined_ratio");
    }
  }
  out["convexity"] = convexity;
  out["alpha_locus"] = locus_to_json(alpha_locus(inst, args.tau));
  out["det_locus"] = locus_to_json(det_locus(inst, args.tau));

  write_json(args.output, out);
  std::cout << "analysis written to " << args.output << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  std::string z_start, z_end;
  double v_bar = 20.0;
  double detour = 1.5;
  double phi_max = 10.0;
  double scale_ratio = 0.0;
  bool degrees = false;
  std::string model;
  double mass = 0.0;
  std::string output = "estimates.json";
};

int run_estimate(const EstimateArgs& args) {
  const double r = args.scale_ratio > 0.0 ? args.scale_ratio : default_scale_ratio();
  Vec2 z0 = parse_point(args.z_start);
  Vec2 zT = parse_point(args.z_end);
  if (args.degrees) {
    // One scaled unit is 100 m; r scaled units per degree.
    z0 = z0 * (r * 100.0);
    zT = zT * (r * 100.0);
  }
  std::vector<QuadraticPhase> phases;
  if (!args.model.empty()) phases = io::read_model_phases(args.model);

  const ParameterEstimates est =
      estimate_parameters(z0, zT, args.v_bar, args.detour, args.phi_max, r, phases, args.mass);

  json out;
  out["r"] = est.scale_ratio;
  out["path_length_m"] = est.path_length_m;
  out["T_est"] = est.travel_time_s;
  out["phi_max"] = est.phi_max;
  if (!phases.empty()) {
    out["mass_min_scaled"] = est.mass_min_scaled;
    out["mass_min_unscaled"] = est.mass_min_unscaled;
    if (args.mass > 0.0) {
      out["phi"] = est.temporal_phases;
      out["phi_ok"] = est.phase_ok;
    }
  }
  write_json(args.output, out);
  std::cout << "r = " << io::format_double(est.scale_ratio)
            << ", T_est = " << io::format_double(est.travel_time_s) << " s\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string model;
  std::string z_start, z_end;
  double t_start = 0.0;
  std::string mass_list;
  std::string deadline_list;
  std::string solver = "b";
  std::string output = "sweep.csv";
};

int run_sweep(const SweepArgs& args) {
  const auto phases = io::read_model_phases(args.model);
  if (phases.size() > 2) throw CliError{kExitInput, "model must have 1 or 2 phases"};
  const Vec2 z0 = parse_point(args.z_start);
  const Vec2 zT = parse_point(args.z_end);
  const std::vector<double> masses = parse_list(args.mass_list);
  const std::vector<double> deadlines = parse_list(args.deadline_list);
  if (args.solver != "b" && args.solver != "grad")
    throw CliError{kExitInput, "--solver must be b or grad for sweeps"};

  struct Row {
    double mass, deadline;
    std::string status;
    std::string tau, xi_x, xi_y;
    double cost = 0.0, length = 0.0, speed = 0.0;
  };

  auto solve_cell = [&](double mass, double deadline) -> Row {
    Row row{mass, deadline, "ok", "", "", "", 0.0, 0.0, 0.0};
    try {
      const Instance inst{mass, args.t_start, deadline, z0, zT, phases};
      std::vector<TrajectorySample> samples;
      if (!inst.bi_phase()) {
        const TrajectoryArc arc =
            solve_arc(mass, phases[0], args.t_start, z0, deadline, zT);
        row.cost = value(arc);
        samples = sample_arc(arc, kTrajectorySamples);
      } else {
        const PlanResult r = args.solver == "b" ? b_algo(inst) : grad_algo(inst);
        if (!r.converged) row.status = "not_converged";
        row.cost = r.solution.total_cost;
        row.tau = io::format_double(r.solution.tau);
        row.xi_x = io::format_double(r.solution.xi.x);
        row.xi_y = io::format_double(r.solution.xi.y);
        samples = sample_plan(r.first_arc, r.second_arc, kTrajectorySamples);
      }
      row.length = polyline_length(samples);
      row.speed = row.length / (deadline - args.t_start);
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    return row;
  };

  // Cells run concurrently; the output order is row-major over (K, T).
  std::vector<std::future<Row>> futures;
  futures.reserve(masses.size() * deadlines.size());
  for (double mass : masses)
    for (double deadline : deadlines)
      futures.push_back(std::async(std::launch::async, solve_cell, mass, deadline));

  std::ofstream out(args.output);
  if (!out) throw CliError{kExitInput, "cannot open " + args.output + " for writing"};
  out << "K,T,status,tau,xi_x,xi_y,S,length,avg_speed\n";
  for (auto& f : futures) {
    const Row row = f.get();
    const bool ok = row.status == "ok" || row.status == "not_converged";
    out << io::format_double(row.mass) << ',' << io::format_double(row.deadline) << ','
        << row.status << ',' << row.tau << ',' << row.xi_x << ',' << row.xi_y << ',';
    if (ok) out << io::format_double(row.cost);
    out << ',';
    if (ok) out << io::format_double(row.length);
    out << ',';
    if (ok) out << io::format_double(row.speed);
    out << '\n';
  }
  std::cout << "sweep written to " << args.output << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory planning over quadratic traffic landscapes"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  std::string pre_config;
  CLI::App* cmd_pre = app.add_subcommand("preprocess", "Fit a quadratic landscape from CSV data");
  cmd_pre->add_option("--in", pre.input, "input CSV with header x,y,z")->required();
  cmd_pre->add_option("--out", pre.output, "output model JSON");
  cmd_pre->add_option("--kc", pre.clusters, "number of clusters (1 or 2)");
  cmd_pre->add_option("--kn", pre.neighbors, "nearest-neighbor gate, 0 = unbounded");
  cmd_pre->add_option("--iters", pre.iterations, "relabel iterations");
  cmd_pre->add_option("--alpha", pre.alpha, "LOWESS span in (0,1]");
  cmd_pre->add_option("--grid", pre.grid, "aggregation grid steps");
  cmd_pre->add_option("--config", pre_config, "JSON config merged under explicit flags");

  PlanArgs plan;
  std::string plan_config;
  CLI::App* cmd_plan = app.add_subcommand("plan", "Plan an optimal trajectory");
  cmd_plan->add_option("--model", plan.model, "landscape model JSON")->required();
  cmd_plan->add_option("--z0", plan.z_start, "start position X,Y")->required();
  cmd_plan->add_option("--zT", plan.z_end, "goal position X,Y")->required();
  cmd_plan->add_option("--t0", plan.t_start, "start time [s]");
  cmd_plan->add_option("--T", plan.t_end, "deadline [s]")->required();
  cmd_plan->add_option("--K", plan.mass, "velocity-cost mass")->required();
  cmd_plan->add_option("--solver", plan.solver, "b | grad | aoa | mpc");
  cmd_plan->add_option("--out-prefix", plan.out_prefix, "output file prefix");
  cmd_plan->add_option("--config", plan_config, "JSON config merged under explicit flags");

  AnalyzeArgs analyze;
  std::string analyze_config;
  CLI::App* cmd_analyze = app.add_subcommand("analyze", "Hessian and locus diagnostics");
  cmd_analyze->add_option("--model", analyze.model, "landscape model JSON")->required();
  cmd_analyze->add_option("--z0", analyze.z_start, "start position X,Y")->required();
  cmd_analyze->add_option("--zT", analyze.z_end, "goal position X,Y")->required();
  cmd_analyze->add_option("--t0", analyze.t_start, "start time [s]");
  cmd_analyze->add_option("--T", analyze.t_end, "deadline [s]")->required();
  cmd_analyze->add_option("--K", analyze.mass, "velocity-cost mass")->required();
  cmd_analyze->add_option("--tau", analyze.tau, "crossing time to analyze")->required();
  cmd_analyze->add_option("--out", analyze.output, "output JSON");
  cmd_analyze->add_option("--config", analyze_config, "JSON config merged under explicit flags");

  EstimateArgs est;
  std::string est_config;
  CLI::App* cmd_est = app.add_subcommand("estimate", "Estimate mass and deadline priors");
  cmd_est->add_option("--z0", est.z_start, "start position X,Y")->required();
  cmd_est->add_option("--zT", est.z_end, "goal position X,Y")->required();
  cmd_est->add_option("--v-bar", est.v_bar, "cruise speed [m/s]");
  cmd_est->add_option("--c", est.detour, "detour factor");
  cmd_est->add_option("--phi-max", est.phi_max, "temporal phase bound");
  cmd_est->add_option("--r", est.scale_ratio, "spatial scale ratio (default 40e6/360/100)");
  cmd_est->add_flag("--degrees", est.degrees, "positions given in degrees");
  cmd_est->add_option("--model", est.model, "landscape model for phase checks");
  cmd_est->add_option("--K", est.mass, "scaled mass for phase checks");
  cmd_est->add_option("--out", est.output, "output JSON");
  cmd_est->add_option("--config", est_config, "JSON config merged under explicit flags");

  SweepArgs sweep;
  std::string sweep_config;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Plan over a K x T grid");
  cmd_sweep->add_option("--model", sweep.model, "landscape model JSON")->required();
  cmd_sweep->add_option("--z0", sweep.z_start, "start position X,Y")->required();
  cmd_sweep->add_option("--zT", sweep.z_end, "goal position X,Y")->required();
  cmd_sweep->add_option("--t0", sweep.t_start, "start time [s]");
  cmd_sweep->add_option("--K", sweep.mass_list, "comma-separated masses")->required();
  cmd_sweep->add_option("--T", sweep.deadline_list, "comma-separated deadlines")->required();
  cmd_sweep->add_option("--solver", sweep.solver, "b | grad");
  cmd_sweep->add_option("--out", sweep.output, "output CSV");
  cmd_sweep->add_option("--config", sweep_config, "JSON config merged under explicit flags");

  try {
    app.parse(argc, argv);
    if (cmd_pre->parsed()) {
      if (!pre_config.empty()) merge_config(cmd_pre, pre_config);
      return run_preprocess(pre);
    }
    if (cmd_plan->parsed()) {
      if (!plan_config.empty()) merge_config(cmd_plan, plan_config);
      return run_plan(plan);
    }
    if (cmd_analyze->parsed()) {
      if (!analyze_config.empty()) merge_config(cmd_analyze, analyze_config);
      return run_analyze(analyze);
    }
    if (cmd_est->parsed()) {
      if (!est_config.empty()) merge_config(cmd_est, est_config);
      return run_estimate(est);
    }
    if (cmd_sweep->parsed()) {
      if (!sweep_config.empty()) merge_config(cmd_sweep, sweep_config);
      return run_sweep(sweep);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const EmptyInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitInput;
}
