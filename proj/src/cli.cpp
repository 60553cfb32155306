#include "handsoff/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "handsoff/analysis.hpp"
#include "handsoff/io.hpp"

namespace handsoff::cli {

using nlohmann::json;
using Eigen::Index;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json base_document(const std::string& command) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = command;
  return doc;
}

json problem_summary(const Problem& p) {
  return {{"n", p.plant.n()}, {"m", p.plant.m()}, {"N", p.N}, {"T", num(p.T)}, {"h", num(p.h())}};
}

json sparsity_json(const SparsityReport& r) {
  return {{"support_measure", num(r.support_measure)},
          {"hands_off_ratio", num(r.hands_off_ratio)},
          {"per_channel_measure", vec(r.per_channel_measure)},
          {"active_slots", r.active_slots},
          {"active_entries", r.active_entries},
          {"threshold", num(r.threshold)}};
}

json support_json(const Support& s) {
  json a = json::array();
  for (Index i : s) a.push_back(i);
  return a;
}

json report_json(const SolveReport& rep, double threshold) {
  json j;
  j["status"] = to_string(rep.status);
  j["objective"] = num(rep.objective);
  j["dual_bound"] = num(rep.dual_bound);
  j["residuals"] = {{"primal", num(rep.primal_residual)},
                    {"dual", num(rep.dual_residual)},
                    {"gap", num(rep.gap)}};
  j["iterations"] = rep.iterations;
  j["polish_iterations"] = rep.polish_iterations;
  j["polish_applied"] = rep.polish_applied;
  j["terminal_error"] = num(rep.terminal_error);
  if (rep.status == SolveStatus::kInfeasible) {
    j["infeasibility_certificate"] = rep.infeasibility_by_radius ? "reach_bound" : "farkas";
  }
  if (rep.status == SolveStatus::kOptimal) {
    j["unpolished_objective"] = num(rep.unpolished_objective);
    j["sparsity"] = sparsity_json(sparsity(rep.signal, threshold));
    Signal unpol = rep.signal;
    unpol.U = rep.unpolished_U;
    j["unpolished_active_entries"] = sparsity(unpol, threshold).active_entries;
  }
  return j;
}

int exit_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return kExitOk;
    case SolveStatus::kInfeasible: return kExitInfeasible;
    default: return kExitError;
  }
}

CommandResult error_result(const std::string& command, const std::string& code,
                           const std::string& message) {
  CommandResult r;
  r.exit_code = kExitError;
  r.document = base_document(command);
  r.document["status"] = "error";
  r.document["error"] = {{"code", code}, {"message", message}};
  return r;
}

template <typename F>
CommandResult guarded(const std::string& command, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return error_result(command, to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_result(command, "Internal", e.what());
  }
}

std::string trajectory_csv(const Discretized& dp, const Signal& s, const Eigen::VectorXd& x0) {
  return write_signal(s, simulate_discrete(dp, s, x0));
}

}  // namespace

std::string render(const json& doc) { return doc.dump(2) + "\n"; }

json strip_timing(json doc) {
  doc.erase("wall_time_s");
  return doc;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
    if (pos == 0 || pos != item.size()) {
      throw Error(ErrorCode::kParseError, "cannot parse list entry '" + item + "'", "list");
    }
    out.push_back(v);
  }
  return out;
}

CommandResult cmd_solve(const RunConfig& cfg) {
  return guarded("solve", [&] {
    const auto t0 = Clock::now();
    const Problem p = read_problem_file(cfg.input);
    const Discretized dp = build_reachability(p);
    const SolveReport rep = solve_discretized(dp, WeightMatrix(p.weights), p.x0.norm(), cfg.solve);

    CommandResult r;
    r.document = base_document("solve");
    r.document["problem"] = problem_summary(p);
    r.document.update(report_json(rep, cfg.solve.sparsity_threshold));
    if (rep.status == SolveStatus::kOptimal) r.csv = trajectory_csv(dp, rep.signal, p.x0);
    r.document["wall_time_s"] = seconds_since(t0);
    r.exit_code = exit_for(rep.status);
    return r;
  });
}

CommandResult cmd_compare(const RunConfig& cfg) {
  return guarded("compare", [&] {
    const auto t0 = Clock::now();
    const Problem p = read_problem_file(cfg.input);
    const Discretized dp = build_reachability(p);
    const WeightMatrix w(p.weights);
    const SolveReport rep = solve_discretized(dp, w, p.x0.norm(), cfg.solve);

    CommandResult r;
    r.document = base_document("compare");
    r.document["problem"] = problem_summary(p);
    r.document["l1"] = report_json(rep, cfg.solve.sparsity_threshold);
    if (rep.status == SolveStatus::kOptimal) r.csv = trajectory_csv(dp, rep.signal, p.x0);

    json l2;
    try {
      const BaselineResult base = min_energy_baseline(dp);
      l2["status"] = "ok";
      l2["bound_violation"] = base.bound_violation;
      l2["energy"] = num(dp.h * base.signal.U.squaredNorm());
      l2["l1_objective"] = num(l1_objective(base.signal.U, w, dp.h));
      l2["max_abs"] = num(base.signal.U.size() ? base.signal.U.cwiseAbs().maxCoeff() : 0.0);
      l2["terminal_error"] = num((dp.c + dp.PhiN * base.signal.U).norm());
      l2["sparsity"] = sparsity_json(sparsity(base.signal, cfg.solve.sparsity_threshold));
      r.baseline_csv = trajectory_csv(dp, base.signal, p.x0);
    } catch (const Error& e) {
      l2["status"] = e.code() == ErrorCode::kRankDeficient ? "rank_deficient" : to_string(e.code());
      l2["message"] = e.what();
    }
    r.document["l2"] = l2;
    r.document["wall_time_s"] = seconds_since(t0);
    r.exit_code = exit_for(rep.status);
    return r;
  });
}

CommandResult cmd_sweep(const RunConfig& cfg) {
  return guarded("sweep", [&] {
    const auto t0 = Clock::now();
    const Problem base = read_problem_file(cfg.input);
    const bool over_T = !cfg.sweep_T.empty();
    if (over_T == !cfg.sweep_scale.empty()) {
      throw Error(ErrorCode::kParseError,
                  "sweep needs exactly one of --sweep-T or --sweep-scale", "sweep");
    }
    const std::vector<double>& grid = over_T ? cfg.sweep_T : cfg.sweep_scale;
    const double h = base.h();

    CommandResult r;
    r.document = base_document("sweep");
    r.document["problem"] = problem_summary(base);
    r.document["parameter"] = over_T ? "T" : "weight_scale";
    r.document["h"] = num(h);
    json rows = json::array();
    bool monotone = true;
    std::optional<std::pair<double, double>> last_optimal;  // (T, J1)

    for (double g : grid) {
      json row;
      row[over_T ? "T" : "scale"] = num(g);
      try {
        Problem p = base;
        if (over_T) {
          const double steps = g / h;
          const double rounded = std::round(steps);
          if (!(g > 0.0) || std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
            throw Error(ErrorCode::kInvalidGrid,
                        "T is not a positive multiple of the step h", "T");
          }
          p.T = g;
          p.N = static_cast<Index>(rounded);
        } else {
          p.weights = base.weights * g;
        }
        validate_problem(p);
        const SolveReport rep = solve(p, cfg.solve);
        row["N"] = p.N;
        row["status"] = to_string(rep.status);
        row["objective"] = num(rep.objective);
        row["iterations"] = rep.iterations;
        if (rep.status == SolveStatus::kOptimal) {
          const SparsityReport sp = sparsity(rep.signal, cfg.solve.sparsity_threshold);
          row["support_measure"] = num(sp.support_measure);
          row["hands_off_ratio"] = num(sp.hands_off_ratio);
          row["monotonicity_violation"] = false;
          if (over_T && last_optimal && g > last_optimal->first &&
              rep.objective > last_optimal->second + 1e-7 * (1.0 + std::abs(last_optimal->second))) {
            row["monotonicity_violation"] = true;
            monotone = false;
          }
          if (over_T) last_optimal = {g, rep.objective};
        } else {
          row["support_measure"] = nullptr;
          row["hands_off_ratio"] = nullptr;
        }
      } catch (const Error& e) {
        row["status"] = "error";
        row["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
      }
      rows.push_back(row);
    }
    r.document["rows"] = rows;
    if (over_T) r.document["objective_nonincreasing"] = monotone;
    r.document["wall_time_s"] = seconds_since(t0);
    r.exit_code = kExitOk;
    return r;
  });
}

CommandResult cmd_verify_equivalence(const RunConfig& cfg) {
  return guarded("verify-equivalence", [&] {
    const auto t0 = Clock::now();
    const Problem p = read_problem_file(cfg.input);
    CommandResult r;
    r.document = base_document("verify-equivalence");
    r.document["problem"] = problem_summary(p);
    EquivalenceReport rep;
    try {
      rep = verify_equivalence(p, cfg.solve);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
      r.document["status"] = "infeasible";
      r.document["wall_time_s"] = seconds_since(t0);
      r.exit_code = kExitInfeasible;
      return r;
    }
    r.document["status"] = to_string(rep.solve_status);
    r.document["polish_applied"] = rep.polish_applied;
    r.document["l1_support"] = rep.l1_support;
    r.document["unpolished_l1_support"] = rep.unpolished_l1_support;
    r.document["l0_support"] = rep.l0_support;
    r.document["l1_objective"] = num(rep.l1_objective);
    r.document["l1_weighted_l0"] = num(rep.l1_weighted_l0);
    r.document["l0_certified_objective"] = num(rep.l0_certified_objective);
    r.document["l0_witness_l1_objective"] = num(rep.l0_witness_l1_objective);
    r.document["l1_support_set"] = support_json(rep.l1_support_set);
    r.document["l1_support_is_witness"] = rep.l1_support_is_witness;
    r.document["non_normal_witness"] = rep.non_normal_witness;
    json wit = json::array();
    for (const Support& s : rep.witness_supports) wit.push_back(support_json(s));
    r.document["witness_supports"] = wit;
    r.document["agree"] = rep.agree;
    r.document["wall_time_s"] = seconds_since(t0);
    if (rep.solve_status != SolveStatus::kOptimal) {
      r.exit_code = kExitError;
    } else {
      r.exit_code = rep.agree ? kExitOk : kExitDisagree;
    }
    return r;
  });
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  return guarded("simulate", [&] {
    const auto t0 = Clock::now();
    if (cfg.substeps < 1) throw Error(ErrorCode::kInvalidGrid, "substeps must be >= 1", "substeps");
    const Problem p = read_problem_file(cfg.input);
    const Discretized dp = build_reachability(p);
    const SolveReport rep = solve_discretized(dp, WeightMatrix(p.weights), p.x0.norm(), cfg.solve);

    CommandResult r;
    r.document = base_document("simulate");
    r.document["problem"] = problem_summary(p);
    r.document["substeps"] = cfg.substeps;
    r.document.update(report_json(rep, cfg.solve.sparsity_threshold));
    if (rep.status == SolveStatus::kOptimal) {
      const Trajectory discrete = simulate_discrete(dp, rep.signal, p.x0);
      const Trajectory fine = simulate_continuous(p.plant, rep.signal, p.x0, cfg.substeps);
      const Trajectory rk4 = simulate_rk4(p.plant, rep.signal, p.x0, cfg.substeps);
      // Grid samples of the fine flow against the discrete recursion.
      double grid_gap = 0.0;
      for (Index k = 0; k <= p.N; ++k) {
        grid_gap = std::max(grid_gap,
                            (fine.col(k * cfg.substeps) - discrete.col(k)).cwiseAbs().maxCoeff());
      }
      r.document["terminal_state_discrete"] = vec(discrete.col(p.N));
      r.document["terminal_state_continuous"] = vec(fine.col(fine.cols() - 1));
      r.document["terminal_state_rk4"] = vec(rk4.col(rk4.cols() - 1));
      r.document["max_grid_discrepancy"] = num(grid_gap);
      r.document["rk4_terminal_discrepancy"] =
          num((rk4.col(rk4.cols() - 1) - fine.col(fine.cols() - 1)).norm());
      r.csv = write_fine_signal(rep.signal, fine, cfg.substeps);
    }
    r.document["wall_time_s"] = seconds_since(t0);
    r.exit_code = exit_for(rep.status);
    return r;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Maximum hands-off (sparsest) control for LTI plants via L1 optimization"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string sweep_T, sweep_scale;
  bool no_polish = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "problem file (JSON)")->required();
    sub->add_option("--out", cfg.out, "result document path (default: stdout)");
    sub->add_option("--csv", cfg.csv, "trajectory CSV path");
    sub->add_option("--opt-tol", cfg.solve.opt_tol, "relative optimality tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--feas-tol", cfg.solve.feas_tol, "terminal-state tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threshold", cfg.solve.sparsity_threshold, "sparsity threshold")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-polish", no_polish, "skip vertex polishing");
  };
  auto* s_solve = app.add_subcommand("solve", "solve the L1 program and write the signal");
  auto* s_compare = app.add_subcommand("compare", "contrast with the minimum-energy control");
  auto* s_sweep = app.add_subcommand("sweep", "sweep the horizon or the weight scale");
  auto* s_verify = app.add_subcommand("verify-equivalence",
                                      "compare the L1 support with an exhaustive L0 search");
  auto* s_sim = app.add_subcommand("simulate", "re-simulate the solution in continuous time");
  for (auto* sub : {s_solve, s_compare, s_sweep, s_verify, s_sim}) add_common(sub);
  s_sweep->add_option("--sweep-T", sweep_T, "comma-separated horizons (fixed step h)");
  s_sweep->add_option("--sweep-scale", sweep_scale, "comma-separated weight scalings");
  s_sim->add_option("--substeps", cfg.substeps, "fine steps per grid interval")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, ee;
    const int code = app.exit(e, o, ee);
    out << o.str();
    err << ee.str();
    return code == 0 ? kExitOk : kExitError;
  }
  cfg.solve.polish = !no_polish;
  cfg.subcommand = app.get_subcommands().front()->get_name();

  CommandResult result;
  try {
    if (!sweep_T.empty()) cfg.sweep_T = parse_list(sweep_T);
    if (!sweep_scale.empty()) cfg.sweep_scale = parse_list(sweep_scale);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  if (cfg.subcommand == "solve") result = cmd_solve(cfg);
  else if (cfg.subcommand == "compare") result = cmd_compare(cfg);
  else if (cfg.subcommand == "sweep") result = cmd_sweep(cfg);
  else if (cfg.subcommand == "verify-equivalence") result = cmd_verify_equivalence(cfg);
  else result = cmd_simulate(cfg);

  if (result.exit_code == kExitError && result.document.contains("error")) {
    err << "error: " << result.document["error"]["message"].get<std::string>() << "\n";
  }
  try {
    if (cfg.out.empty()) {
      out << render(result.document);
    } else {
      write_text_file(cfg.out, render(result.document));
    }
    if (!cfg.csv.empty() && !result.csv.empty()) write_text_file(cfg.csv, result.csv);
    if (!cfg.csv.empty() && !result.baseline_csv.empty()) {
      std::filesystem::path base(cfg.csv);
      base.replace_extension(".l2.csv");
      write_text_file(base, result.baseline_csv);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return result.exit_code;
}

}  // namespace handsoff::cli
