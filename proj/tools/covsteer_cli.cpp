// Command line front end: solve a scenario once, run iterative risk
// allocation, validate a stored controller by Monte Carlo, compare two
// scenarios on common random numbers, or exercise the probability-law
// self-checks.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cs/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kInternalError = 4;

struct GlobalOpts {
  std::string out = "out";
  bool quiet = false;
  long samples = -1;   // <0: use the config value
  int64_t seed = -1;   // <0: use the config value
};

void apply_overrides(cs::ScenarioConfig& cfg, const GlobalOpts& g) {
  if (g.samples >= 0) cfg.validation.samples = g.samples;
  if (g.seed >= 0) cfg.validation.seed = static_cast<uint64_t>(g.seed);
}

int status_code(const cs::ControllerSolution& sol) {
  switch (sol.status) {
    case cs::conic::SolveStatus::Optimal: return kOk;
    case cs::conic::SolveStatus::Infeasible: return kInfeasible;
    default: return kInternalError;
  }
}

void print_summary(const cs::ScenarioRun& run, const GlobalOpts& g) {
  if (g.quiet) return;
  const auto& sol = run.solution;
  std::printf("%s: %s", run.config.name.c_str(), cs::conic::to_string(sol.status));
  if (sol.status == cs::conic::SolveStatus::Optimal) {
    std::printf(", objective %.6g, terminal logdet %.6g", sol.J, sol.VN);
    if (!run.ira_trace.empty())
      std::printf(", ira %zu iters (%s)", run.ira_trace.size(),
                  cs::to_string(run.ira_stop));
    if (run.validated)
      std::printf(", joint risk %.5f (se %.5f, %ld samples)", run.stats.joint_risk,
                  run.stats.joint_risk_se, run.stats.samples);
  } else if (!sol.message.empty()) {
    std::printf(" (%s)", sol.message.c_str());
  }
  std::printf("\n");
}

int run_one(const std::string& config_path, const GlobalOpts& g, bool force_uniform,
            bool validate) {
  cs::ScenarioConfig cfg = cs::load_scenario(config_path);
  apply_overrides(cfg, g);
  if (force_uniform) cfg.risk.mode = cs::RiskSettings::Mode::Uniform;
  cs::ScenarioRun run = cs::run_scenario(cfg, validate);
  const auto files =
      cs::write_outputs(run, (std::filesystem::path(g.out) / cfg.name).string());
  print_summary(run, g);
  if (!g.quiet)
    for (const auto& f : files) std::printf("  wrote %s\n", f.c_str());
  return status_code(run.solution);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance steering under joint chance constraints"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--out", g.out, "Output directory root");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.add_option("--samples", g.samples, "Override validation sample count");
  app.add_option("--seed", g.seed, "Override validation seed");

  std::string solve_cfg, ira_cfg, val_cfg, val_solution, cmp_a, cmp_b;
  int64_t laws_seed = 7;

  auto* solve = app.add_subcommand(
      "solve", "Solve a scenario once at its uniform risk allocation");
  solve->add_option("config", solve_cfg, "Scenario JSON")->required();
  bool solve_validate = false;
  solve->add_flag("--validate", solve_validate, "Run Monte Carlo validation");

  auto* ira = app.add_subcommand(
      "ira", "Optimize the risk allocation, then validate");
  ira->add_option("config", ira_cfg, "Scenario JSON")->required();

  auto* validate = app.add_subcommand(
      "validate", "Monte Carlo validation of a scenario (or stored solution)");
  validate->add_option("config", val_cfg, "Scenario JSON")->required();
  validate->add_option("--solution", val_solution,
                       "Validate this stored solution.json instead of re-solving");

  auto* compare = app.add_subcommand(
      "compare", "Run two scenarios and compare risks on common random numbers");
  compare->add_option("config_a", cmp_a, "First scenario JSON")->required();
  compare->add_option("config_b", cmp_b, "Second scenario JSON")->required();

  auto* laws = app.add_subcommand("laws", "Probability-law self-checks");
  laws->add_option("--laws-seed", laws_seed, "Seed for the law checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      return run_one(solve_cfg, g, /*force_uniform=*/true, solve_validate);
    }

    if (ira->parsed()) {
      cs::ScenarioConfig cfg = cs::load_scenario(ira_cfg);
      apply_overrides(cfg, g);
      if (std::holds_alternative<std::monostate>(cfg.problem.chance))
        throw std::invalid_argument("config: ira requires a chance constraint");
      cfg.risk.mode = cs::RiskSettings::Mode::Ira;
      cs::ScenarioRun run = cs::run_scenario(cfg, true);
      const auto files = cs::write_outputs(
          run, (std::filesystem::path(g.out) / cfg.name).string());
      print_summary(run, g);
      if (!g.quiet)
        for (const auto& f : files) std::printf("  wrote %s\n", f.c_str());
      return status_code(run.solution);
    }

    if (validate->parsed()) {
      cs::ScenarioConfig cfg = cs::load_scenario(val_cfg);
      apply_overrides(cfg, g);
      if (val_solution.empty()) return run_one(val_cfg, g, false, true);
      std::ifstream in(val_solution);
      if (!in) throw std::invalid_argument("config: cannot open '" + val_solution + "'");
      nlohmann::ordered_json sj;
      in >> sj;
      cs::ScenarioRun run;
      run.config = cfg;
      run.solution = cs::solution_from_json(cfg, sj);
      cs::RolloutOptions opt;
      opt.samples = cfg.validation.samples;
      opt.seed = cfg.validation.seed;
      opt.keep_trajectories = cfg.validation.keep_trajectories;
      run.stats = cs::rollout(cfg.problem, run.solution, opt);
      run.validated = true;
      const auto files = cs::write_outputs(
          run, (std::filesystem::path(g.out) / cfg.name).string());
      print_summary(run, g);
      if (!g.quiet)
        for (const auto& f : files) std::printf("  wrote %s\n", f.c_str());
      return kOk;
    }

    if (compare->parsed()) {
      cs::ScenarioConfig ca = cs::load_scenario(cmp_a);
      cs::ScenarioConfig cb = cs::load_scenario(cmp_b);
      apply_overrides(ca, g);
      apply_overrides(cb, g);
      // Common random numbers: force identical sampling settings.
      cb.validation.samples = ca.validation.samples;
      cb.validation.seed = ca.validation.seed;
      cs::ScenarioRun ra = cs::run_scenario(ca, true);
      cs::ScenarioRun rb = cs::run_scenario(cb, true);
      cs::write_outputs(ra, (std::filesystem::path(g.out) / ca.name).string());
      cs::write_outputs(rb, (std::filesystem::path(g.out) / cb.name).string());
      print_summary(ra, g);
      print_summary(rb, g);
      if (ra.solution.status != cs::conic::SolveStatus::Optimal)
        return status_code(ra.solution);
      if (rb.solution.status != cs::conic::SolveStatus::Optimal)
        return status_code(rb.solution);
      const cs::PairedDelta d = cs::paired_risk_delta(ra.stats, rb.stats);
      nlohmann::ordered_json cj;
      cj["generator"] = cs::kVersion;
      cj["scenario_a"] = ca.name;
      cj["scenario_b"] = cb.name;
      cj["joint_risk_a"] = ra.stats.joint_risk;
      cj["joint_risk_b"] = rb.stats.joint_risk;
      cj["risk_delta"] = d.delta;
      cj["risk_delta_se"] = d.se;
      cj["objective_a"] = ra.solution.J;
      cj["objective_b"] = rb.solution.J;
      std::filesystem::create_directories(g.out);
      const std::string path =
          (std::filesystem::path(g.out) / "compare.json").string();
      std::ofstream out(path, std::ios::binary);
      out << cj.dump(2) << "\n";
      if (!g.quiet)
        std::printf("risk delta %.5f (se %.5f)\n  wrote %s\n", d.delta, d.se,
                    path.c_str());
      return kOk;
    }

    if (laws->parsed()) {
      const auto checks =
          cs::probability_law_oracles(static_cast<uint64_t>(laws_seed));
      for (const auto& c : checks)
        std::printf("%-32s %s  margin %.3e%s%s\n", c.name.c_str(),
                    c.pass ? "PASS" : "FAIL", c.statistic,
                    c.detail.empty() ? "" : "  ", c.detail.c_str());
      return cs::all_pass(checks) ? kOk : kInternalError;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: invalid JSON: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternalError;
  }
  return kConfigError;
}
