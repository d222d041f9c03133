#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "digest.hpp"
#include "sweep.hpp"
#include "vlsplit/errors.hpp"
#include "vlsplit/orchestrator.hpp"
#include "vlsplit/scenario_io.hpp"

namespace vlsplit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Input problems that map to exit code 2.
struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw BadInput(std::string(kThreadsEnv) + " must be a positive integer");
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BadInput("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw BadInput(path.string() + ": " + e.what());
  }
}

Scenario read_scenario(const fs::path& path) {
  const json doc = read_json(path);
  try {
    return scenario_from_json(doc);
  } catch (const json::exception& e) {
    throw BadInput(path.string() + ": " + e.what());
  }
}

void write_output(const std::string& target, const std::string& text, std::ostream& out) {
  if (target.empty() || target == "-") {
    out << text;
    return;
  }
  std::ofstream f(target, std::ios::binary);
  if (!f) throw BadInput("cannot write " + target);
  f << text;
  if (!f) throw BadInput("cannot write " + target);
}

json trace_json(const AoTrace& t) {
  json rounds = json::array();
  for (const AoRound& r : t.rounds) {
    rounds.push_back({{"round", r.round},
                      {"weighted_total", r.weighted_total},
                      {"sp1_residual", r.sp1_residual},
                      {"sp2_residual", r.sp2_residual},
                      {"sp1_converged", r.sp1_converged},
                      {"sp2_converged", r.sp2_converged},
                      {"sp1_ms", r.sp1_ms},
                      {"sp2_ms", r.sp2_ms}});
  }
  return {{"converged", t.converged}, {"message", t.message}, {"rounds", rounds}};
}

struct CommonArgs {
  int threads = 0;
  std::uint64_t seed = 1;
  CLI::Option* seed_option = nullptr;
};

struct GenerateArgs {
  std::string params_file, output;
  int vehicles = 0, rsus = 0;
  double arena = 0.0;
  bool literal_payload = false;
  CLI::Option *vehicles_opt = nullptr, *rsus_opt = nullptr, *arena_opt = nullptr;
};

int cmd_generate(const GenerateArgs& a, const CommonArgs& c, std::ostream& out) {
  ScenarioParams params;
  if (!a.params_file.empty()) {
    const json doc = read_json(a.params_file);
    try {
      params = params_from_json(doc);
    } catch (const json::exception& e) {
      throw BadInput(a.params_file + ": " + e.what());
    }
  }
  if (a.vehicles_opt->count()) params.vehicle_count = a.vehicles;
  if (a.rsus_opt->count()) params.rsu_count = a.rsus;
  if (a.arena_opt->count()) params.arena_side = a.arena;
  if (a.literal_payload) params.paper_literal_payload = true;
  if (c.seed_option->count()) params.seed = c.seed;
  params.validate();
  const Scenario s = generate_scenario(params);
  save_scenario(s, a.output);
  out << "sha256:" << sha256_file(a.output) << "  " << a.output << '\n';
  return kOk;
}

struct SolveArgs {
  std::string scenario, output = "-", method = "proposed";
  double wt = 0.5;
};

int cmd_solve(const SolveArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  const Scenario s = read_scenario(a.scenario);
  const Method method = parse_method(a.method);
  const Weights w = Weights::from_time(a.wt);
  MethodResult r;
  const SweepRow row = evaluate(s, a.wt, method, baseline_seed(c.seed, s.seed), {}, &r);
  if (!row.has_result() && row.status.rfind("infeasible", 0) != 0) {
    err << "solve failed: " << row.status << '\n';
    return kFailure;
  }
  json doc = {{"method", to_string(method)},
              {"wt", w.time},
              {"we", w.energy},
              {"seed", c.seed},
              {"status", row.status},
              {"converged", r.converged},
              {"allocation", to_json(r.allocation)},
              {"cost", to_json(r.cost)},
              {"completion", {{"objective_time_s", r.completion.objective_time}, {"end_to_end_s", r.completion.end_to_end}}},
              {"energy_J", r.cost.total_energy()},
              {"wall_ms", row.wall_ms},
              {"trace", trace_json(r.trace)}};
  write_output(a.output, doc.dump(2) + "\n", out);
  if (!row.has_result()) {
    err << row.status << '\n';
    return kFailure;
  }
  if (!r.converged) {
    err << "best-effort result: " << (r.trace.message.empty() ? "a sub-solver did not converge" : r.trace.message)
        << '\n';
    return kNotConverged;
  }
  return kOk;
}

struct SweepArgs {
  std::string config, out_dir;
};

int cmd_sweep(const SweepArgs& a, const CommonArgs& c, std::ostream& out, std::ostream& err) {
  SweepConfig cfg = sweep_config_from_json(read_json(a.config));
  if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw BadInput("cannot create " + cfg.output_dir.string() + ": " + ec.message());

  const auto rows = run_sweep(cfg, resolve_threads(c.threads), c.seed);
  std::ostringstream rows_csv, summary_csv;
  write_rows_csv(rows_csv, rows);
  write_summary_csv(summary_csv, summarize(rows));
  const fs::path rows_path = cfg.output_dir / "sweep.csv", summary_path = cfg.output_dir / "sweep_summary.csv";
  write_output(rows_path.string(), rows_csv.str(), out);
  write_output(summary_path.string(), summary_csv.str(), out);

  const auto ok = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
  out << rows_path.string() << ": " << rows.size() << " rows, " << ok << " ok\n" << summary_path.string() << '\n';
  for (const SweepRow& r : rows) {
    if (!r.ok()) err << "wt=" << format_double(r.wt) << " seed=" << r.seed << " " << to_string(r.method) << ": " << r.status << '\n';
  }
  return 10 * ok >= 9 * static_cast<long>(rows.size()) ? kOk : kFailure;
}

struct CompareArgs {
  std::string scenario, output = "-";
  double wt = 0.5;
};

int cmd_compare(const CompareArgs& a, const CommonArgs& c, std::ostream& out) {
  const Scenario s = read_scenario(a.scenario);
  const std::vector<Method> methods{Method::proposed, Method::rlor, Method::rrol};
  std::vector<SweepRow> rows(methods.size());
  const std::uint64_t seed = baseline_seed(c.seed, s.seed);
  const int workers = std::min<int>(resolve_threads(c.threads), static_cast<int>(methods.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = static_cast<std::size_t>(t); i < methods.size(); i += static_cast<std::size_t>(workers)) {
        rows[i] = evaluate(s, a.wt, methods[i], seed, {});
      }
    });
  }
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "method,weighted_total,objective_time_s,end_to_end_s,energy_J,ao_iters,wall_ms,status,relative_to_proposed\n";
  for (const SweepRow& r : rows) {
    const double rel = rows[0].has_result() && r.has_result() ? r.weighted_total / rows[0].weighted_total - 1.0
                                                               : std::numeric_limits<double>::quiet_NaN();
    csv << to_string(r.method) << ',' << format_double(r.weighted_total) << ',' << format_double(r.objective_time)
        << ',' << format_double(r.end_to_end) << ',' << format_double(r.energy) << ',' << r.ao_iters << ','
        << format_double(r.wall_ms) << ',' << r.status << ',' << format_double(rel) << '\n';
  }
  write_output(a.output, csv.str(), out);
  if (std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.has_result(); })) return kFailure;
  if (std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); })) return kNotConverged;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer split and resource allocation for LLM inference shared by vehicles and roadside units",
               "vlsplit"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs common;
  app.add_option("--threads", common.threads, "Worker threads (default: $VLSPLIT_THREADS, else all cores)")
      ->check(CLI::Range(1, 4096));
  common.seed_option =
      app.add_option("--seed", common.seed, "Scenario seed for generate; seed of the random baselines otherwise");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a random scenario and print its SHA-256");
  generate->add_option("--params", gen.params_file, "JSON file with scenario parameters")->check(CLI::ExistingFile);
  gen.vehicles_opt = generate->add_option("--vehicles", gen.vehicles, "Number of vehicles");
  gen.rsus_opt = generate->add_option("--rsus", gen.rsus, "Number of roadside units");
  gen.arena_opt = generate->add_option("--arena", gen.arena, "Side of the square area, m");
  generate->add_flag("--paper-literal-payload", gen.literal_payload,
                     "Uplink payload in bits equals the token count instead of the activation size");
  generate->add_option("-o,--output", gen.output, "Scenario file to write")->required();

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one scenario with one method");
  solve_cmd->add_option("scenario", solve.scenario, "Scenario JSON")->required();
  solve_cmd->add_option("--wt", solve.wt, "Delay weight in [0, 1]; the energy weight is 1 - wt")
      ->check(CLI::Range(0.0, 1.0));
  solve_cmd->add_option("--method", solve.method, "proposed, rlor or rrol")
      ->check(CLI::IsMember({"proposed", "rlor", "rrol"}));
  solve_cmd->add_option("-o,--output", solve.output, "Result JSON (default: stdout)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a weight sweep and write results and summary CSV");
  sweep_cmd->add_option("config", sweep.config, "Sweep config JSON")->required();
  sweep_cmd->add_option("--out-dir", sweep.out_dir, "Output directory (overrides output_dir in the config)");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Run all methods on one scenario and print a CSV table");
  compare_cmd->add_option("scenario", compare.scenario, "Scenario JSON")->required();
  compare_cmd->add_option("--wt", compare.wt, "Delay weight in [0, 1]")->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("-o,--output", compare.output, "CSV file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (*generate) return cmd_generate(gen, common, out);
    if (*solve_cmd) return cmd_solve(solve, common, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep, common, out, err);
    if (*compare_cmd) return cmd_compare(compare, common, out);
  } catch (const BadInput& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kInvalidInput;
}

}  // namespace vlsplit::cli
