#include "sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>
#include <type_traits>

#include "vlsplit/errors.hpp"
#include "vlsplit/scenario_io.hpp"

namespace vlsplit::cli {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

void SweepConfig::validate() const {
  if (time_weights.empty()) throw InvalidArgument("sweep needs at least one wt value");
  if (seeds.empty()) throw InvalidArgument("sweep needs at least one seed");
  if (methods.empty()) throw InvalidArgument("sweep needs at least one method");
  for (double wt : time_weights) {
    if (!(wt >= 0.0 && wt <= 1.0)) throw InvalidArgument("wt values must lie in [0, 1]");
  }
  params.validate();
}

AoOptions solver_options_from_json(const json& doc, AoOptions o) {
  if (!doc.is_object()) throw InvalidArgument("solver options must be a JSON object");
  auto read = [&](const char* key, auto& out) {
    if (doc.contains(key)) out = doc.at(key).get<std::decay_t<decltype(out)>>();
  };
  read("ao_tolerance", o.relative_tolerance);
  read("ao_max_rounds", o.max_rounds);
  read("sqp_kkt_tolerance", o.sqp.kkt_tolerance);
  read("sqp_max_iterations", o.sqp.max_iterations);
  read("frac_tolerance", o.frac.tolerance);
  read("frac_max_outer_iterations", o.frac.max_outer_iterations);
  read("frac_damping", o.frac.damping);
  if (!(o.relative_tolerance > 0.0) || o.max_rounds < 1) throw InvalidArgument("invalid AO options");
  if (!(o.sqp.kkt_tolerance > 0.0) || o.sqp.max_iterations < 1) throw InvalidArgument("invalid SQP options");
  if (!(o.frac.tolerance > 0.0) || o.frac.max_outer_iterations < 1 || !(o.frac.damping > 0.0 && o.frac.damping <= 1.0)) {
    throw InvalidArgument("invalid fractional solver options");
  }
  return o;
}

SweepConfig sweep_config_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("sweep config must be a JSON object");
  SweepConfig c;
  try {
    if (doc.contains("wt")) c.time_weights = doc.at("wt").get<std::vector<double>>();
    if (doc.contains("seeds")) c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("methods")) {
      c.methods.clear();
      for (const auto& m : doc.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (doc.contains("params")) c.params = params_from_json(doc.at("params"));
    if (doc.contains("solver")) c.solver = solver_options_from_json(doc.at("solver"));
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t baseline_seed(std::uint64_t global_seed, std::uint64_t scenario_seed) {
  return splitmix64(splitmix64(global_seed) ^ scenario_seed);
}

std::string run_status(const Scenario& scenario, const MethodResult& result) {
  const std::string violation = feasibility_violation(scenario, result.allocation);
  if (!violation.empty()) return "infeasible: " + violation;
  return result.converged ? "ok" : "nonconverged";
}

SweepRow evaluate(const Scenario& s, double wt, Method method, std::uint64_t seed, const AoOptions& options,
                  MethodResult* full) {
  SweepRow row;
  row.wt = wt;
  row.seed = s.seed;
  row.method = method;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    MethodResult r = run_method(method, s, Weights::from_time(wt), seed, options);
    row.weighted_total = r.cost.weighted_total;
    row.objective_time = r.completion.objective_time;
    row.end_to_end = r.completion.end_to_end;
    row.energy = r.cost.total_energy();
    row.ao_iters = r.trace.iterations();
    row.status = run_status(s, r);
    if (full) *full = std::move(r);
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<SweepRow> run_sweep(const SweepConfig& config, int threads, std::uint64_t global_seed) {
  config.validate();
  std::vector<double> wts = config.time_weights;
  std::vector<std::uint64_t> seeds = config.seeds;
  std::vector<Method> methods = config.methods;
  std::sort(wts.begin(), wts.end());
  wts.erase(std::unique(wts.begin(), wts.end()), wts.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  std::sort(methods.begin(), methods.end(), [](Method a, Method b) { return to_string(a) < to_string(b); });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  std::vector<SweepRow> rows;
  for (double wt : wts)
    for (std::uint64_t seed : seeds)
      for (Method m : methods) {
        SweepRow row;
        row.wt = wt;
        row.seed = seed;
        row.method = m;
        rows.push_back(row);
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& row = rows[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        ScenarioParams params = config.params;
        params.seed = row.seed;
        const Scenario s = generate_scenario(params);
        const std::uint64_t seed = row.seed;
        row = evaluate(s, row.wt, row.method, baseline_seed(global_seed, row.seed), config.solver);
        row.seed = seed;
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<double, std::string>, std::pair<SummaryRow, int>> groups;
  for (const SweepRow& r : rows) {
    auto& [g, used] = groups[{r.wt, to_string(r.method)}];
    g.wt = r.wt;
    g.method = r.method;
    ++g.rows;
    if (r.ok()) ++g.ok_rows;
    if (!r.has_result()) continue;
    ++used;
    g.weighted_total += r.weighted_total;
    g.objective_time += r.objective_time;
    g.end_to_end += r.end_to_end;
    g.energy += r.energy;
    g.ao_iters += r.ao_iters;
    g.wall_ms += r.wall_ms;
  }
  std::vector<SummaryRow> out;
  for (auto& [key, entry] : groups) {
    auto& [g, used] = entry;
    const double d = used > 0 ? static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
    g.weighted_total /= d;
    g.objective_time /= d;
    g.end_to_end /= d;
    g.energy /= d;
    g.ao_iters /= d;
    g.wall_ms /= d;
    out.push_back(g);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "wt,seed,method,weighted_total,objective_time_s,end_to_end_s,energy_J,ao_iters,wall_ms,status\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.wt) << ',' << r.seed << ',' << to_string(r.method) << ',' << format_double(r.weighted_total)
        << ',' << format_double(r.objective_time) << ',' << format_double(r.end_to_end) << ','
        << format_double(r.energy) << ',' << r.ao_iters << ',' << format_double(r.wall_ms) << ','
        << csv_field(r.status) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "wt,method,rows,ok_rows,weighted_total,objective_time_s,end_to_end_s,energy_J,ao_iters,wall_ms\n";
  for (const SummaryRow& r : rows) {
    out << format_double(r.wt) << ',' << to_string(r.method) << ',' << r.rows << ',' << r.ok_rows << ','
        << format_double(r.weighted_total) << ',' << format_double(r.objective_time) << ','
        << format_double(r.end_to_end) << ',' << format_double(r.energy) << ',' << format_double(r.ao_iters) << ','
        << format_double(r.wall_ms) << '\n';
  }
}

}  // namespace vlsplit::cli
