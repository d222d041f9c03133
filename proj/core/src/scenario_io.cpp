#include "vlsplit/scenario_io.hpp"

#include <fstream>

#include "vlsplit/errors.hpp"

namespace vlsplit {

using nlohmann::json;

namespace {

json hw_json(const VehicleHardware& hw) {
  return {{"f_max", hw.f_max}, {"cores", hw.cores}, {"flops_per_cycle", hw.flops_per_cycle},
          {"kappa", hw.kappa}, {"p_max", hw.p_max}};
}

json hw_json(const RsuHardware& hw) {
  return {{"f_max", hw.f_max}, {"cores", hw.cores}, {"flops_per_cycle", hw.flops_per_cycle},
          {"kappa", hw.kappa}, {"b_max", hw.b_max}};
}

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

VehicleHardware vehicle_hw_from(const json& doc, VehicleHardware hw = {}) {
  read_opt(doc, "f_max", hw.f_max);
  read_opt(doc, "cores", hw.cores);
  read_opt(doc, "flops_per_cycle", hw.flops_per_cycle);
  read_opt(doc, "kappa", hw.kappa);
  read_opt(doc, "p_max", hw.p_max);
  return hw;
}

RsuHardware rsu_hw_from(const json& doc, RsuHardware hw = {}) {
  read_opt(doc, "f_max", hw.f_max);
  read_opt(doc, "cores", hw.cores);
  read_opt(doc, "flops_per_cycle", hw.flops_per_cycle);
  read_opt(doc, "kappa", hw.kappa);
  read_opt(doc, "b_max", hw.b_max);
  return hw;
}

json llm_json(const LLMProfile& llm) {
  return {{"hidden_size", llm.hidden_size}, {"layer_count", llm.layer_count}, {"batch_size", llm.batch_size}};
}

LLMProfile llm_from(const json& doc, LLMProfile llm = {}) {
  read_opt(doc, "hidden_size", llm.hidden_size);
  read_opt(doc, "layer_count", llm.layer_count);
  read_opt(doc, "batch_size", llm.batch_size);
  return llm;
}

json point_json(const Point& p) { return json::array({p.x, p.y}); }

Point point_from(const json& doc) {
  if (!doc.is_array() || doc.size() != 2) throw InvalidArgument("position must be [x, y]");
  return {doc[0].get<double>(), doc[1].get<double>()};
}

}  // namespace

json to_json(const ScenarioParams& p) {
  return {{"arena_side", p.arena_side},
          {"vehicle_count", p.vehicle_count},
          {"rsu_count", p.rsu_count},
          {"token_min", p.token_min},
          {"token_max", p.token_max},
          {"llm", llm_json(p.llm)},
          {"vehicle", hw_json(p.vehicle)},
          {"rsu", hw_json(p.rsu)},
          {"noise_psd", p.noise_psd},
          {"shadow_sigma_db", p.shadow_sigma_db},
          {"min_distance", p.min_distance},
          {"bits_per_activation", p.bits_per_activation},
          {"paper_literal_payload", p.paper_literal_payload},
          {"seed", p.seed}};
}

ScenarioParams params_from_json(const json& doc, ScenarioParams p) {
  if (!doc.is_object()) throw InvalidArgument("scenario params must be a JSON object");
  try {
    read_opt(doc, "arena_side", p.arena_side);
    read_opt(doc, "vehicle_count", p.vehicle_count);
    read_opt(doc, "rsu_count", p.rsu_count);
    read_opt(doc, "token_min", p.token_min);
    read_opt(doc, "token_max", p.token_max);
    if (doc.contains("llm")) p.llm = llm_from(doc.at("llm"), p.llm);
    if (doc.contains("vehicle")) p.vehicle = vehicle_hw_from(doc.at("vehicle"), p.vehicle);
    if (doc.contains("rsu")) p.rsu = rsu_hw_from(doc.at("rsu"), p.rsu);
    read_opt(doc, "noise_psd", p.noise_psd);
    read_opt(doc, "shadow_sigma_db", p.shadow_sigma_db);
    read_opt(doc, "min_distance", p.min_distance);
    read_opt(doc, "bits_per_activation", p.bits_per_activation);
    read_opt(doc, "paper_literal_payload", p.paper_literal_payload);
    read_opt(doc, "seed", p.seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario params: ") + e.what());
  }
  return p;
}

json to_json(const Scenario& s) {
  json vehicles = json::array();
  for (const auto& v : s.vehicles) {
    vehicles.push_back({{"position", point_json(v.position)},
                        {"token_count", v.token_count},
                        {"payload_bits", v.payload_bits},
                        {"hardware", hw_json(v.hardware)}});
  }
  json rsus = json::array();
  for (const auto& r : s.rsus) {
    rsus.push_back({{"position", point_json(r.position)}, {"hardware", hw_json(r.hardware)}});
  }
  json gains = json::array();
  for (Eigen::Index n = 0; n < s.gains.rows(); ++n) {
    json row = json::array();
    for (Eigen::Index m = 0; m < s.gains.cols(); ++m) row.push_back(s.gains(n, m));
    gains.push_back(std::move(row));
  }
  return {{"params", to_json(s.params)}, {"vehicles", std::move(vehicles)}, {"rsus", std::move(rsus)},
          {"gains", std::move(gains)},   {"noise_psd", s.noise_psd},      {"association", s.association},
          {"llm", llm_json(s.llm)},      {"seed", s.seed}};
}

Scenario scenario_from_json(const json& doc) {
  Scenario s;
  try {
    for (const char* key : {"params", "vehicles", "rsus", "gains", "association", "llm", "seed"}) {
      if (!doc.contains(key)) throw InvalidArgument(std::string("scenario file is missing key '") + key + "'");
    }
    s.params = params_from_json(doc.at("params"));
    for (const auto& v : doc.at("vehicles")) {
      VehicleState vs;
      vs.position = point_from(v.at("position"));
      vs.token_count = v.at("token_count").get<std::int64_t>();
      vs.payload_bits = v.at("payload_bits").get<double>();
      vs.hardware = vehicle_hw_from(v.at("hardware"));
      s.vehicles.push_back(vs);
    }
    for (const auto& r : doc.at("rsus")) {
      s.rsus.push_back({point_from(r.at("position")), rsu_hw_from(r.at("hardware"))});
    }
    const auto& g = doc.at("gains");
    s.gains.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(s.rsus.size()));
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (g[n].size() != s.rsus.size()) throw InvalidArgument("gain row length must equal RSU count");
      for (std::size_t m = 0; m < g[n].size(); ++m) {
        s.gains(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = g[n][m].get<double>();
      }
    }
    s.noise_psd = doc.contains("noise_psd") ? doc.at("noise_psd").get<double>() : s.params.noise_psd;
    s.association = doc.at("association").get<std::vector<int>>();
    s.llm = llm_from(doc.at("llm"));
    s.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed scenario: ") + e.what());
  }
  s.validate();
  return s;
}

json to_json(const Allocation& a) {
  return {{"layers_local", a.layers_local},
          {"power", a.power},
          {"bandwidth", a.bandwidth},
          {"vehicle_frequency", a.vehicle_frequency},
          {"rsu_frequency", a.rsu_frequency}};
}

Allocation allocation_from_json(const json& doc) {
  try {
    Allocation a;
    a.layers_local = doc.at("layers_local").get<std::vector<int>>();
    a.power = doc.at("power").get<std::vector<double>>();
    a.bandwidth = doc.at("bandwidth").get<std::vector<double>>();
    a.vehicle_frequency = doc.at("vehicle_frequency").get<std::vector<double>>();
    a.rsu_frequency = doc.at("rsu_frequency").get<std::vector<double>>();
    return a;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed allocation: ") + e.what());
  }
}

json to_json(const CostBreakdown& c) {
  return {{"local_time", c.local_time},
          {"local_energy", c.local_energy},
          {"comm_energy", c.comm_energy},
          {"vehicle_cost", c.vehicle_cost},
          {"remote_time", c.remote_time},
          {"remote_energy", c.remote_energy},
          {"rsu_cost", c.rsu_cost},
          {"total_time", c.total_time()},
          {"total_energy", c.total_energy()},
          {"weighted_total", c.weighted_total}};
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << to_json(scenario).dump(2) << '\n';
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace vlsplit
