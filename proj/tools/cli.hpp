#pragma once

// Command implementations behind the `gyrostat` binary. Each command turns a
// RunConfig into in-memory outputs; main() owns the file writing.

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gyrostat/bifurcation.hpp"
#include "gyrostat/contour.hpp"
#include "gyrostat/core.hpp"
#include "gyrostat/dynamics.hpp"
#include "gyrostat/io.hpp"
#include "gyrostat/parallel.hpp"
#include "gyrostat/rpm.hpp"

namespace gyrostat::cli {

using nlohmann::json;

inline constexpr const char* kConfigSchema = R"json({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "gyrostat run configuration",
  "type": "object",
  "additionalProperties": false,
  "required": ["params"],
  "properties": {
    "params": {
      "type": "object",
      "additionalProperties": false,
      "required": ["A", "lambda"],
      "properties": {
        "A": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number", "exclusiveMinimum": 0}},
        "lambda": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}}
      }
    },
    "k": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}},
    "resolution": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "integer", "minimum": 1}},
    "sigma_samples": {"type": "integer", "minimum": 2},
    "k3_slices": {"type": "array", "items": {"type": "number"}},
    "k1_max": {"type": "number", "exclusiveMinimum": 0},
    "region_samples": {"type": "integer", "minimum": 0},
    "seed": {"type": "integer", "minimum": 0},
    "threads": {"type": "integer", "minimum": 1},
    "state": {
      "type": "object",
      "additionalProperties": false,
      "required": ["omega", "nu"],
      "properties": {
        "omega": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}},
        "nu": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}}
      }
    },
    "t_end": {"type": "number", "exclusiveMinimum": 0},
    "tol": {"type": "number", "minimum": 1e-14, "maximum": 1e-3},
    "sigma_tol": {"type": "number", "minimum": 0},
    "rank_eps": {"type": "number", "exclusiveMinimum": 0},
    "states": {"type": "string"},
    "out": {"type": "string"},
    "svg": {"type": "string"}
  }
})json";

struct RunConfig {
  std::optional<GyrostatParams> params;
  std::optional<IntegralConstants> k;
  int nlat = 128;
  int nlon = 256;
  int sigma_samples = 256;
  std::vector<double> k3_slices{0.0};
  std::optional<double> k1_max;
  int region_samples = 200;
  std::uint64_t seed = 1;
  int threads = default_threads();
  std::optional<State> state;
  double t_end = 100.0;
  double tol = 1e-12;
  double sigma_tol = kDefaultSigmaTolerance;
  double rank_eps = kDefaultRankTolerance;
  std::string states;
  std::string out;
  std::string svg;

  const GyrostatParams& require_params() const {
    if (!params) throw InvalidInput("gyrostat parameters are required (config \"params\" or --A/--lambda)");
    return *params;
  }
  const IntegralConstants& require_k() const {
    if (!k) throw InvalidInput("integral constants are required (config \"k\" or --k)");
    return *k;
  }
  double k1_limit() const {
    return k1_max ? *k1_max : 100.0 * require_params().lambda().squaredNorm();
  }
};

// ---------------------------------------------------------------------------
// Schema validation with line numbers

namespace detail {

// Line of the location reached by following `path` keys through the source text.
inline int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    if (key.empty() || std::isdigit(static_cast<unsigned char>(key[0]))) continue;
    const std::size_t found = text.find('"' + key + '"', pos);
    if (found == std::string::npos) break;
    pos = found;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

inline std::string pointer(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += "/" + p;
  return out.empty() ? "/" : out;
}

class SchemaValidator {
 public:
  SchemaValidator(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  void validate(const json& value, const json& schema, std::vector<std::string>& path) const {
    if (schema.contains("type")) check_type(value, schema.at("type").get<std::string>(), path);
    if (value.is_number()) {
      const double v = value.get<double>();
      if (schema.contains("minimum") && v < schema.at("minimum").get<double>())
        fail(path, "must be >= " + schema.at("minimum").dump());
      if (schema.contains("maximum") && v > schema.at("maximum").get<double>())
        fail(path, "must be <= " + schema.at("maximum").dump());
      if (schema.contains("exclusiveMinimum") && v <= schema.at("exclusiveMinimum").get<double>())
        fail(path, "must be > " + schema.at("exclusiveMinimum").dump());
    }
    if (value.is_array()) {
      if (schema.contains("minItems") && value.size() < schema.at("minItems").get<std::size_t>())
        fail(path, "needs at least " + schema.at("minItems").dump() + " items");
      if (schema.contains("maxItems") && value.size() > schema.at("maxItems").get<std::size_t>())
        fail(path, "allows at most " + schema.at("maxItems").dump() + " items");
      if (schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          path.push_back(std::to_string(i));
          validate(value[i], schema.at("items"), path);
          path.pop_back();
        }
      }
    }
    if (value.is_object()) {
      if (schema.contains("required"))
        for (const auto& key : schema.at("required"))
          if (!value.contains(key.get<std::string>())) fail(path, "missing required key \"" + key.get<std::string>() + "\"");
      const json props = schema.value("properties", json::object());
      for (const auto& [key, child] : value.items()) {
        path.push_back(key);
        if (props.contains(key)) {
          validate(child, props.at(key), path);
        } else if (schema.contains("additionalProperties") && !schema.at("additionalProperties").get<bool>()) {
          fail(path, "unknown key");
        }
        path.pop_back();
      }
    }
  }

 private:
  void check_type(const json& value, const std::string& type, const std::vector<std::string>& path) const {
    bool ok = false;
    if (type == "object") ok = value.is_object();
    else if (type == "array") ok = value.is_array();
    else if (type == "number") ok = value.is_number();
    else if (type == "integer") ok = value.is_number_integer() || value.is_number_unsigned();
    else if (type == "string") ok = value.is_string();
    else if (type == "boolean") ok = value.is_boolean();
    if (!ok) fail(path, "expected " + type);
  }

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::ostringstream os;
    os << source_ << ":" << line_of(text_, path) << ": " << pointer(path) << ": " << what;
    throw InvalidInput(os.str());
  }

  const std::string& text_;
  std::string source_;
};

inline IntegralConstants k_from(const json& j) {
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

/// Parses and validates a configuration document; errors carry `source:line`.
inline RunConfig parse_config(const std::string& text, const std::string& source = "config") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(source + ": " + e.what());
  }
  const json schema = json::parse(kConfigSchema);
  std::vector<std::string> path;
  detail::SchemaValidator(text, source).validate(doc, schema, path);

  RunConfig cfg;
  const auto where = [&](const std::vector<std::string>& p) {
    return source + ":" + std::to_string(detail::line_of(text, p)) + ": " + detail::pointer(p) + ": ";
  };
  try {
    cfg.params = params_from_json(doc.at("params"));
  } catch (const InvalidInput& e) {
    throw InvalidInput(where({"params"}) + e.what());
  }
  if (doc.contains("k")) cfg.k = detail::k_from(doc.at("k"));
  if (doc.contains("resolution")) {
    cfg.nlat = doc.at("resolution")[0].get<int>();
    cfg.nlon = doc.at("resolution")[1].get<int>();
  }
  cfg.sigma_samples = doc.value("sigma_samples", cfg.sigma_samples);
  if (doc.contains("k3_slices")) cfg.k3_slices = doc.at("k3_slices").get<std::vector<double>>();
  if (doc.contains("k1_max")) cfg.k1_max = doc.at("k1_max").get<double>();
  cfg.region_samples = doc.value("region_samples", cfg.region_samples);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.threads = doc.value("threads", cfg.threads);
  if (doc.contains("state")) {
    try {
      cfg.state = state_from_json(doc.at("state"));
    } catch (const InvalidInput& e) {
      throw InvalidInput(where({"state", "nu"}) + e.what());
    }
  }
  cfg.t_end = doc.value("t_end", cfg.t_end);
  cfg.tol = doc.value("tol", cfg.tol);
  cfg.sigma_tol = doc.value("sigma_tol", cfg.sigma_tol);
  cfg.rank_eps = doc.value("rank_eps", cfg.rank_eps);
  cfg.states = doc.value("states", cfg.states);
  cfg.out = doc.value("out", cfg.out);
  cfg.svg = doc.value("svg", cfg.svg);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Commands

struct BifurcationOutput {
  std::string curve_csv;
  std::string sigma_csv;
  json regions;
};

inline BifurcationOutput cmd_bifurcation(const RunConfig& cfg) {
  const GyrostatParams& p = cfg.require_params();
  p.require_generic();
  BifurcationOutput out;

  std::ostringstream curve;
  write_curve_csv(curve, sample_curve(cfg.sigma_samples, p));
  out.curve_csv = curve.str();

  std::ostringstream slices;
  bool header = true;
  for (double k3 : cfg.k3_slices) {
    write_sigma_slice_csv(slices, k3, sigma_slice(k3, p, cfg.sigma_samples, cfg.k1_limit()), header);
    header = false;
  }
  out.sigma_csv = slices.str();

  // Labelled random samples over a box covering the feasible set up to k1_max.
  std::mt19937_64 rng(cfg.seed);
  const double k1_max = cfg.k1_limit();
  const double k2_max = 1.2 * branch_g(k1_max, p);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  json samples = json::array();
  json tally = {{"R1", 0}, {"R2", 0}, {"R3", 0}, {"R4", 0}, {"ON_SIGMA", 0}};
  for (int i = 0; i < cfg.region_samples; ++i) {
    const double k1 = k1_max * u01(rng);
    const double k2 = k2_max * u01(rng);
    const double k3 = (2.0 * u01(rng) - 1.0) * 1.2 * std::sqrt(k1_max);
    const IntegralConstants k{k1, k2, k3};
    const RegionLabel label = classify(k, p, cfg.sigma_tol);
    samples.push_back({{"k", to_json(k)}, {"label", to_string(label)}});
    tally[to_string(label)] = tally[to_string(label)].get<int>() + 1;
  }
  out.regions = {{"params", to_json(p)},
                 {"seed", cfg.seed},
                 {"region_convention", kRegionConvention},
                 {"counts", tally},
                 {"samples", samples}};
  return out;
}

inline RpmOptions rpm_options(const RunConfig& cfg, bool with_boundary) {
  RpmOptions opt;
  opt.nlat = cfg.nlat;
  opt.nlon = cfg.nlon;
  opt.threads = cfg.threads;
  opt.with_boundary = with_boundary;
  return opt;
}

inline json cmd_classify(const RunConfig& cfg) {
  const GyrostatParams& p = cfg.require_params();
  const IntegralConstants& k = cfg.require_k();
  const RegionLabel label = classify(k, p, cfg.sigma_tol);
  const RpmReport report = rpm_map(k, p, rpm_options(cfg, false));
  const int expected = torus_count(label);
  return {{"k", to_json(k)},
          {"label", to_string(label)},
          {"region_convention", kRegionConvention},
          {"component_count", report.components.size()},
          {"sheets", report.sheets},
          {"uncertain_vertices", report.uncertain_count()},
          {"jk_type", manifold_type(label, report.sheets)},
          {"consistent", expected < 0 || expected == report.sheets}};
}

struct SimulateOutput {
  Trajectory trajectory;
  json report;
};

inline SimulateOutput cmd_simulate(const RunConfig& cfg) {
  const GyrostatParams& p = cfg.require_params();
  if (!cfg.state) throw InvalidInput("simulate needs an initial state (config \"state\" or --omega/--nu)");
  SimulateOutput out;
  out.trajectory = integrate(*cfg.state, p, cfg.t_end, cfg.tol);
  const Trajectory& traj = out.trajectory;
  const IntegralConstants k0 = traj.initial_integrals(p);

  const SphereCurve curve = project(traj);
  std::vector<int> counts(curve.points.size(), 0);
  parallel_for(curve.points.size(), cfg.threads, [&](std::size_t i) {
    counts[i] = admissible_velocities(curve.points[i], k0, p).count();
  });
  const auto inside = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](int c) { return c >= 1; }));

  const Trajectory back = integrate(reversed(traj.states.back()), reversed(p), cfg.t_end, cfg.tol);
  const State& returned = back.states.back();
  const double reversal_error = std::max((-returned.omega() - cfg.state->omega()).cwiseAbs().maxCoeff(),
                                         (returned.nu() - cfg.state->nu()).cwiseAbs().maxCoeff());

  out.report = {{"params", to_json(p)},
                {"initial_state", to_json(*cfg.state)},
                {"k", to_json(k0)},
                {"t_end", cfg.t_end},
                {"tol", cfg.tol},
                {"points", traj.times.size()},
                {"drift", {{"K1", traj.drift.k1}, {"K2", traj.drift.k2}, {"K3", traj.drift.k3}, {"nu_norm", traj.drift.nu_norm}}},
                {"containment", {{"checked", curve.points.size()}, {"inside", inside},
                                 {"fraction", curve.points.empty() ? 1.0 : double(inside) / double(curve.points.size())}}},
                {"reversal_error", reversal_error}};
  return out;
}

inline std::vector<BoundaryCurve> cmd_boundary(const RunConfig& cfg) {
  return generalized_boundary(cfg.require_k(), cfg.require_params());
}

inline RpmReport cmd_rpm_map(const RunConfig& cfg) {
  return rpm_map(cfg.require_k(), cfg.require_params(), rpm_options(cfg, true));
}

inline std::vector<StateRow> load_states(const RunConfig& cfg) {
  if (cfg.states.empty()) throw InvalidInput("check needs a states CSV (config \"states\" or --states)");
  std::ifstream in(cfg.states);
  if (!in) throw InvalidInput("cannot open states file " + cfg.states);
  return read_states_csv(in);
}

}  // namespace gyrostat::cli
