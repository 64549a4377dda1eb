#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace {

using namespace gyrostat;
using gyrostat::cli::RunConfig;

struct Overrides {
  std::string config;
  std::vector<double> A, lambda, k, omega, nu, k3;
  std::string resolution;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, samples;
  std::optional<double> t_end, tol;
  std::string out, svg, states;
};

Vec3 vec3_flag(const std::vector<double>& v, const char* name) {
  if (v.size() != 3) throw InvalidInput(std::string("--") + name + " takes exactly 3 numbers");
  return {v[0], v[1], v[2]};
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.config.empty()) cfg = cli::load_config(o.config);

  if (!o.A.empty() || !o.lambda.empty()) {
    const Vec3 A = o.A.empty() ? cfg.require_params().inertia() : vec3_flag(o.A, "A");
    const Vec3 lambda = o.lambda.empty() ? cfg.require_params().lambda() : vec3_flag(o.lambda, "lambda");
    cfg.params = GyrostatParams(A, lambda);
  }
  if (!o.k.empty()) {
    const Vec3 k = vec3_flag(o.k, "k");
    cfg.k = IntegralConstants{k[0], k[1], k[2]};
  }
  if (!o.omega.empty() || !o.nu.empty()) {
    if (o.omega.empty() && !cfg.state) throw InvalidInput("--nu needs --omega or a config state");
    if (o.nu.empty() && !cfg.state) throw InvalidInput("--omega needs --nu or a config state");
    const Vec3 omega = o.omega.empty() ? cfg.state->omega() : vec3_flag(o.omega, "omega");
    const Vec3 nu = o.nu.empty() ? cfg.state->nu() : vec3_flag(o.nu, "nu");
    cfg.state = State(omega, nu);
  }
  if (!o.resolution.empty()) {
    const auto x = o.resolution.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument("no x");
      std::size_t used = 0;
      cfg.nlat = std::stoi(o.resolution.substr(0, x), &used);
      cfg.nlon = std::stoi(o.resolution.substr(x + 1));
    } catch (const std::exception&) {
      throw InvalidInput("--resolution expects NLATxNLON, e.g. 128x256");
    }
    if (cfg.nlat < 1 || cfg.nlon < 1) throw InvalidInput("--resolution must be positive");
  }
  if (!o.k3.empty()) cfg.k3_slices = o.k3;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.samples) cfg.sigma_samples = *o.samples;
  if (o.t_end) cfg.t_end = *o.t_end;
  if (o.tol) {
    if (*o.tol < 1e-14 || *o.tol > 1e-3) throw InvalidInput("--tol must lie in [1e-14, 1e-3]");
    cfg.tol = *o.tol;
  }
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.svg.empty()) cfg.svg = o.svg;
  if (!o.states.empty()) cfg.states = o.states;
  return cfg;
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot write " + path);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regions of possible motion, bifurcation sets and visible contours for the free gyrostat"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--A", o.A, "principal moments A1 A2 A3")->expected(3);
    sub->add_option("--lambda", o.lambda, "gyrostatic moment")->expected(3);
    sub->add_option("--threads", o.threads, "worker threads (default: RPM_THREADS or 1)")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output path (stdout when omitted)");
  };
  auto with_k = [&](CLI::App* sub) { sub->add_option("--k", o.k, "integral constants k1 k2 k3")->expected(3); };
  auto with_grid = [&](CLI::App* sub) {
    sub->add_option("--resolution", o.resolution, "grid resolution NLATxNLON (icosphere with as many vertices)");
  };

  auto* bif = app.add_subcommand("bifurcation", "bifurcation curve, sigma slices and labelled region samples");
  common(bif);
  bif->add_option("--samples", o.samples, "sigma samples")->check(CLI::Range(2, 10000000));
  bif->add_option("--k3", o.k3, "k3 values for the slices");
  bif->add_option("--seed", o.seed, "seed for the region samples");

  auto* cls = app.add_subcommand("classify", "region label and integral-manifold type for k");
  common(cls);
  with_k(cls);
  with_grid(cls);

  auto* sim = app.add_subcommand("simulate", "integrate a trajectory and check containment in the RPM");
  common(sim);
  sim->add_option("--omega", o.omega, "initial angular velocity")->expected(3);
  sim->add_option("--nu", o.nu, "initial Poisson vector (unit)")->expected(3);
  sim->add_option("--t-end", o.t_end, "final time")->check(CLI::PositiveNumber);
  sim->add_option("--tol", o.tol, "integrator tolerance");

  auto* bnd = app.add_subcommand("boundary", "generalized boundary curves as CSV");
  common(bnd);
  with_k(bnd);

  auto* map = app.add_subcommand("rpm-map", "fiber counts on the sphere as a JSON report");
  common(map);
  with_k(map);
  with_grid(map);
  map->add_option("--svg", o.svg, "also write an SVG picture");

  auto* chk = app.add_subcommand("check", "contour condition and rank for states read from CSV");
  common(chk);
  chk->add_option("--states", o.states, "CSV with omega1..3 and nu1..3 columns");

  auto* sch = app.add_subcommand("schema", "print the configuration JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sch->parsed()) {
      std::cout << json::parse(cli::kConfigSchema).dump(2) << "\n";
      return 0;
    }
    const RunConfig cfg = resolve(o);

    if (bif->parsed()) {
      const auto res = cli::cmd_bifurcation(cfg);
      const std::string stem = cfg.out.empty() ? "bifurcation" : cfg.out;
      emit(stem + ".curve.csv", res.curve_csv);
      emit(stem + ".sigma.csv", res.sigma_csv);
      emit(stem + ".regions.json", dump(res.regions));
    } else if (cls->parsed()) {
      emit(cfg.out, dump(cli::cmd_classify(cfg)));
    } else if (sim->parsed()) {
      const auto res = cli::cmd_simulate(cfg);
      std::ostringstream csv;
      write_csv(csv, res.trajectory, cfg.require_params());
      if (cfg.out.empty()) {
        std::cout << csv.str();
        std::cerr << dump(res.report);
      } else {
        emit(cfg.out, csv.str());
        std::cout << dump(res.report);
      }
    } else if (bnd->parsed()) {
      std::ostringstream csv;
      write_boundary_csv(csv, cli::cmd_boundary(cfg));
      emit(cfg.out, csv.str());
    } else if (map->parsed()) {
      const RpmReport report = cli::cmd_rpm_map(cfg);
      emit(cfg.out, dump(to_json(report)));
      if (!cfg.svg.empty()) {
        std::ostringstream svg;
        write_rpm_svg(svg, report);
        emit(cfg.svg, svg.str());
      }
    } else if (chk->parsed()) {
      std::ostringstream csv;
      write_check_csv(csv, cli::load_states(cfg), cfg.require_params(), cfg.rank_eps);
      emit(cfg.out, csv.str());
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
