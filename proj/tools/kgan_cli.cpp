#include "kgan/dynamics.hpp"
#include "kgan/errors.hpp"
#include "kgan/experiments.hpp"
#include "kgan/scenario.hpp"
#include "kgan/spectrum.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
};

// LO:HI:N
AxisSpec parse_axis(const std::string& text, const std::string& flag) {
  AxisSpec a;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> a.lo >> c1 >> a.hi >> c2 >> a.n) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw kgan::ConfigError("expected LO:HI:N, got '" + text + "'", flag);
  }
  return a;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw kgan::Error("cannot open '" + path + "' for writing");
  out << body;
  if (!out) throw kgan::Error("write to '" + path + "' failed");
}

void note(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

std::string spectrum_json(const kgan::Scenario& s) {
  const auto part = kgan::partition_isolated(s);
  std::string out = "[";
  for (int r = 0; r < part.regions(); ++r) {
    if (part.members[r].empty()) continue;
    const auto lin = kgan::linearize(s, part, r);
    const auto rep = kgan::rho_set(lin, s.hyper.eta_d());
    std::optional<kgan::StabilityBound> bound;
    if (lin.delta > 0.0) bound = kgan::stability_iff(lin);
    if (out.size() > 1) out += ",";
    out += "{\"region\":" + std::to_string(r) + ",\"report\":" + kgan::spectrum_report_json(lin, rep, bound) + "}";
  }
  out += "]\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel GAN gradient descent-ascent dynamics: simulation and local spectral analysis"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for offsets and feature sampling");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  std::string scenario_path, out_path;

  auto* sim = app.add_subcommand("simulate", "Run the GDA dynamics and write the trajectory as CSV");
  long steps = 1000, record_every = 1;
  std::string mode = "explicit";
  sim->add_option("--scenario", scenario_path)->required();
  sim->add_option("--steps", steps)->check(CLI::PositiveNumber);
  sim->add_option("--mode", mode)->check(CLI::IsMember({"explicit", "eliminated", "local"}));
  sim->add_option("--record-every", record_every)->check(CLI::PositiveNumber);
  sim->add_option("--out", out_path)->required();

  auto* spec = app.add_subcommand("spectrum", "Closed-form equilibrium spectrum of every region");
  spec->add_option("--scenario", scenario_path)->required();
  spec->add_option("--out", out_path)->required();

  auto* phase = app.add_subcommand("phase-diagram", "Sweep (sigma, lambda) and write CSV and SVG");
  std::string sigma_axis, lambda_axis, prefix, channel = "rho_max_sq";
  phase->add_option("--scenario", scenario_path)->required();
  phase->add_option("--sigma", sigma_axis, "LO:HI:N")->required();
  phase->add_option("--lambda", lambda_axis, "LO:HI:N")->required();
  phase->add_option("--out-prefix", prefix)->required();
  phase->add_option("--channel", channel)->check(CLI::IsMember({"rho_max_sq", "rho_max"}));

  auto* rate = app.add_subcommand("validate-rate", "Fit the empirical contraction rate near equilibrium");
  double offset = 1e-3;
  long rate_steps = 20000;
  rate->add_option("--scenario", scenario_path)->required();
  rate->add_option("--offset", offset, "Initial offset in kernel widths")->check(CLI::NonNegativeNumber);
  rate->add_option("--steps", rate_steps)->check(CLI::PositiveNumber);
  rate->add_option("--out", out_path)->required();

  auto* bis = app.add_subcommand("stability-bisect", "Bisect eta_d for the empirical stability boundary");
  kgan::BisectionOptions bopt;
  bis->add_option("--scenario", scenario_path)->required();
  bis->add_option("--steps", bopt.T, "Horizon of each probe")->check(CLI::PositiveNumber);
  bis->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const kgan::Scenario s = kgan::load_scenario(scenario_path);

    if (sim->parsed()) {
      const auto engine = kgan::parse_engine(mode);
      kgan::TrajectoryRecord rec;
      int code = 0;
      try {
        rec = kgan::simulate(s, steps, engine, record_every);
      } catch (const kgan::DivergenceError& e) {
        rec = e.partial();
        std::cerr << "error: " << e.what() << '\n';
        code = 2;
      }
      std::ostringstream csv;
      kgan::write_trajectory_csv(rec, csv);
      write_file(out_path, csv.str());
      if (code == 0 && !rec.steps.empty()) {
        note(g, "final max_dist " + std::to_string(rec.steps.back().max_dist));
      }
      return code;
    }

    if (spec->parsed()) {
      write_file(out_path, spectrum_json(s));
      return 0;
    }

    if (phase->parsed()) {
      const AxisSpec sa = parse_axis(sigma_axis, "--sigma");
      const AxisSpec la = parse_axis(lambda_axis, "--lambda");
      kgan::SweepGrid grid{kgan::make_log_axis(sa.lo, sa.hi, sa.n), kgan::make_log_axis(la.lo, la.hi, la.n), s};
      const auto cells = kgan::run_phase_diagram(grid);
      write_file(prefix + ".csv", kgan::phase_cells_csv(cells));
      write_file(prefix + ".svg", kgan::render_heatmap_svg(cells, kgan::parse_heat_channel(channel)));
      note(g, "wrote " + prefix + ".csv and " + prefix + ".svg");
      return 0;
    }

    if (rate->parsed()) {
      const auto rep = kgan::run_rate_validation(s, offset, rate_steps, g.seed);
      write_file(out_path, kgan::rate_report_json(rep));
      note(g, "r_fit " + std::to_string(rep.r_fit) + " theory " + std::to_string(rep.rho_max_theory));
      return 0;
    }

    if (bis->parsed()) {
      bopt.seed = g.seed;
      const auto rep = kgan::run_stability_bisection(s, bopt);
      write_file(out_path, kgan::bisection_report_json(rep));
      note(g, "critical eta_d " + std::to_string(rep.critical_eta) + " bound " + std::to_string(rep.bound));
      return 0;
    }
  } catch (const kgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const kgan::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return 1;
  } catch (const kgan::HypothesisError& e) {
    std::cerr << "hypothesis error: " << e.what() << '\n';
    return 1;
  } catch (const kgan::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const kgan::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
