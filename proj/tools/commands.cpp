#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace spinbridge::cli {

namespace fs = std::filesystem;

UnitScale parse_unit_scale(const std::string& name) {
  if (name == "G") return {};
  if (name == "MHz") return {2.0 * std::numbers::pi, "rad/us"};
  throw ConfigError("unknown unit scale '" + name + "' (expected G or MHz)");
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_series_csv(std::ostream& out, const SimResult& run, const UnitScale& scale) {
  out << kSeriesHeader << '\n';
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    out << format_number(run.times[i]) << ',' << format_number(run.n_a1[i]) << ','
        << format_number(run.n_b[i]) << ',' << format_number(run.n_a2[i]) << ','
        << format_number(run.G1[i] * scale.rate) << ',' << format_number(run.G2[i] * scale.rate)
        << ',' << format_number(run.theta[i]) << ',' << format_number(run.n_dark[i]) << ','
        << format_number(run.fidelity[i]) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<double>& gammas,
                       const std::vector<SimResult>& runs, const UnitScale& scale) {
  out << kSummaryHeader << '\n';
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto peak = runs[i].peak_fidelity();
    out << format_number(gammas[i] * scale.rate) << ',' << format_number(peak.fidelity) << ','
        << format_number(peak.tau) << '\n';
  }
}

std::string run_file_name(const RunConfig& config) {
  return protocol_name(config.protocol) + "_" + initial_name(config.initial) + ".csv";
}

std::string sweep_file_name(double gamma_s) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "gamma_s_%g.csv", gamma_s);
  return buf;
}

namespace {

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  body(file);
  if (!file) throw std::runtime_error("error while writing " + path.string());
}

void print_rates(std::ostream& out, const DecayRates& d, const UnitScale& scale) {
  out << "decay (" << scale.label << "): kappa1 " << format_number(d.kappa1 * scale.rate)
      << ", gamma_s " << format_number(d.gamma_s * scale.rate) << ", kappa2 "
      << format_number(d.kappa2 * scale.rate) << '\n';
}

}  // namespace

int run_command(const RunConfig& config, const fs::path& out_dir, const UnitScale& scale,
                std::ostream& out) {
  const SimResult run = run_protocol(config.spec(), config.layout(), config.integrator,
                                     config.samples);
  const fs::path path = out_dir / run_file_name(config);
  write_file(path, [&](std::ostream& f) { write_series_csv(f, run, scale); });
  const auto peak = run.peak_fidelity();
  out << "protocol " << protocol_name(config.protocol) << ", initial "
      << initial_name(config.initial) << '\n';
  print_rates(out, config.decay, scale);
  out << "peak fidelity " << format_number(peak.fidelity) << " at tau "
      << format_number(peak.tau) << '\n';
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int sweep_command(const RunConfig& config, const std::vector<double>& gammas,
                  const fs::path& out_dir, const UnitScale& scale, std::ostream& out) {
  if (gammas.empty()) throw ConfigError("sweep needs at least one gamma_s value");
  const auto runs =
      sweep_spin_decay(config.spec(), gammas, config.layout(), config.integrator, config.samples);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    write_file(out_dir / sweep_file_name(gammas[i]),
               [&](std::ostream& f) { write_series_csv(f, runs[i], scale); });
    const auto peak = runs[i].peak_fidelity();
    out << "gamma_s " << format_number(gammas[i] * scale.rate) << ": peak fidelity "
        << format_number(peak.fidelity) << " at tau " << format_number(peak.tau) << '\n';
  }
  const fs::path summary = out_dir / "summary.csv";
  write_file(summary, [&](std::ostream& f) { write_summary_csv(f, gammas, runs, scale); });
  out << "wrote " << runs.size() << " runs and " << summary.string() << '\n';
  return kExitOk;
}

int validate_command(const validation::ValidationOptions& options, std::ostream& out) {
  const auto results = validation::run_validation(options);
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  " << r.detail << '\n';
    if (r.passed) ++passed;
  }
  out << passed << "/" << results.size() << " checks passed";
  if (options.quick) out << " (microscopic checks skipped)";
  out << '\n';
  return passed == results.size() ? kExitOk : kExitFailure;
}

int figure_data_command(const IntegratorOptions& integrator, const fs::path& out_dir,
                        std::ostream& out) {
  const UnitScale scale;
  for (ProtocolKind kind : {ProtocolKind::DoubleSwap, ProtocolKind::DarkState}) {
    for (const InitialKind& initial :
         {InitialKind{Fock1{}}, InitialKind{Superposition{}}, InitialKind{Coherent{}}}) {
      for (bool lossless : {true, false}) {
        RunConfig cfg;
        cfg.protocol = kind;
        cfg.initial = initial;
        cfg.decay = lossless ? DecayRates::lossless() : DecayRates::lossy_defaults();
        cfg.integrator = integrator;
        const SimResult run = run_protocol(cfg.spec(), cfg.layout(), cfg.integrator, cfg.samples);
        const std::string name = protocol_name(kind) + "_" + initial_name(initial) +
                                 (lossless ? "_lossless.csv" : "_lossy.csv");
        write_file(out_dir / name, [&](std::ostream& f) { write_series_csv(f, run, scale); });
        out << name << ": peak fidelity " << format_number(run.peak_fidelity().fidelity) << '\n';
      }
    }
  }
  RunConfig sweep;
  sweep.protocol = ProtocolKind::DarkState;
  sweep.initial = Superposition{};
  sweep.integrator = integrator;
  return sweep_command(sweep, kDefaultSpinDecaySweep, out_dir / "sweep", scale, out);
}

namespace {

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("--values: '" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw ConfigError("--values: '" + item + "' is not a number");
    }
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("--values: rates must be >= 0");
    out.push_back(v);
  }
  return out;
}

struct CommonFlags {
  std::string config;
  std::string protocol;
  std::string initial;
  std::optional<double> alpha;
  bool lossless = false;
  bool lossy_defaults = false;
  std::optional<double> dt;
  std::string unit = "G";
  std::string out = ".";
};

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--protocol", f.protocol, "double-swap or dark-state");
  cmd->add_option("--initial", f.initial, "fock1, superposition or coherent");
  cmd->add_option("--alpha", f.alpha, "coherent amplitude (real)");
  auto* lossless = cmd->add_flag("--lossless", f.lossless, "all decay rates zero");
  auto* lossy = cmd->add_flag("--lossy-defaults", f.lossy_defaults,
                              "kappa1 = 0.003, gamma_s = 0.01, kappa2 = 0.1");
  lossless->excludes(lossy);
  cmd->add_option("--dt", f.dt, "integrator step (RK4) or step cap (adaptive)");
  cmd->add_option("--unit-scale", f.unit, "G (dimensionless) or MHz");
  cmd->add_option("--out", f.out, "output directory");
}

RunConfig resolve(RunConfig cfg, const CommonFlags& f) {
  if (!f.config.empty()) cfg = apply_config_file(cfg, f.config);
  if (!f.protocol.empty()) cfg.protocol = parse_protocol(f.protocol);
  if (!f.initial.empty()) cfg.initial = parse_initial(f.initial, f.alpha.value_or(1.0));
  if (f.alpha) {
    auto* coherent = std::get_if<Coherent>(&cfg.initial);
    if (!coherent) throw ConfigError("--alpha applies only to coherent inputs");
    coherent->alpha = Complex(*f.alpha, 0.0);
  }
  if (f.lossless) cfg.decay = DecayRates::lossless();
  if (f.lossy_defaults) cfg.decay = DecayRates::lossy_defaults();
  if (f.dt) {
    cfg.integrator.dt_max = *f.dt;
    cfg.integrator.dt_min = std::min(cfg.integrator.dt_min, *f.dt);
  }
  cfg.validate();
  return cfg;
}

void warn_truncation(const RunConfig& cfg, std::ostream& err) {
  const auto* coherent = std::get_if<Coherent>(&cfg.initial);
  if (!coherent) return;
  const auto state = coherent_state(coherent->alpha, cfg.layout().dim(Mode::Microwave));
  if (state.truncation_flagged) {
    err << "warning: coherent input loses " << format_number(state.tail_weight)
        << " of its weight to truncation; raise layout.dims\n";
  }
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Microwave-to-optical state transfer through a collective spin mode"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "simulate one protocol and write its time series");
  add_run_flags(run, run_flags);

  CommonFlags sweep_flags;
  std::string values = "0.01,0.03,0.06,0.1";
  auto* sweep = app.add_subcommand("sweep", "repeat a run over spin decay rates");
  add_run_flags(sweep, sweep_flags);
  sweep->add_option("--values", values, "comma separated gamma_s values");

  std::string validate_config;
  std::optional<double> validate_dt;
  bool quick = false;
  auto* validate = app.add_subcommand("validate", "oracle, invariant and microscopic checks");
  validate->add_option("--config", validate_config, "JSON config (integrator section is used)");
  validate->add_option("--dt", validate_dt, "integrator step");
  validate->add_flag("--quick", quick, "skip the microscopic checks");

  std::string figure_config;
  std::optional<double> figure_dt;
  std::string figure_out = "figure-data";
  auto* figures = app.add_subcommand("figure-data", "write every CSV the plots consume");
  figures->add_option("--config", figure_config, "JSON config (integrator section is used)");
  figures->add_option("--dt", figure_dt, "integrator step");
  figures->add_option("--out", figure_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  auto integrator_from = [](const std::string& path, const std::optional<double>& dt) {
    RunConfig cfg;
    if (!path.empty()) cfg = apply_config_file(cfg, path);
    if (dt) {
      cfg.integrator.dt_max = *dt;
      cfg.integrator.dt_min = std::min(cfg.integrator.dt_min, *dt);
    }
    try {
      cfg.integrator.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    return cfg.integrator;
  };

  try {
    if (*run) {
      const RunConfig cfg = resolve(RunConfig{}, run_flags);
      warn_truncation(cfg, err);
      return run_command(cfg, run_flags.out, parse_unit_scale(run_flags.unit), out);
    }
    if (*sweep) {
      RunConfig base;
      base.protocol = ProtocolKind::DarkState;
      base.initial = Superposition{};
      const RunConfig cfg = resolve(base, sweep_flags);
      warn_truncation(cfg, err);
      return sweep_command(cfg, parse_values(values), sweep_flags.out,
                           parse_unit_scale(sweep_flags.unit), out);
    }
    if (*validate) {
      validation::ValidationOptions opt;
      opt.integrator = integrator_from(validate_config, validate_dt);
      opt.quick = quick;
      return validate_command(opt, out);
    }
    return figure_data_command(integrator_from(figure_config, figure_dt), figure_out, out);
  } catch (const IntegrationFailure& e) {
    err << "integration failed: " << e.what() << '\n';
    return kExitIntegration;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace spinbridge::cli
