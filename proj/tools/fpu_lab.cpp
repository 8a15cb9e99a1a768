// fpu-lab: relaxation experiments on the periodic alpha-FPU chain.
//
//   fpu-lab run       one experiment; writes series.csv, spectra.csv, manifest.txt
//   fpu-lab sweep     one experiment per amplitude plus a summary table
//   fpu-lab estimate  recompute both n_eff variants from saved spectra (or
//                     re-detect equilibrium times from a saved series)
//   fpu-lab check     built-in invariant suite
//
// Data goes to files only; progress and summaries go to the console.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpulab/checks.hpp"
#include "fpulab/experiment.hpp"
#include "fpulab/io.hpp"
#include "fpulab/version.hpp"

namespace fs = std::filesystem;
using namespace fpulab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitInternal = 5;

struct ConfigFlags {
  std::optional<std::string> config_file;
  std::optional<std::string> n, alpha, beta, mode, amplitude, integrator, h, t_end,
      samples_per_decade, packet_size;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags, bool with_amplitude = true) {
  cmd->set_help_flag("--help", "print this help message");  // frees --h for the step size
  cmd->add_option("--config", flags.config_file, "key=value config file; flags override it");
  cmd->add_option("--n", flags.n, "chain size (power of two, default 512)");
  cmd->add_option("--alpha", flags.alpha, "cubic coupling (default 0.25)");
  cmd->add_option("--beta", flags.beta, "quartic coupling (default 0)");
  cmd->add_option("--mode", flags.mode, "initially excited mode (default 1)");
  if (with_amplitude)
    cmd->add_option("--amplitude", flags.amplitude, "initial mode amplitude A1 (default 40)");
  cmd->add_option("--integrator", flags.integrator, "leapfrog | spectral (default leapfrog)");
  cmd->add_option("--h", flags.h, "step size (default 0.02 leapfrog, 1.0 spectral)");
  cmd->add_option("--t-end", flags.t_end, "integration horizon (default 1e4)");
  cmd->add_option("--samples-per-decade", flags.samples_per_decade,
                  "log-time sampling density (default 20)");
  cmd->add_option("--packet-size", flags.packet_size, "modes per energy packet (default 8)");
}

ExperimentConfig build_config(const ConfigFlags& flags) {
  ConfigBuilder builder;
  if (flags.config_file) builder.load_file(*flags.config_file);
  auto apply = [&](const char* key, const std::optional<std::string>& v) {
    if (v) builder.set(key, *v);
  };
  apply("n", flags.n);
  apply("alpha", flags.alpha);
  apply("beta", flags.beta);
  apply("mode", flags.mode);
  apply("amplitude", flags.amplitude);
  apply("integrator", flags.integrator);
  apply("h", flags.h);
  apply("t_end", flags.t_end);
  apply("samples_per_decade", flags.samples_per_decade);
  apply("packet_size", flags.packet_size);
  return builder.build();
}

fs::path resolve_out_dir(const std::optional<std::string>& out_flag) {
  if (out_flag) return *out_flag;
  if (const char* env = std::getenv("FPU_LAB_OUT"); env && *env) return env;
  return ".";
}

std::string amplitude_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", a);
  return buf;
}

std::string describe(const std::optional<double>& t_eq) {
  return t_eq ? format_real(*t_eq) : "not reached";
}

void print_config(const ExperimentConfig& c, std::ostream& out) {
  out << "n=" << c.params.n_sites << " alpha=" << c.params.alpha << " beta=" << c.params.beta
      << " mode=" << c.initial_mode << " amplitude=" << c.initial_amplitude
      << " integrator=" << to_string(c.integrator) << " h=" << c.h << " t_end=" << c.t_end
      << '\n';
}

int cmd_run(const ConfigFlags& flags, const std::optional<std::string>& out_flag) {
  const ExperimentConfig config = build_config(flags);
  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);

  std::cerr << "run: ";
  print_config(config, std::cerr);

  RunManifest manifest;
  manifest.config = config;
  manifest.version = kVersion;
  manifest.started = utc_timestamp();
  manifest.outputs = {"series.csv", "spectra.csv"};

  std::vector<EnergySpectrum<double>> spectra;
  RelaxationRecord record;
  bool aborted = false;
  std::string abort_reason;
  try {
    record = run_experiment(config, [&](const EnergySpectrum<double>& s) { spectra.push_back(s); });
  } catch (const RunAbortedError& e) {
    record = e.partial_record();
    aborted = true;
    abort_reason = e.what();
  }
  manifest.finished = utc_timestamp();

  write_series(record, out_dir / "series.csv");
  write_spectra(spectra, out_dir / "spectra.csv");
  write_manifest(manifest, out_dir / "manifest.txt");

  if (aborted) {
    std::cerr << "run aborted: " << abort_reason << " (partial record written)\n";
    return kExitNumerical;
  }
  std::cout << "T_eq(inst) = " << describe(record.t_eq_instantaneous)
            << ", T_eq(packet) = " << describe(record.t_eq_packet)
            << ", max energy drift = " << format_real(record.max_energy_drift) << ", samples = "
            << record.samples.size() << ", wrote " << (out_dir / "series.csv").string() << '\n';
  return kExitOk;
}

int cmd_sweep(const ConfigFlags& flags, const std::vector<std::string>& amplitudes,
              const std::optional<std::string>& out_flag) {
  ConfigFlags base_flags = flags;
  base_flags.amplitude.reset();
  const ExperimentConfig base = build_config(base_flags);
  if (amplitudes.empty()) throw UsageError("sweep requires at least one --amplitude value");

  std::vector<double> values;
  for (const auto& a : amplitudes) {
    try {
      values.push_back(parse_real(a));
    } catch (const UsageError&) {
      throw UsageError("amplitude: expected a real number, got '" + a + "'");
    }
  }

  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);
  std::cerr << "sweep over " << values.size() << " amplitudes: ";
  print_config(base, std::cerr);

  const std::string started = utc_timestamp();
  const auto entries = sweep(base, values);

  bool any_failed = false;
  std::vector<std::string> outputs;
  for (const auto& entry : entries) {
    const std::string name = "series_A" + amplitude_tag(entry.amplitude) + ".csv";
    if (entry.record) {
      write_series(*entry.record, out_dir / name);
      outputs.push_back(name);
    }
    if (!entry.error.empty()) {
      any_failed = true;
      std::cerr << "amplitude " << entry.amplitude << " failed: " << entry.error << '\n';
    } else {
      std::cout << "A1 = " << entry.amplitude
                << ": T_eq(inst) = " << describe(entry.record->t_eq_instantaneous)
                << ", T_eq(packet) = " << describe(entry.record->t_eq_packet)
                << ", max drift = " << format_real(entry.record->max_energy_drift) << '\n';
    }
  }
  write_sweep_summary(entries, out_dir / "sweep_summary.csv");
  outputs.push_back("sweep_summary.csv");

  RunManifest manifest;
  manifest.config = base;
  manifest.version = kVersion;
  manifest.started = started;
  manifest.finished = utc_timestamp();
  manifest.outputs = outputs;
  write_manifest(manifest, out_dir / "manifest.txt");

  std::cout << "wrote " << (out_dir / "sweep_summary.csv").string() << '\n';
  return any_failed ? kExitNumerical : kExitOk;
}

int cmd_estimate(const std::optional<std::string>& spectra_file,
                 const std::optional<std::string>& series_file, const std::string& packet_size,
                 const std::optional<std::string>& out_flag) {
  if (spectra_file.has_value() == series_file.has_value())
    throw UsageError("estimate requires exactly one of --spectra or --series");
  ConfigBuilder probe;
  probe.set("packet_size", packet_size);
  const Index n_per_packet = static_cast<Index>(parse_real(packet_size));

  const fs::path out_dir = resolve_out_dir(out_flag);
  fs::create_directories(out_dir);
  const fs::path dest = out_dir / "estimate.csv";

  std::vector<double> times, inst, packet;
  if (spectra_file) {
    const auto spectra = read_spectra(*spectra_file);
    for (const auto& spectrum : spectra) {
      const EstimatorPair pair = evaluate_estimators(spectrum, n_per_packet);
      times.push_back(spectrum.t);
      inst.push_back(pair.instantaneous.n_eff);
      packet.push_back(pair.packet.n_eff);
    }
  } else {
    const RelaxationRecord record = read_series(*series_file);
    for (const auto& s : record.samples) {
      times.push_back(s.t);
      inst.push_back(s.n_eff_inst);
      packet.push_back(s.n_eff_packet);
    }
  }
  if (times.empty()) throw UsageError("input file carries no samples");

  const auto t_eq_inst =
      detect_equilibrium(times, inst, estimator_asymptote<double>(EstimatorVariant::instantaneous()));
  const auto t_eq_packet = detect_equilibrium(
      times, packet, estimator_asymptote<double>(EstimatorVariant::packets(n_per_packet)));

  std::ofstream out(dest);
  if (!out) throw IoError("cannot open for writing: " + dest.string());
  out << "t,n_eff_inst,n_eff_packet\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    out << format_real(times[i]) << ',' << format_real(inst[i]) << ',' << format_real(packet[i])
        << '\n';
  out << "# t_eq_inst " << (t_eq_inst ? format_real(*t_eq_inst) : "none") << '\n';
  out << "# t_eq_packet " << (t_eq_packet ? format_real(*t_eq_packet) : "none") << '\n';
  if (!out) throw IoError("write failed: " + dest.string());

  std::cout << "T_eq(inst) = " << describe(t_eq_inst)
            << ", T_eq(packet) = " << describe(t_eq_packet) << ", wrote " << dest.string() << '\n';
  return kExitOk;
}

int cmd_check() {
  const auto results = run_self_checks();
  bool all_passed = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name << ": " << r.detail << '\n';
    all_passed = all_passed && r.passed;
  }
  return all_passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relaxation experiments on the periodic alpha-FPU chain"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ConfigFlags run_flags, sweep_flags;
  std::optional<std::string> run_out, sweep_out, estimate_out;
  std::vector<std::string> sweep_amplitudes;
  std::optional<std::string> spectra_file, series_file;
  std::string estimate_packet = "8";

  auto* run = app.add_subcommand("run", "run one relaxation experiment");
  add_config_flags(run, run_flags);
  run->add_option("--out", run_out, "output directory (default $FPU_LAB_OUT or .)");

  auto* sw = app.add_subcommand("sweep", "run one experiment per amplitude");
  add_config_flags(sw, sweep_flags, /*with_amplitude=*/false);
  sw->add_option("--amplitude", sweep_amplitudes, "amplitude list (repeat or comma-separate)")
      ->delimiter(',');
  sw->add_option("--out", sweep_out, "output directory (default $FPU_LAB_OUT or .)");

  auto* est = app.add_subcommand("estimate", "recompute n_eff from saved data");
  est->add_option("--spectra", spectra_file, "spectra.csv from a previous run");
  est->add_option("--series", series_file, "series.csv from a previous run");
  est->add_option("--packet-size", estimate_packet, "modes per energy packet (default 8)");
  est->add_option("--out", estimate_out, "output directory (default $FPU_LAB_OUT or .)");

  auto* check = app.add_subcommand("check", "run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, run_out);
    if (sw->parsed()) return cmd_sweep(sweep_flags, sweep_amplitudes, sweep_out);
    if (est->parsed()) return cmd_estimate(spectra_file, series_file, estimate_packet, estimate_out);
    if (check->parsed()) return cmd_check();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const BlowUpError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const RunAbortedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
