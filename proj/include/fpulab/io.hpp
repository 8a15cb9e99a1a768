#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fpulab/experiment.hpp"
#include "fpulab/modes.hpp"

namespace fpulab {

/// 17-significant-digit decimal rendering; lossless for 64-bit reals.
std::string format_real(double value);

/// Strict parse of a decimal real; the whole token must be consumed.
double parse_real(const std::string& text);

/// Flat key=value lines; '#' comments and blank lines ignored.
/// Duplicate keys keep the last occurrence.
std::map<std::string, std::string> load_key_value_file(const std::filesystem::path& path);

/// Builds an ExperimentConfig from key=value text. Later set() calls override
/// earlier ones, so file values first and flags after gives flags precedence.
/// Keys: n, alpha, beta, mode, amplitude, integrator, h, t_end,
/// samples_per_decade, packet_size (hyphens accepted in place of
/// underscores). Unknown keys and malformed values throw UsageError naming
/// the key. When h is never set it defaults per integrator: 0.02 for
/// leapfrog, 1.0 for spectral.
class ConfigBuilder {
 public:
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& path);
  ExperimentConfig build() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Extracts the config echo from a run manifest (extra manifest keys are
/// ignored); build() of the result reproduces the run bit-exactly.
ExperimentConfig config_from_manifest(const std::filesystem::path& path);

/// CSV schema: header "t,n_eff_inst,n_eff_packet,e_total,drift", one row per
/// sample in time order, then footer comment lines carrying the detected
/// equipartition times and the maximum relative energy drift.
void write_series(const RelaxationRecord& record, const std::filesystem::path& destination);
RelaxationRecord read_series(const std::filesystem::path& path);

/// Per-sample mode-energy spectra: header "t,E0,...,E{N-1}", one row per sample.
void write_spectra(const std::vector<EnergySpectrum<double>>& spectra,
                   const std::filesystem::path& destination);
std::vector<EnergySpectrum<double>> read_spectra(const std::filesystem::path& path);

/// Summary table "amplitude,t_eq_inst,t_eq_packet,max_drift"; absent times are
/// left empty, failed entries additionally get a footer comment.
void write_sweep_summary(const std::vector<SweepEntry>& entries,
                         const std::filesystem::path& destination);

struct RunManifest {
  ExperimentConfig config;
  std::string version;
  std::string started;  ///< ISO-8601 UTC wall-clock timestamps
  std::string finished;
  std::vector<std::string> outputs;  ///< paths relative to the manifest
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& destination);

std::string utc_timestamp();

}  // namespace fpulab
