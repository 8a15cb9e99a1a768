#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpulab/chain.hpp"
#include "fpulab/estimators.hpp"
#include "fpulab/integrators.hpp"
#include "fpulab/modes.hpp"

namespace fpulab {

/// Full description of one relaxation run. Fully deterministic: there is no
/// seed, the initial condition is the single-mode standing wave.
///
/// initial_amplitude is quoted in per-oscillator-energy units: the run
/// injects total harmonic energy n_sites * omega_k^2 * A1^2 / 2, i.e. an
/// energy density of omega_k^2 A1^2 / 2 per site (standing wave
/// q_j = sqrt(2) A1 cos(2 pi k j / N)). In this convention A1 = 40 gives the
/// N = 512 alpha-chain a density ~0.12 that relaxes at desk scale, while the
/// chain stays far below the bond-compression barrier 1/alpha of the cubic
/// potential, beyond which the alpha-model disintegrates.
struct ExperimentConfig {
  ModelParams<double> params{};
  IntegratorKind integrator = IntegratorKind::leapfrog;
  double h = 0.02;
  Index initial_mode = 1;
  double initial_amplitude = 40.0;
  double t_end = 1e4;
  int samples_per_decade = 20;
  Index packet_size = 8;

  /// Throws UsageError naming the offending field.
  void validate() const;
};

struct RelaxationSample {
  double t = 0;
  double n_eff_inst = 0;
  double n_eff_packet = 0;
  double e_total = 0;
};

/// Sampled time series of both estimator variants plus the detected
/// equipartition times. An absent t_eq means the threshold was never
/// sustained before t_end.
struct RelaxationRecord {
  std::vector<RelaxationSample> samples;
  std::optional<double> t_eq_instantaneous;
  std::optional<double> t_eq_packet;
  double max_energy_drift = 0.0;
};

/// Thrown when the integrator blows up mid-run; carries whatever samples were
/// collected before the failure.
class RunAbortedError : public Error {
 public:
  RunAbortedError(const std::string& msg, RelaxationRecord partial)
      : Error(msg), partial_(std::move(partial)) {}
  const RelaxationRecord& partial_record() const noexcept { return partial_; }

 private:
  RelaxationRecord partial_;
};

/// Sample times approximately uniform in log10 t from h to t_end, rounded to
/// integer multiples of h (duplicates dropped), always including 0 and t_end.
std::vector<double> sample_schedule(double t_end, int samples_per_decade, double h);

/// Earliest sample time t* at which the series reaches 0.9 * asymptote and
/// stays at or above it for every sample in the following half decade
/// [t*, sqrt(10) t*]. The window must be fully observable before the series
/// ends; a t* = 0 anchor has no log window and must hold to the end.
std::optional<double> detect_equilibrium(std::span<const double> times,
                                         std::span<const double> values, double asymptote);

/// Both estimator variants evaluated on one full per-mode spectrum: the
/// instantaneous variant sees modes 1..N-1 (the zero mode carries no energy
/// in momentum-conserving runs and would only pad the divisor), the packet
/// variant sees the 8-aligned blocks of the full spectrum.
struct EstimatorPair {
  NeffSample<double> instantaneous;
  NeffSample<double> packet;
};
EstimatorPair evaluate_estimators(const EnergySpectrum<double>& spectrum, Index packet_size);

using SpectrumSink = std::function<void(const EnergySpectrum<double>&)>;

/// Run one relaxation experiment: excite the configured mode, integrate, and
/// at each scheduled time transform to modes, evaluate both estimator
/// variants on the same spectrum, and track total energy. Afterwards the
/// equipartition time of each series is detected against that variant's own
/// plateau (estimator_asymptote), so both variants flag the same physical
/// thermalization event. Deterministic: two runs of the same config produce
/// bitwise-identical records.
RelaxationRecord run_experiment(const ExperimentConfig& config, const SpectrumSink& sink = {});

struct SweepEntry {
  double amplitude = 0;
  std::optional<RelaxationRecord> record;  ///< partial if error is set
  std::string error;                       ///< empty on success
};

/// One run per amplitude, concurrently where cores allow, results in input
/// order. Per-entry failures are reported in the entry without aborting the
/// sweep.
std::vector<SweepEntry> sweep(const ExperimentConfig& base, std::span<const double> amplitudes);

}  // namespace fpulab
