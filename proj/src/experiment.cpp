#include "fpulab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace fpulab {

void ExperimentConfig::validate() const {
  params.validate();
  if (!is_pow2(params.n_sites))
    throw UsageError("n: must be a power of two, got " + std::to_string(params.n_sites));
  make_step_size(h, integrator);
  if (initial_mode < 1 || initial_mode > params.n_sites / 2)
    throw UsageError("mode: must lie in [1, n/2], got " + std::to_string(initial_mode));
  if (!std::isfinite(initial_amplitude)) throw UsageError("amplitude: must be finite");
  if (!(std::isfinite(t_end) && t_end > 0)) throw UsageError("t-end: must be positive");
  if (samples_per_decade < 1) throw UsageError("samples-per-decade: must be positive");
  if (packet_size < 1 || params.n_sites % packet_size != 0)
    throw UsageError("packet-size: must divide n, got " + std::to_string(packet_size));
}

std::vector<double> sample_schedule(double t_end, int samples_per_decade, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw UsageError("h: must be positive");
  if (samples_per_decade < 1) throw UsageError("samples-per-decade: must be positive");
  if (!(t_end > 0) || !std::isfinite(t_end)) throw UsageError("t-end: must be positive");

  std::vector<double> times{0.0};
  if (t_end < h) {
    times.push_back(t_end);
    return times;
  }
  const double lo = std::log10(h);
  const double hi = std::log10(t_end);
  long long last_multiple = 0;
  for (long long i = 0;; ++i) {
    const double x = lo + static_cast<double>(i) / samples_per_decade;
    if (x > hi) break;
    const long long k = std::max<long long>(1, std::llround(std::pow(10.0, x) / h));
    const double t = static_cast<double>(k) * h;
    if (t >= t_end) break;
    if (k != last_multiple) {
      times.push_back(t);
      last_multiple = k;
    }
  }
  times.push_back(t_end);
  return times;
}

std::optional<double> detect_equilibrium(std::span<const double> times,
                                         std::span<const double> values, double asymptote) {
  if (times.empty() || times.size() != values.size())
    throw UsageError("series must be non-empty with matching lengths");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw UsageError("sample times must be strictly increasing");

  const double threshold = 0.9 * asymptote;
  const double half_decade = std::sqrt(10.0);
  const double t_last = times.back();
  const std::size_t n = times.size();

  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] < threshold) continue;
    if (times[i] == 0.0) {
      bool sustained = true;
      for (std::size_t j = i; j < n; ++j)
        if (values[j] < threshold) {
          sustained = false;
          break;
        }
      if (sustained) return times[i];
      continue;
    }
    const double window_end = times[i] * half_decade;
    if (window_end > t_last) return std::nullopt;  // window extends past the series
    bool sustained = true;
    for (std::size_t j = i; j < n && times[j] <= window_end; ++j)
      if (values[j] < threshold) {
        sustained = false;
        break;
      }
    if (sustained) return times[i];
  }
  return std::nullopt;
}

EstimatorPair evaluate_estimators(const EnergySpectrum<double>& spectrum, Index packet_size) {
  const Index n = spectrum.energies.size();
  EnergySpectrum<double> nonzero_modes;
  nonzero_modes.t = spectrum.t;
  nonzero_modes.energies = spectrum.energies.tail(n - 1);
  EstimatorPair pair;
  pair.instantaneous = n_eff(nonzero_modes, EstimatorVariant::instantaneous());
  pair.packet = n_eff(spectrum, EstimatorVariant::packets(packet_size));
  return pair;
}

namespace {

// initial_amplitude is quoted per oscillator; excite_mode wants the
// whole-chain normalization, sqrt(N) larger.
double excitation_scale(const ExperimentConfig& config) {
  return config.initial_amplitude * std::sqrt(static_cast<double>(config.params.n_sites));
}

}  // namespace

RelaxationRecord run_experiment(const ExperimentConfig& config, const SpectrumSink& sink) {
  config.validate();

  ChainState<double> initial =
      excite_mode<double>(config.initial_mode, excitation_scale(config), config.params.n_sites);
  const std::vector<double> schedule =
      sample_schedule(config.t_end, config.samples_per_decade, config.h);

  RelaxationRecord record;
  record.samples.reserve(schedule.size());
  double e0 = 0.0;

  SampleCallback<double> on_sample = [&](const ChainState<double>& s) {
    const ModeState<double> modes = to_modes(s);
    EnergySpectrum<double> spectrum = mode_energies(modes);
    spectrum.t = s.t;
    const EstimatorPair pair = evaluate_estimators(spectrum, config.packet_size);
    RelaxationSample sample;
    sample.t = s.t;
    sample.n_eff_inst = pair.instantaneous.n_eff;
    sample.n_eff_packet = pair.packet.n_eff;
    sample.e_total = total_energy(s, config.params);
    if (record.samples.empty()) e0 = sample.e_total;
    const double drift =
        e0 != 0.0 ? std::abs(sample.e_total - e0) / std::abs(e0) : std::abs(sample.e_total);
    record.max_energy_drift = std::max(record.max_energy_drift, drift);
    record.samples.push_back(sample);
    if (sink) sink(spectrum);
  };

  auto finalize = [&]() {
    std::vector<double> times, inst, packet;
    times.reserve(record.samples.size());
    for (const auto& s : record.samples) {
      times.push_back(s.t);
      inst.push_back(s.n_eff_inst);
      packet.push_back(s.n_eff_packet);
    }
    if (!times.empty()) {
      record.t_eq_instantaneous = detect_equilibrium(
          times, inst, estimator_asymptote<double>(EstimatorVariant::instantaneous()));
      record.t_eq_packet = detect_equilibrium(
          times, packet, estimator_asymptote<double>(EstimatorVariant::packets(config.packet_size)));
    }
  };

  try {
    integrate<double>(initial, config.params, config.integrator, StepSize<double>{config.h},
                      config.t_end, schedule, on_sample);
  } catch (const BlowUpError& e) {
    finalize();
    throw RunAbortedError(e.what(), std::move(record));
  }
  finalize();
  return record;
}

std::vector<SweepEntry> sweep(const ExperimentConfig& base, std::span<const double> amplitudes) {
  if (amplitudes.empty()) throw UsageError("amplitude list must be non-empty");

  auto run_one = [&base](double amplitude) {
    SweepEntry entry;
    entry.amplitude = amplitude;
    try {
      ExperimentConfig config = base;
      config.initial_amplitude = amplitude;
      entry.record = run_experiment(config);
    } catch (const RunAbortedError& e) {
      entry.record = e.partial_record();
      entry.error = e.what();
    } catch (const Error& e) {
      entry.error = e.what();
    }
    return entry;
  };

  std::vector<std::future<SweepEntry>> futures;
  futures.reserve(amplitudes.size());
  for (double a : amplitudes)
    futures.push_back(std::async(std::launch::async, run_one, a));

  std::vector<SweepEntry> entries;
  entries.reserve(amplitudes.size());
  for (auto& f : futures) entries.push_back(f.get());
  return entries;
}

}  // namespace fpulab
