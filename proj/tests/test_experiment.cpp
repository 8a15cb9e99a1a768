#include <doctest.h>

#include <cmath>
#include <vector>

#include "fpulab/experiment.hpp"
#include "oracles.hpp"

using namespace fpulab;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.params.n_sites = 64;
  c.params.alpha = 0.25;
  c.integrator = IntegratorKind::leapfrog;
  c.h = 0.02;
  c.initial_mode = 1;
  c.initial_amplitude = 3.0;
  c.t_end = 50.0;
  c.samples_per_decade = 10;
  c.packet_size = 8;
  return c;
}

bool same_record(const RelaxationRecord& a, const RelaxationRecord& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (a.samples[i].t != b.samples[i].t) return false;
    if (a.samples[i].n_eff_inst != b.samples[i].n_eff_inst) return false;
    if (a.samples[i].n_eff_packet != b.samples[i].n_eff_packet) return false;
    if (a.samples[i].e_total != b.samples[i].e_total) return false;
  }
  return a.t_eq_instantaneous == b.t_eq_instantaneous && a.t_eq_packet == b.t_eq_packet &&
         a.max_energy_drift == b.max_energy_drift;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());

  c.params.n_sites = 60;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n:"), UsageError);

  c = small_config();
  c.h = 1.0;  // leapfrog stability
  CHECK_THROWS_AS(c.validate(), UsageError);

  c = small_config();
  c.initial_mode = 33;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("mode"), UsageError);

  c = small_config();
  c.packet_size = 7;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("packet"), UsageError);

  c = small_config();
  c.t_end = 0.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("sample schedule") {
  SUBCASE("degenerate horizons") {
    CHECK(sample_schedule(0.02, 20, 0.02) == std::vector<double>{0.0, 0.02});
    CHECK(sample_schedule(0.01, 20, 0.02) == std::vector<double>{0.0, 0.01});
  }

  SUBCASE("one sample per decade on a clean decade horizon") {
    const auto times = sample_schedule(100 * 0.5, 1, 0.5);
    REQUIRE(times.size() == 4);
    CHECK(times[0] == 0.0);
    CHECK(times[1] == 0.5);
    CHECK(times[2] == 5.0);
    CHECK(times[3] == 50.0);
  }

  SUBCASE("log-uniform density, multiples of h, strictly increasing") {
    const double h = 0.02;
    const int spd = 20;
    const auto times = sample_schedule(1e4, spd, h);
    REQUIRE(times.size() > 50);
    CHECK(times.front() == 0.0);
    CHECK(times[1] == h);
    CHECK(times.back() == 1e4);
    const double ratio_cap = std::pow(10.0, 1.0 / spd);
    for (std::size_t i = 1; i < times.size(); ++i) {
      CHECK(times[i] > times[i - 1]);
      const double k = times[i] / h;
      CHECK(std::abs(k - std::llround(k)) <= 1e-6);
      if (i >= 2)  // consecutive ratio bounded by the grid density plus rounding slack
        CHECK(times[i] / times[i - 1] <= ratio_cap + h / times[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("detect_equilibrium") {
  const double asymptote = equilibrium_asymptote<double>();
  const double threshold = 0.9 * asymptote;

  SUBCASE("constant series at the asymptote reports the first sample") {
    const std::vector<double> t{0.0, 1.0, 10.0, 100.0};
    const std::vector<double> v(4, asymptote);
    CHECK(detect_equilibrium(t, v, asymptote) == 0.0);
  }

  SUBCASE("series that never rises stays undetected") {
    const std::vector<double> t{1.0, 10.0, 100.0, 1000.0};
    const std::vector<double> v(4, 0.3);
    CHECK(!detect_equilibrium(t, v, asymptote).has_value());
  }

  SUBCASE("logistic rise crossing at t = 1000 detects the first sample past 1000") {
    std::vector<double> t, v;
    for (double x = 1.0; x <= 2e5; x *= 1.15) {
      t.push_back(x);
      v.push_back(x >= 1000.0 ? threshold + 0.05 : threshold - 0.2);
    }
    const auto detected = detect_equilibrium(t, v, asymptote);
    REQUIRE(detected.has_value());
    // independent scalar scan
    std::size_t first = 0;
    while (v[first] < threshold) ++first;
    CHECK(*detected == t[first]);
    CHECK(*detected >= 1000.0);
    CHECK(*detected <= 1200.0);
  }

  SUBCASE("a dip inside the half-decade window postpones detection") {
    std::vector<double> t, v;
    for (double x = 1.0; x <= 1e5; x *= 1.1) {
      t.push_back(x);
      double value = x >= 100.0 ? threshold + 0.1 : 0.0;
      if (x > 150.0 && x < 190.0) value = threshold - 0.01;  // dip
      v.push_back(value);
    }
    const auto detected = detect_equilibrium(t, v, asymptote);
    REQUIRE(detected.has_value());
    CHECK(*detected > 150.0);
  }

  SUBCASE("window extending past the series end means not sustained") {
    const std::vector<double> t{10.0, 20.0, 30.0};
    const std::vector<double> v{threshold + 0.1, threshold + 0.1, threshold + 0.1};
    CHECK(!detect_equilibrium(t, v, asymptote).has_value());  // needs up to 10 * sqrt(10)
  }

  CHECK_THROWS_AS(detect_equilibrium(std::vector<double>{}, std::vector<double>{}, 0.6),
                  UsageError);
  CHECK_THROWS_AS(detect_equilibrium(std::vector<double>{1.0, 1.0}, std::vector<double>{0.1, 0.2},
                                     0.6),
                  UsageError);
}

TEST_CASE("estimator pair on the mode spectrum") {
  // two excited entries (the conjugate pair) out of 64
  const auto state = excite_mode<double>(1, 1.0, 64);
  auto spectrum = mode_energies(to_modes(state));
  const auto pair = evaluate_estimators(spectrum, 8);
  CHECK(pair.instantaneous.n_entries == 63);
  CHECK(pair.packet.n_entries == 8);
  CHECK(pair.instantaneous.n_eff == doctest::Approx(2.0 / 63).epsilon(1e-10));
  CHECK(pair.packet.n_eff == doctest::Approx(2.0 / 8).epsilon(1e-10));
  CHECK(pair.packet.n_eff >= pair.instantaneous.n_eff);  // packets smooth concentration
}

TEST_CASE("run_experiment") {
  const ExperimentConfig config = small_config();

  SUBCASE("is deterministic and follows the schedule") {
    const auto a = run_experiment(config);
    const auto b = run_experiment(config);
    CHECK(same_record(a, b));
    const auto schedule = sample_schedule(config.t_end, config.samples_per_decade, config.h);
    REQUIRE(a.samples.size() == schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) CHECK(a.samples[i].t == schedule[i]);
  }

  SUBCASE("injects the quoted per-oscillator energy density") {
    const auto record = run_experiment(config);
    const double omega = mode_frequency<double>(1, config.params.n_sites);
    const double expected = config.params.n_sites * omega * omega *
                            config.initial_amplitude * config.initial_amplitude / 2.0;
    // alpha-term correction is zero for the pure cosine wave
    CHECK(record.samples.front().e_total == doctest::Approx(expected).epsilon(1e-10));
    CHECK(record.max_energy_drift <= 1e-4);
  }

  SUBCASE("short horizon keeps the concentrated estimator values") {
    ExperimentConfig quick = small_config();
    quick.t_end = 0.01;  // below one step
    const auto record = run_experiment(quick);
    REQUIRE(record.samples.size() == 2);  // t = 0 and t = t_end
    CHECK(record.samples.front().t == 0.0);
    // single excited pair: 2 of 63 entries, 2 of 8 packets
    CHECK(record.samples.front().n_eff_inst == doctest::Approx(2.0 / 63).epsilon(1e-9));
    CHECK(record.samples.front().n_eff_packet == doctest::Approx(2.0 / 8).epsilon(1e-9));
    CHECK(!record.t_eq_instantaneous.has_value());
  }

  SUBCASE("spectrum sink sees every sample and reproduces the columns") {
    std::vector<EnergySpectrum<double>> spectra;
    const auto record =
        run_experiment(config, [&](const EnergySpectrum<double>& s) { spectra.push_back(s); });
    REQUIRE(spectra.size() == record.samples.size());
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      const auto pair = evaluate_estimators(spectra[i], config.packet_size);
      CHECK(pair.instantaneous.n_eff == record.samples[i].n_eff_inst);
      CHECK(pair.packet.n_eff == record.samples[i].n_eff_packet);
    }
  }

  SUBCASE("integrator blow-up aborts with a partial record") {
    ExperimentConfig wild = small_config();
    wild.initial_amplitude = 2e3;  // far beyond the cubic runaway threshold
    wild.t_end = 1000.0;
    CHECK_THROWS_AS(run_experiment(wild), RunAbortedError);
    try {
      run_experiment(wild);
    } catch (const RunAbortedError& e) {
      CHECK(!e.partial_record().samples.empty());
      CHECK(e.partial_record().samples.front().t == 0.0);
    }
  }
}

TEST_CASE("sweep") {
  const ExperimentConfig base = small_config();

  SUBCASE("a singleton sweep equals run_experiment") {
    const auto entries = sweep(base, std::vector<double>{3.0});
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].error.empty());
    REQUIRE(entries[0].record.has_value());
    ExperimentConfig solo = base;
    solo.initial_amplitude = 3.0;
    CHECK(same_record(*entries[0].record, run_experiment(solo)));
  }

  SUBCASE("per-entry failures do not abort the sweep; order is by input") {
    const auto entries = sweep(base, std::vector<double>{3.0, 2e3, 2.0});
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].amplitude == 3.0);
    CHECK(entries[1].amplitude == 2e3);
    CHECK(entries[2].amplitude == 2.0);
    CHECK(entries[0].error.empty());
    CHECK(!entries[1].error.empty());
    CHECK(entries[2].error.empty());
    CHECK(entries[0].record.has_value());
    CHECK(entries[2].record.has_value());
  }

  CHECK_THROWS_AS(sweep(base, std::vector<double>{}), UsageError);
}
