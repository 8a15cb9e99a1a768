#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "fpulab/io.hpp"
#include "fpulab/version.hpp"

using namespace fpulab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("fpulab_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

RelaxationRecord demo_record() {
  RelaxationRecord record;
  record.samples = {{0.0, 2.0 / 63, 0.25, 1.2345678901234567},
                    {0.02, 0.1, 0.3, 1.2345678901234569},
                    {1.0, 0.62, 0.95, 1.2345678901234444}};
  record.t_eq_instantaneous = 0.98765432109876543;
  record.t_eq_packet = std::nullopt;
  record.max_energy_drift = 1.0e-11;
  return record;
}

}  // namespace

TEST_CASE("17-digit rendering is lossless") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> exp10(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double value = u(rng) * std::pow(10.0, exp10(rng));
    CHECK(parse_real(format_real(value)) == value);
  }
  CHECK(parse_real(format_real(0.0)) == 0.0);
  CHECK(parse_real(format_real(0.1)) == 0.1);
  CHECK(parse_real("1e4") == 1e4);
  CHECK_THROWS_AS(parse_real("12x"), UsageError);
  CHECK_THROWS_AS(parse_real(""), UsageError);
}

TEST_CASE("config builder defaults and overrides") {
  SUBCASE("empty input yields the documented defaults") {
    const auto config = ConfigBuilder{}.build();
    CHECK(config.params.n_sites == 512);
    CHECK(config.params.alpha == 0.25);
    CHECK(config.params.beta == 0.0);
    CHECK(config.initial_mode == 1);
    CHECK(config.initial_amplitude == 40.0);
    CHECK(config.integrator == IntegratorKind::leapfrog);
    CHECK(config.h == 0.02);
    CHECK(config.t_end == 1e4);
    CHECK(config.samples_per_decade == 20);
    CHECK(config.packet_size == 8);
  }

  SUBCASE("the spectral integrator switches the default step to 1") {
    ConfigBuilder builder;
    builder.set("integrator", "spectral");
    CHECK(builder.build().h == 1.0);
    builder.set("h", "0.5");
    CHECK(builder.build().h == 0.5);
  }

  SUBCASE("later values win; hyphens are accepted in keys") {
    ConfigBuilder builder;
    builder.set("amplitude", "10");
    builder.set("amplitude", "20");
    builder.set("t-end", "123.5");
    const auto config = builder.build();
    CHECK(config.initial_amplitude == 20.0);
    CHECK(config.t_end == 123.5);
  }

  SUBCASE("errors name the offending key") {
    ConfigBuilder builder;
    CHECK_THROWS_WITH_AS(builder.set("frequency", "3"), doctest::Contains("frequency"),
                         UsageError);
    builder.set("n", "500");
    CHECK_THROWS_WITH_AS(builder.build(), doctest::Contains("power of two"), UsageError);
    builder.set("n", "512");
    builder.set("alpha", "abc");
    CHECK_THROWS_WITH_AS(builder.build(), doctest::Contains("alpha"), UsageError);
    builder.set("alpha", "0.25");
    builder.set("integrator", "verlet");
    CHECK_THROWS_WITH_AS(builder.build(), doctest::Contains("integrator"), UsageError);
  }

  SUBCASE("leapfrog stability bound is enforced at build time") {
    ConfigBuilder builder;
    builder.set("h", "1.5");
    builder.set("integrator", "leapfrog");
    CHECK_THROWS_AS(builder.build(), UsageError);
  }
}

TEST_CASE("config file loading and flag precedence") {
  TempDir dir;
  const fs::path file = dir.path / "run.cfg";
  {
    std::ofstream out(file);
    out << "# demo config\n"
        << "n = 64\n"
        << "amplitude = 7.5\n"
        << "\n"
        << "t_end = 250\n";
  }
  ConfigBuilder builder;
  builder.load_file(file);
  builder.set("amplitude", "9.0");  // flag overrides the file
  const auto config = builder.build();
  CHECK(config.params.n_sites == 64);
  CHECK(config.initial_amplitude == 9.0);
  CHECK(config.t_end == 250.0);

  const fs::path bad = dir.path / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "this line has no equals sign\n";
  }
  CHECK_THROWS_AS(ConfigBuilder{}.load_file(bad), UsageError);
  CHECK_THROWS_AS(ConfigBuilder{}.load_file(dir.path / "missing.cfg"), IoError);
}

TEST_CASE("series CSV round trip is lossless") {
  TempDir dir;
  const fs::path file = dir.path / "series.csv";
  const RelaxationRecord record = demo_record();
  write_series(record, file);

  const RelaxationRecord back = read_series(file);
  REQUIRE(back.samples.size() == record.samples.size());
  for (std::size_t i = 0; i < record.samples.size(); ++i) {
    CHECK(back.samples[i].t == record.samples[i].t);
    CHECK(back.samples[i].n_eff_inst == record.samples[i].n_eff_inst);
    CHECK(back.samples[i].n_eff_packet == record.samples[i].n_eff_packet);
    CHECK(back.samples[i].e_total == record.samples[i].e_total);
  }
  CHECK(back.t_eq_instantaneous == record.t_eq_instantaneous);
  CHECK(!back.t_eq_packet.has_value());
  CHECK(back.max_energy_drift == record.max_energy_drift);

  SUBCASE("header and schema are enforced") {
    const fs::path corrupt = dir.path / "corrupt.csv";
    {
      std::ofstream out(corrupt);
      out << "time,value\n1,2\n";
    }
    CHECK_THROWS_AS(read_series(corrupt), IoError);
  }
}

TEST_CASE("series CSV carries the documented header and footer") {
  TempDir dir;
  const fs::path file = dir.path / "series.csv";
  write_series(demo_record(), file);
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,n_eff_inst,n_eff_packet,e_total,drift");
  int data_rows = 0, footer_rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#')
      ++footer_rows;
    else if (!line.empty())
      ++data_rows;
  }
  CHECK(data_rows == 3);
  CHECK(footer_rows == 3);  // t_eq_inst, t_eq_packet, max_drift
}

TEST_CASE("spectra round trip") {
  TempDir dir;
  std::vector<EnergySpectrum<double>> spectra(3);
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    spectra[i].t = 0.25 * static_cast<double>(i);
    spectra[i].energies.resize(16);
    for (Index k = 0; k < 16; ++k) spectra[i].energies(k) = u(rng);
  }
  const fs::path file = dir.path / "spectra.csv";
  write_spectra(spectra, file);
  const auto back = read_spectra(file);
  REQUIRE(back.size() == spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    CHECK(back[i].t == spectra[i].t);
    CHECK((back[i].energies == spectra[i].energies).all());
  }
}

TEST_CASE("sweep summary") {
  TempDir dir;
  std::vector<SweepEntry> entries(2);
  entries[0].amplitude = 40.0;
  entries[0].record = demo_record();
  entries[1].amplitude = 2000.0;
  entries[1].error = "integration blew up at step 7";
  const fs::path file = dir.path / "sweep_summary.csv";
  write_sweep_summary(entries, file);

  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "amplitude,t_eq_inst,t_eq_packet,max_drift");
  std::getline(in, line);
  CHECK(line.find("40,") == 0);
  CHECK(line.find(format_real(*entries[0].record->t_eq_instantaneous)) != std::string::npos);
  std::getline(in, line);
  CHECK(line.find("2000,") == 0);
  std::getline(in, line);
  CHECK(line.find("# amplitude 2000 failed:") == 0);
}

TEST_CASE("manifest reproduces the configuration bit-exactly") {
  TempDir dir;
  ExperimentConfig config;
  config.params.n_sites = 64;
  config.params.alpha = 0.1875;
  config.initial_amplitude = 3.25;
  config.integrator = IntegratorKind::spectral_split;
  config.h = 0.75;
  config.t_end = 40.0;
  config.samples_per_decade = 10;

  RunManifest manifest;
  manifest.config = config;
  manifest.version = kVersion;
  manifest.started = utc_timestamp();
  manifest.finished = utc_timestamp();
  manifest.outputs = {"series.csv", "spectra.csv"};
  const fs::path file = dir.path / "manifest.txt";
  write_manifest(manifest, file);

  const ExperimentConfig rebuilt = config_from_manifest(file);
  CHECK(rebuilt.params.n_sites == config.params.n_sites);
  CHECK(rebuilt.params.alpha == config.params.alpha);
  CHECK(rebuilt.params.beta == config.params.beta);
  CHECK(rebuilt.integrator == config.integrator);
  CHECK(rebuilt.h == config.h);
  CHECK(rebuilt.initial_mode == config.initial_mode);
  CHECK(rebuilt.initial_amplitude == config.initial_amplitude);
  CHECK(rebuilt.t_end == config.t_end);
  CHECK(rebuilt.samples_per_decade == config.samples_per_decade);
  CHECK(rebuilt.packet_size == config.packet_size);

  // determinism: the rebuilt config reproduces the run bit-exactly
  const auto original = run_experiment(config);
  const auto replayed = run_experiment(rebuilt);
  REQUIRE(original.samples.size() == replayed.samples.size());
  for (std::size_t i = 0; i < original.samples.size(); ++i) {
    CHECK(original.samples[i].n_eff_inst == replayed.samples[i].n_eff_inst);
    CHECK(original.samples[i].e_total == replayed.samples[i].e_total);
  }
}

TEST_CASE("saved spectra reproduce the run's estimator columns exactly") {
  TempDir dir;
  ExperimentConfig config;
  config.params.n_sites = 64;
  config.initial_amplitude = 3.0;
  config.t_end = 50.0;
  config.samples_per_decade = 10;

  std::vector<EnergySpectrum<double>> spectra;
  const auto record =
      run_experiment(config, [&](const EnergySpectrum<double>& s) { spectra.push_back(s); });
  const fs::path file = dir.path / "spectra.csv";
  write_spectra(spectra, file);

  const auto loaded = read_spectra(file);
  REQUIRE(loaded.size() == record.samples.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const auto pair = evaluate_estimators(loaded[i], config.packet_size);
    CHECK(pair.instantaneous.n_eff == record.samples[i].n_eff_inst);
    CHECK(pair.packet.n_eff == record.samples[i].n_eff_packet);
  }
}

TEST_CASE("io errors carry the path") {
  CHECK_THROWS_WITH_AS(read_series("/nonexistent/series.csv"),
                       doctest::Contains("/nonexistent/series.csv"), IoError);
  CHECK_THROWS_AS(write_series(demo_record(), "/nonexistent/dir/series.csv"), IoError);
}
