#include "fpulab/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fpulab/version.hpp"

namespace fpulab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw UsageError(key + ": expected an integer, got '" + text + "'");
  return value;
}

double parse_real_for(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size())
    throw UsageError(key + ": expected a real number, got '" + text + "'");
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

double sample_drift(const RelaxationSample& s, double e0) {
  return e0 != 0.0 ? std::abs(s.e_total - e0) / std::abs(e0) : std::abs(s.e_total);
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

double parse_real(const std::string& text) { return parse_real_for("value", text); }

std::map<std::string, std::string> load_key_value_file(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key=value, got '" + text + "'");
    values[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
  }
  return values;
}

void ConfigBuilder::set(const std::string& key, const std::string& value) {
  std::string k = key;
  std::replace(k.begin(), k.end(), '-', '_');
  static const char* known[] = {"n",     "alpha", "beta",  "mode",
                                "amplitude", "integrator", "h", "t_end",
                                "samples_per_decade", "packet_size"};
  if (std::find_if(std::begin(known), std::end(known),
                   [&](const char* s) { return k == s; }) == std::end(known))
    throw UsageError("unknown config key '" + key + "'");
  values_[k] = value;
}

void ConfigBuilder::load_file(const std::filesystem::path& path) {
  for (const auto& [key, value] : load_key_value_file(path)) set(key, value);
}

ExperimentConfig ConfigBuilder::build() const {
  ExperimentConfig config;
  if (auto it = values_.find("integrator"); it != values_.end()) {
    if (it->second == "leapfrog")
      config.integrator = IntegratorKind::leapfrog;
    else if (it->second == "spectral" || it->second == "spectral_split")
      config.integrator = IntegratorKind::spectral_split;
    else
      throw UsageError("integrator: expected 'leapfrog' or 'spectral', got '" + it->second + "'");
  }
  config.h = config.integrator == IntegratorKind::leapfrog ? 0.02 : 1.0;
  for (const auto& [key, value] : values_) {
    if (key == "n")
      config.params.n_sites = parse_int(key, value);
    else if (key == "alpha")
      config.params.alpha = parse_real_for(key, value);
    else if (key == "beta")
      config.params.beta = parse_real_for(key, value);
    else if (key == "mode")
      config.initial_mode = parse_int(key, value);
    else if (key == "amplitude")
      config.initial_amplitude = parse_real_for(key, value);
    else if (key == "h")
      config.h = parse_real_for(key, value);
    else if (key == "t_end")
      config.t_end = parse_real_for(key, value);
    else if (key == "samples_per_decade")
      config.samples_per_decade = static_cast<int>(parse_int(key, value));
    else if (key == "packet_size")
      config.packet_size = parse_int(key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig config_from_manifest(const std::filesystem::path& path) {
  ConfigBuilder builder;
  static const char* config_keys[] = {"n",     "alpha", "beta",  "mode",
                                      "amplitude", "integrator", "h", "t_end",
                                      "samples_per_decade", "packet_size"};
  for (const auto& [key, value] : load_key_value_file(path)) {
    if (std::find_if(std::begin(config_keys), std::end(config_keys),
                     [&](const char* s) { return key == s; }) != std::end(config_keys))
      builder.set(key, value);
  }
  return builder.build();
}

void write_series(const RelaxationRecord& record, const std::filesystem::path& destination) {
  std::ofstream out = open_for_write(destination);
  out << "t,n_eff_inst,n_eff_packet,e_total,drift\n";
  const double e0 = record.samples.empty() ? 0.0 : record.samples.front().e_total;
  for (const auto& s : record.samples) {
    out << format_real(s.t) << ',' << format_real(s.n_eff_inst) << ','
        << format_real(s.n_eff_packet) << ',' << format_real(s.e_total) << ','
        << format_real(sample_drift(s, e0)) << '\n';
  }
  out << "# t_eq_inst "
      << (record.t_eq_instantaneous ? format_real(*record.t_eq_instantaneous) : "none") << '\n';
  out << "# t_eq_packet " << (record.t_eq_packet ? format_real(*record.t_eq_packet) : "none")
      << '\n';
  out << "# max_drift " << format_real(record.max_energy_drift) << '\n';
  if (!out) throw IoError("write failed: " + destination.string());
}

RelaxationRecord read_series(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t,n_eff_inst,n_eff_packet,e_total,drift")
    throw IoError(path.string() + ": missing or wrong series header");
  RelaxationRecord record;
  while (std::getline(in, line)) {
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      std::istringstream footer(text.substr(1));
      std::string key, value;
      footer >> key >> value;
      if (key == "t_eq_inst" && value != "none")
        record.t_eq_instantaneous = parse_real_for(key, value);
      else if (key == "t_eq_packet" && value != "none")
        record.t_eq_packet = parse_real_for(key, value);
      else if (key == "max_drift")
        record.max_energy_drift = parse_real_for(key, value);
      continue;
    }
    const auto fields = split(text, ',');
    if (fields.size() != 5) throw IoError(path.string() + ": expected 5 columns, got row '" + text + "'");
    RelaxationSample s;
    s.t = parse_real_for("t", fields[0]);
    s.n_eff_inst = parse_real_for("n_eff_inst", fields[1]);
    s.n_eff_packet = parse_real_for("n_eff_packet", fields[2]);
    s.e_total = parse_real_for("e_total", fields[3]);
    record.samples.push_back(s);
  }
  return record;
}

void write_spectra(const std::vector<EnergySpectrum<double>>& spectra,
                   const std::filesystem::path& destination) {
  std::ofstream out = open_for_write(destination);
  const Index n = spectra.empty() ? 0 : spectra.front().energies.size();
  out << 't';
  for (Index k = 0; k < n; ++k) out << ",E" << k;
  out << '\n';
  for (const auto& spectrum : spectra) {
    if (spectrum.energies.size() != n)
      throw UsageError("all spectra must share one length");
    out << format_real(spectrum.t);
    for (Index k = 0; k < n; ++k) out << ',' << format_real(spectrum.energies(k));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + destination.string());
}

std::vector<EnergySpectrum<double>> read_spectra(const std::filesystem::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty spectra file");
  const auto header = split(trim(line), ',');
  if (header.empty() || header[0] != "t")
    throw IoError(path.string() + ": missing spectra header");
  const std::size_t n = header.size() - 1;
  std::vector<EnergySpectrum<double>> spectra;
  while (std::getline(in, line)) {
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto fields = split(text, ',');
    if (fields.size() != n + 1)
      throw IoError(path.string() + ": expected " + std::to_string(n + 1) + " columns");
    EnergySpectrum<double> spectrum;
    spectrum.t = parse_real_for("t", fields[0]);
    spectrum.energies.resize(static_cast<Index>(n));
    for (std::size_t k = 0; k < n; ++k)
      spectrum.energies(static_cast<Index>(k)) = parse_real_for(header[k + 1], fields[k + 1]);
    spectra.push_back(std::move(spectrum));
  }
  return spectra;
}

void write_sweep_summary(const std::vector<SweepEntry>& entries,
                         const std::filesystem::path& destination) {
  std::ofstream out = open_for_write(destination);
  out << "amplitude,t_eq_inst,t_eq_packet,max_drift\n";
  for (const auto& entry : entries) {
    out << format_real(entry.amplitude) << ',';
    if (entry.record) {
      const auto& r = *entry.record;
      out << (r.t_eq_instantaneous ? format_real(*r.t_eq_instantaneous) : "") << ','
          << (r.t_eq_packet ? format_real(*r.t_eq_packet) : "") << ','
          << format_real(r.max_energy_drift) << '\n';
    } else {
      out << ",,\n";
    }
  }
  for (const auto& entry : entries)
    if (!entry.error.empty())
      out << "# amplitude " << format_real(entry.amplitude) << " failed: " << entry.error << '\n';
  if (!out) throw IoError("write failed: " + destination.string());
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& destination) {
  std::ofstream out = open_for_write(destination);
  const auto& c = manifest.config;
  out << "version=" << manifest.version << '\n';
  out << "n=" << c.params.n_sites << '\n';
  out << "alpha=" << format_real(c.params.alpha) << '\n';
  out << "beta=" << format_real(c.params.beta) << '\n';
  out << "mode=" << c.initial_mode << '\n';
  out << "amplitude=" << format_real(c.initial_amplitude) << '\n';
  out << "integrator=" << to_string(c.integrator) << '\n';
  out << "h=" << format_real(c.h) << '\n';
  out << "t_end=" << format_real(c.t_end) << '\n';
  out << "samples_per_decade=" << c.samples_per_decade << '\n';
  out << "packet_size=" << c.packet_size << '\n';
  out << "started=" << manifest.started << '\n';
  out << "finished=" << manifest.finished << '\n';
  out << "outputs=";
  for (std::size_t i = 0; i < manifest.outputs.size(); ++i)
    out << (i ? "," : "") << manifest.outputs[i];
  out << '\n';
  if (!out) throw IoError("write failed: " + destination.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace fpulab
