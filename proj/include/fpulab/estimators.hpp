#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fpulab/errors.hpp"
#include "fpulab/modes.hpp"
#include "fpulab/types.hpp"

namespace fpulab {

/// Which spectrum the effective-mode-count estimator digests: the energies as
/// given, or contiguous packets of n_per_packet consecutive entries.
class EstimatorVariant {
 public:
  static EstimatorVariant instantaneous() { return EstimatorVariant(0); }
  static EstimatorVariant packets(Index n_per_packet) {
    if (n_per_packet < 1) throw UsageError("packet size must be positive");
    return EstimatorVariant(n_per_packet);
  }

  bool is_packets() const noexcept { return n_per_packet_ > 0; }
  Index packet_size() const noexcept { return n_per_packet_; }

 private:
  explicit EstimatorVariant(Index n) : n_per_packet_(n) {}
  Index n_per_packet_;
};

/// One estimator evaluation: n_eff = exp(S) / n_entries, clamped into
/// [1/n_entries, 1] (the exact-arithmetic range of the estimator).
template <typename Scalar>
struct NeffSample {
  Scalar t = Scalar(0);
  Scalar n_eff = Scalar(0);
  Scalar entropy = Scalar(0);
  Index n_entries = 0;
};

/// e_i = E_i / sum E. Entries must be finite and non-negative with at least
/// one strictly positive.
template <typename Scalar>
ArrayX<Scalar> normalize_energies(const EnergySpectrum<Scalar>& spectrum) {
  const auto& energies = spectrum.energies;
  if (!energies.allFinite() || (energies < Scalar(0)).any())
    throw InvalidDistributionError("spectrum entries must be finite and non-negative");
  const Scalar total = energies.sum();
  if (!(total > Scalar(0))) throw DegenerateSpectrumError("spectrum carries no energy");
  return energies / total;
}

/// Shannon entropy S = -sum e_i ln e_i with the 0 ln 0 := 0 convention.
/// Input must be a distribution: non-negative, summing to 1 within 1e-9.
template <typename Scalar>
Scalar spectral_entropy(const ArrayX<Scalar>& e) {
  if (!e.allFinite() || (e < Scalar(0)).any())
    throw InvalidDistributionError("distribution entries must be finite and non-negative");
  if (std::abs(e.sum() - Scalar(1)) > Scalar(1e-9))
    throw InvalidDistributionError("distribution does not sum to 1");
  Scalar s = Scalar(0);
  for (Index i = 0; i < e.size(); ++i)
    if (e(i) > Scalar(0)) s -= e(i) * std::log(e(i));
  return std::max(s, Scalar(0));
}

/// Normalized effective-mode-count estimator n_eff = exp(S) / count, where S
/// is the entropy of the per-entry energies (instantaneous) or of the packet
/// sums over contiguous blocks (packets), and count is the number of entries
/// actually fed to the entropy. Equipartition maps to 1, full concentration
/// to 1/count. Scale-invariant: the normalization divides any c > 0 out.
template <typename Scalar>
NeffSample<Scalar> n_eff(const EnergySpectrum<Scalar>& spectrum, const EstimatorVariant& variant) {
  Index count = spectrum.energies.size();
  if (count < 1) throw DegenerateSpectrumError("empty spectrum");
  Scalar entropy;
  if (variant.is_packets()) {
    const Index n = variant.packet_size();
    if (count % n != 0)
      throw UsageError("packet size " + std::to_string(n) + " must divide spectrum length " +
                       std::to_string(count));
    const Index n_packets = count / n;
    EnergySpectrum<Scalar> packed;
    packed.t = spectrum.t;
    packed.energies.resize(n_packets);
    for (Index j = 0; j < n_packets; ++j) {
      Scalar sum = Scalar(0);
      for (Index i = j * n; i < (j + 1) * n; ++i) sum += spectrum.energies(i);
      packed.energies(j) = sum;
    }
    entropy = spectral_entropy(normalize_energies(packed));
    count = n_packets;
  } else {
    entropy = spectral_entropy(normalize_energies(spectrum));
  }
  const Scalar raw = std::exp(entropy) / Scalar(count);
  NeffSample<Scalar> sample;
  sample.t = spectrum.t;
  sample.n_eff = std::clamp(raw, Scalar(1) / Scalar(count), Scalar(1));
  sample.entropy = entropy;
  sample.n_entries = count;
  return sample;
}

/// Equilibrium plateau of n_eff for independent oscillators: exp(-1/2) ~
/// 0.6065. At equilibrium each oscillator's energy (two quadratures)
/// fluctuates with variance equal to its squared mean, which depresses the
/// second-order entropy expansion by exp(-sigma^2/2) at sigma = 1,
/// independent of the chain size once it is large.
template <typename Scalar = double>
Scalar equilibrium_asymptote() {
  return std::exp(Scalar(-0.5));
}

/// Equilibrium plateau of the estimator as actually fed by the per-complex-
/// index spectrum of a real chain. Every listed entry is half of a conjugate
/// pair, so it carries m = 4 equilibrium quadratures (Re/Im of amplitude and
/// momentum); a packet of n consecutive entries carries 4n. A sum of m
/// quadratures has relative variance sigma^2 = 2/m, and the fluctuation
/// expansion gives exp(-sigma^2/2) = exp(-1/m):
///   instantaneous -> exp(-1/4) ~ 0.7788,  packets(n) -> exp(-1/(4n)).
/// These are the saturation levels a relaxation series approaches (verified
/// numerically to three digits), hence the reference for detecting when a
/// series has reached its plateau.
template <typename Scalar = double>
Scalar estimator_asymptote(const EstimatorVariant& variant) {
  const Scalar m = variant.is_packets() ? Scalar(4 * variant.packet_size()) : Scalar(4);
  return std::exp(Scalar(-1) / m);
}

}  // namespace fpulab
