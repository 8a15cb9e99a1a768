#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fpulab/chain.hpp"
#include "fpulab/errors.hpp"
#include "fpulab/fft.hpp"
#include "fpulab/types.hpp"

namespace fpulab {

/// Normal-mode amplitudes A_k and momenta pi_k, k in [0, N). For states coming
/// from a real chain both arrays are Hermitian-symmetric: X_k = conj(X_{N-k}).
template <typename Scalar>
struct ModeState {
  ArrayXC<Scalar> amplitudes;
  ArrayXC<Scalar> momenta;

  Index size() const noexcept { return amplitudes.size(); }

  static ModeState zero(Index n) {
    return ModeState{ArrayXC<Scalar>::Zero(n), ArrayXC<Scalar>::Zero(n)};
  }
};

/// Per-mode (or per-packet) harmonic energies at one sample time.
template <typename Scalar>
struct EnergySpectrum {
  ArrayX<Scalar> energies;
  Scalar t = Scalar(0);
};

/// Dispersion of the periodic harmonic chain, omega_k = 2 sin(pi k / N).
/// The argument is folded to min(k, N-k) so conjugate mode pairs get
/// bitwise-identical frequencies.
template <typename Scalar>
Scalar mode_frequency(Index k, Index n_sites) {
  if (k < 0 || k >= n_sites)
    throw UsageError("mode index " + std::to_string(k) + " out of [0, " +
                     std::to_string(n_sites) + ")");
  const Index kf = std::min(k, n_sites - k);
  return Scalar(2) * std::sin(std::numbers::pi_v<Scalar> * Scalar(kf) / Scalar(n_sites));
}

namespace detail {

/// Largest deviation from X_k = conj(X_{N-k}); covers Im X_0 via k = 0.
template <typename Scalar>
Scalar hermitian_defect(const ArrayXC<Scalar>& x) {
  const Index n = x.size();
  Scalar worst = Scalar(0);
  for (Index k = 0; k <= n / 2; ++k) {
    const Index partner = (n - k) % n;
    worst = std::max(worst, std::abs(x(k) - std::conj(x(partner))));
  }
  return worst;
}

template <typename Scalar>
Scalar max_magnitude(const ArrayXC<Scalar>& x) {
  return x.size() == 0 ? Scalar(0) : x.abs().maxCoeff();
}

}  // namespace detail

/// Throws InvalidModeStateError if the symmetry defect exceeds
/// 1e-12 * max magnitude.
template <typename Scalar>
void validate_mode_state(const ModeState<Scalar>& modes) {
  if (modes.amplitudes.size() != modes.momenta.size())
    throw InvalidModeStateError("amplitude/momentum arrays differ in size");
  if (!modes.amplitudes.allFinite() || !modes.momenta.allFinite())
    throw InvalidModeStateError("mode state has non-finite entries");
  const Scalar scale = std::max(detail::max_magnitude(modes.amplitudes),
                                detail::max_magnitude(modes.momenta));
  const Scalar tol = Scalar(1e-12) * scale;
  const Scalar defect = std::max(detail::hermitian_defect(modes.amplitudes),
                                 detail::hermitian_defect(modes.momenta));
  if (defect > tol)
    throw InvalidModeStateError("Hermitian symmetry defect " + std::to_string(defect) +
                                " exceeds tolerance " + std::to_string(tol));
}

namespace detail {

/// Both real arrays ride one complex transform: Z = F(q + i p), then the
/// Hermitian split A_k = (Z_k + conj(Z_{N-k})) / (2 sqrt(N)) and
/// pi_k = (Z_k - conj(Z_{N-k})) / (2 i sqrt(N)). Besides halving the
/// transform work this makes the pair symmetry X_{N-k} = conj(X_k) of the
/// output bitwise exact, and A_0, pi_0 exactly real.
template <typename Scalar>
void to_modes_into(const ArrayX<Scalar>& q, const ArrayX<Scalar>& p, const FftPlan<Scalar>& plan,
                   ArrayXC<Scalar>& packed, ArrayXC<Scalar>& amplitudes,
                   ArrayXC<Scalar>& momenta) {
  const Index n = q.size();
  packed.resize(n);
  amplitudes.resize(n);
  momenta.resize(n);
  for (Index j = 0; j < n; ++j) packed(j) = std::complex<Scalar>(q(j), p(j));
  plan.forward(packed);
  const Scalar half_scale = Scalar(0.5) / std::sqrt(Scalar(n));
  for (Index k = 0; k < n; ++k) {
    const Index partner = (n - k) % n;
    const std::complex<Scalar> mirror = std::conj(packed(partner));
    const std::complex<Scalar> sum = packed(k) + mirror;
    const std::complex<Scalar> diff = packed(k) - mirror;
    amplitudes(k) = {sum.real() * half_scale, sum.imag() * half_scale};
    momenta(k) = {diff.imag() * half_scale, -diff.real() * half_scale};
  }
}

/// Inverse of the packed transform: W = F^{-1}(A + i pi) lands q in the real
/// part and p in the imaginary part (both real-valued for Hermitian input up
/// to the rounding-level residue, which is discarded with them).
template <typename Scalar>
void from_modes_into(const ArrayXC<Scalar>& amplitudes, const ArrayXC<Scalar>& momenta,
                     const FftPlan<Scalar>& plan, ArrayXC<Scalar>& packed, ArrayX<Scalar>& q,
                     ArrayX<Scalar>& p) {
  const Index n = amplitudes.size();
  packed.resize(n);
  for (Index k = 0; k < n; ++k)
    packed(k) = {amplitudes(k).real() - momenta(k).imag(),
                 amplitudes(k).imag() + momenta(k).real()};
  plan.inverse(packed);
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(n));
  q.resize(n);
  p.resize(n);
  for (Index j = 0; j < n; ++j) {
    q(j) = packed(j).real() * scale;
    p(j) = packed(j).imag() * scale;
  }
}

}  // namespace detail

/// Unitary DFT of (q, p): X_k = (1/sqrt(N)) sum_j x_j e^{+2 pi i k j / N}.
template <typename Scalar>
ModeState<Scalar> to_modes(const ChainState<Scalar>& state) {
  const Index n = state.q.size();
  if (!is_pow2(n)) throw UsageError("mode transform requires power-of-two n_sites");
  if (state.p.size() != n) throw InvalidStateError("q/p size mismatch");
  if (!state.q.allFinite() || !state.p.allFinite())
    throw InvalidStateError("chain state has non-finite entries");
  const auto plan = fft_plan<Scalar>(n);
  ModeState<Scalar> modes;
  ArrayXC<Scalar> packed;
  detail::to_modes_into(state.q, state.p, *plan, packed, modes.amplitudes, modes.momenta);
  return modes;
}

/// Inverse unitary transform back to the real chain. The imaginary residue of
/// the inverse transform is discarded after the symmetry check; the returned
/// state carries t = 0 (callers keep their own clock).
template <typename Scalar>
ChainState<Scalar> from_modes(const ModeState<Scalar>& modes) {
  validate_mode_state(modes);
  const Index n = modes.size();
  if (!is_pow2(n)) throw UsageError("mode transform requires power-of-two n_sites");
  const auto plan = fft_plan<Scalar>(n);
  ChainState<Scalar> state;
  ArrayXC<Scalar> packed;
  detail::from_modes_into(modes.amplitudes, modes.momenta, *plan, packed, state.q, state.p);
  state.t = Scalar(0);
  return state;
}

/// Harmonic energy per mode, E_k = (|pi_k|^2 + omega_k^2 |A_k|^2) / 2.
/// Summed over k this equals the quadratic part of the real-space Hamiltonian.
template <typename Scalar>
EnergySpectrum<Scalar> mode_energies(const ModeState<Scalar>& modes) {
  const Index n = modes.size();
  EnergySpectrum<Scalar> spectrum;
  spectrum.energies.resize(n);
  for (Index k = 0; k < n; ++k) {
    const Scalar w = mode_frequency<Scalar>(k, n);
    spectrum.energies(k) =
        Scalar(0.5) * (std::norm(modes.momenta(k)) + w * w * std::norm(modes.amplitudes(k)));
  }
  return spectrum;
}

/// Standing-wave initial condition: all harmonic energy on mode k, zero
/// momenta, cosine profile q_j = c cos(2 pi k j / N). The scale c is chosen so
/// the total harmonic energy is omega_k^2 amplitude^2 / 2; it splits evenly
/// over the conjugate pair (k, N-k) for 1 <= k < N/2.
template <typename Scalar>
ChainState<Scalar> excite_mode(Index k, Scalar amplitude, Index n_sites) {
  if (!is_pow2(n_sites)) throw UsageError("excite_mode requires power-of-two n_sites");
  if (k < 1 || k > n_sites / 2)
    throw UsageError("excited mode must lie in [1, N/2], got " + std::to_string(k));
  if (!std::isfinite(amplitude)) throw UsageError("amplitude must be finite");
  const Scalar c = (k == n_sites / 2)
                       ? amplitude / std::sqrt(Scalar(n_sites))
                       : amplitude * std::sqrt(Scalar(2) / Scalar(n_sites));
  ChainState<Scalar> state = ChainState<Scalar>::zero(n_sites);
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  for (Index j = 0; j < n_sites; ++j) {
    const Index m = (k * j) % n_sites;  // exact phase reduction
    state.q(j) = c * std::cos(two_pi * (Scalar(m) / Scalar(n_sites)));
  }
  return state;
}

}  // namespace fpulab
