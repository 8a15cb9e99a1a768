#pragma once

#include <cmath>
#include <string>

#include "fpulab/errors.hpp"
#include "fpulab/types.hpp"

namespace fpulab {

/// Chain size and anharmonic couplings of the nearest-neighbour potential
/// V(d) = d^2/2 + alpha d^3/3 + beta d^4/4.
template <typename Scalar>
struct ModelParams {
  Index n_sites = 512;
  Scalar alpha = Scalar(0.25);  ///< cubic coupling
  Scalar beta = Scalar(0);      ///< quartic coupling

  /// Throws UsageError on n_sites < 3 or non-finite/negative couplings.
  /// Power-of-two n_sites is required only where the mode transform enters;
  /// real-space energies and forces work for any n_sites >= 3.
  void validate() const {
    if (n_sites < 3) throw UsageError("n_sites: must be at least 3");
    if (!(std::isfinite(alpha) && alpha >= Scalar(0)))
      throw UsageError("alpha: must be finite and non-negative");
    if (!(std::isfinite(beta) && beta >= Scalar(0)))
      throw UsageError("beta: must be finite and non-negative");
  }
};

/// Positions and momenta of the periodic chain at one instant. Unit masses;
/// index arithmetic is modulo n_sites (q_0 == q_N).
template <typename Scalar>
struct ChainState {
  ArrayX<Scalar> q;
  ArrayX<Scalar> p;
  Scalar t = Scalar(0);

  static ChainState zero(Index n) {
    return ChainState{ArrayX<Scalar>::Zero(n), ArrayX<Scalar>::Zero(n), Scalar(0)};
  }
};

/// Throws InvalidStateError unless the state has n_sites finite entries per array.
template <typename Scalar>
void validate_state(const ChainState<Scalar>& state, const ModelParams<Scalar>& params) {
  if (state.q.size() != params.n_sites || state.p.size() != params.n_sites)
    throw InvalidStateError("chain state size does not match n_sites (" +
                            std::to_string(state.q.size()) + "," +
                            std::to_string(state.p.size()) + " vs " +
                            std::to_string(params.n_sites) + ")");
  if (!state.q.allFinite() || !state.p.allFinite() || !std::isfinite(state.t))
    throw InvalidStateError("chain state has non-finite entries");
}

namespace detail {

/// d_j = q_j - q_{j-1}, cyclic.
template <typename Scalar>
void bond_differences_into(const ArrayX<Scalar>& q, ArrayX<Scalar>& d) {
  const Index n = q.size();
  d.resize(n);
  d(0) = q(0) - q(n - 1);
  d.tail(n - 1) = q.tail(n - 1) - q.head(n - 1);
}

/// Scratch buffers so per-step force evaluation allocates nothing.
template <typename Scalar>
struct ForceWork {
  ArrayX<Scalar> d;   // bond differences
  ArrayX<Scalar> vp;  // dV/dd per bond
};

/// f_j = V'(d_{j+1}) - V'(d_j) with V'(d) = d + alpha d^2 + beta d^3
/// (linear term dropped when include_linear is false).
template <typename Scalar>
void force_into(const ArrayX<Scalar>& q, const ModelParams<Scalar>& params,
                bool include_linear, ForceWork<Scalar>& work, ArrayX<Scalar>& f) {
  const Index n = q.size();
  bond_differences_into(q, work.d);
  auto& d = work.d;
  auto& vp = work.vp;
  if (include_linear)
    vp = d;
  else
    vp = ArrayX<Scalar>::Zero(n);
  if (params.alpha != Scalar(0)) vp += params.alpha * d.square();
  if (params.beta != Scalar(0)) vp += params.beta * d.cube();
  f.resize(n);
  f.head(n - 1) = vp.tail(n - 1) - vp.head(n - 1);
  f(n - 1) = vp(0) - vp(n - 1);
}

}  // namespace detail

/// Bond differences d_j = q_j - q_{j-1} of a periodic position array.
template <typename Scalar>
ArrayX<Scalar> bond_differences(const ArrayX<Scalar>& q) {
  ArrayX<Scalar> d;
  detail::bond_differences_into(q, d);
  return d;
}

/// E = sum p^2/2 + sum d^2/2 + alpha/3 sum d^3 (+ beta/4 sum d^4), d the cyclic
/// bond differences. Exact sum over all n_sites sites and bonds.
template <typename Scalar>
Scalar total_energy(const ChainState<Scalar>& state, const ModelParams<Scalar>& params) {
  validate_state(state, params);
  const ArrayX<Scalar> d = bond_differences(state.q);
  Scalar e = Scalar(0.5) * (state.p.square().sum() + d.square().sum());
  if (params.alpha != Scalar(0)) e += (params.alpha / Scalar(3)) * d.cube().sum();
  if (params.beta != Scalar(0)) e += (params.beta / Scalar(4)) * d.square().square().sum();
  return e;
}

/// Full force -dH/dq. Components sum to zero (translation invariance).
template <typename Scalar>
ArrayX<Scalar> force(const ChainState<Scalar>& state, const ModelParams<Scalar>& params) {
  validate_state(state, params);
  detail::ForceWork<Scalar> work;
  ArrayX<Scalar> f;
  detail::force_into(state.q, params, /*include_linear=*/true, work, f);
  return f;
}

/// Force of the cubic potential alone: -dV3/dq_k = -alpha [(q_k - q_{k-1})^2 - (q_{k+1} - q_k)^2].
template <typename Scalar>
ArrayX<Scalar> cubic_force(const ChainState<Scalar>& state, const ModelParams<Scalar>& params) {
  validate_state(state, params);
  ModelParams<Scalar> cubic_only = params;
  cubic_only.beta = Scalar(0);
  detail::ForceWork<Scalar> work;
  ArrayX<Scalar> f;
  detail::force_into(state.q, cubic_only, /*include_linear=*/false, work, f);
  return f;
}

}  // namespace fpulab
