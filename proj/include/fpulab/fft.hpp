#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "fpulab/errors.hpp"
#include "fpulab/types.hpp"

namespace fpulab {

/// Iterative radix-2 complex transform for power-of-two sizes. Plans hold the
/// bit-reversal permutation and twiddle table and are immutable after
/// construction, so one plan may be shared across threads.
///
/// forward() applies x_k <- sum_j x_j e^{+2 pi i k j / n} (unnormalized);
/// inverse() uses the conjugate kernel. inverse(forward(x)) == n * x.
///
/// Butterflies run in extended precision and only the final write-back rounds
/// to Scalar. A plain-Scalar transform is a fixed linear map whose per-mode
/// amplitude bias (~1e-15) compounds linearly when a trajectory round-trips
/// through it every step; rounding only at the boundary leaves a
/// state-dependent error that random-walks instead.
template <typename Scalar>
class FftPlan {
 public:
  using Wide = long double;

  explicit FftPlan(Index n) : n_(n) {
    if (!is_pow2(n)) throw UsageError("fft size must be a power of two, got " + std::to_string(n));
    bitrev_.resize(static_cast<std::size_t>(n));
    bitrev_[0] = 0;
    for (Index i = 1, j = 0; i < n; ++i) {
      Index bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j |= bit;
      bitrev_[static_cast<std::size_t>(i)] = j;
    }
    // Twiddles for stage length L live at offset L/2 - 1: w_j = e^{+2 pi i j / L}.
    twiddles_.reserve(static_cast<std::size_t>(n - 1));
    constexpr Wide two_pi = Wide(2) * std::numbers::pi_v<Wide>;
    for (Index len = 2; len <= n; len <<= 1) {
      for (Index j = 0; j < len / 2; ++j) {
        const Wide theta = two_pi * static_cast<Wide>(j) / static_cast<Wide>(len);
        twiddles_.emplace_back(std::cos(theta), std::sin(theta));
      }
    }
  }

  Index size() const noexcept { return n_; }

  void forward(ArrayXC<Scalar>& x) const { transform(x, /*conjugate=*/false); }
  void inverse(ArrayXC<Scalar>& x) const { transform(x, /*conjugate=*/true); }

 private:
  void transform(ArrayXC<Scalar>& x, bool conjugate) const {
    if (x.size() != n_) throw UsageError("fft input size does not match plan");
    thread_local std::vector<std::complex<Wide>> buf;
    buf.resize(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) {
      const std::complex<Scalar> v = x(bitrev_[static_cast<std::size_t>(i)]);
      buf[static_cast<std::size_t>(i)] = {static_cast<Wide>(v.real()), static_cast<Wide>(v.imag())};
    }
    std::size_t tw = 0;
    for (Index len = 2; len <= n_; len <<= 1) {
      const Index half = len / 2;
      for (Index base = 0; base < n_; base += len) {
        for (Index j = 0; j < half; ++j) {
          const std::complex<Wide> w =
              conjugate ? std::conj(twiddles_[tw + static_cast<std::size_t>(j)])
                        : twiddles_[tw + static_cast<std::size_t>(j)];
          std::complex<Wide>& u = buf[static_cast<std::size_t>(base + j)];
          std::complex<Wide>& v = buf[static_cast<std::size_t>(base + j + half)];
          const std::complex<Wide> t = v * w;
          v = u - t;
          u += t;
        }
      }
      tw += static_cast<std::size_t>(half);
    }
    for (Index i = 0; i < n_; ++i)
      x(i) = {static_cast<Scalar>(buf[static_cast<std::size_t>(i)].real()),
              static_cast<Scalar>(buf[static_cast<std::size_t>(i)].imag())};
  }

  Index n_;
  std::vector<Index> bitrev_;
  std::vector<std::complex<Wide>> twiddles_;
};

/// Process-wide plan cache keyed by size.
template <typename Scalar>
std::shared_ptr<const FftPlan<Scalar>> fft_plan(Index n) {
  static std::mutex mutex;
  static std::map<Index, std::shared_ptr<const FftPlan<Scalar>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const FftPlan<Scalar>>(n);
  return slot;
}

}  // namespace fpulab
