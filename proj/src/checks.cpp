#include "fpulab/checks.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "fpulab/chain.hpp"
#include "fpulab/integrators.hpp"
#include "fpulab/modes.hpp"

namespace fpulab {

namespace {

ChainState<double> random_state(std::mt19937_64& rng, Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ChainState<double> s = ChainState<double>::zero(n);
  for (Index i = 0; i < n; ++i) {
    s.q(i) = u(rng);
    s.p(i) = u(rng);
  }
  return s;
}

std::string scientific(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

CheckResult check_round_trip() {
  std::mt19937_64 rng(7);
  double worst = 0;
  for (Index n : {Index(8), Index(64), Index(512)}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto s = random_state(rng, n, 1.0);
      const auto back = from_modes(to_modes(s));
      worst = std::max(worst, (back.q - s.q).abs().maxCoeff());
      worst = std::max(worst, (back.p - s.p).abs().maxCoeff());
    }
  }
  return {"transform round-trip", worst <= 1e-12,
          "max component error " + scientific(worst) + " (tolerance 1e-12)"};
}

CheckResult check_parseval() {
  std::mt19937_64 rng(11);
  ModelParams<double> harmonic;
  harmonic.n_sites = 64;
  harmonic.alpha = 0;
  harmonic.beta = 0;
  double worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = random_state(rng, harmonic.n_sites, 1.0);
    const double quadratic = total_energy(s, harmonic);
    const double mode_sum = mode_energies(to_modes(s)).energies.sum();
    worst = std::max(worst, std::abs(mode_sum - quadratic) / quadratic);
  }
  return {"Parseval energy identity", worst <= 1e-10,
          "max relative error " + scientific(worst) + " (tolerance 1e-10)"};
}

CheckResult check_force_gradient() {
  std::mt19937_64 rng(13);
  double worst = 0;
  for (Index n : {Index(3), Index(8), Index(32)}) {
    ModelParams<double> params;
    params.n_sites = n;
    params.alpha = 0.25;
    params.beta = 0.1;
    for (int rep = 0; rep < 10; ++rep) {
      ChainState<double> s = random_state(rng, n, 0.5);
      const ArrayX<double> f = force(s, params);
      const double floor = std::max(1.0, f.abs().maxCoeff());
      const double eps = 1e-6;
      for (Index j = 0; j < n; ++j) {
        ChainState<double> plus = s, minus = s;
        plus.q(j) += eps;
        minus.q(j) -= eps;
        const double grad = (total_energy(plus, params) - total_energy(minus, params)) / (2 * eps);
        worst = std::max(worst, std::abs(f(j) + grad) / floor);
      }
    }
  }
  return {"force vs energy gradient", worst <= 1e-6,
          "max relative deviation " + scientific(worst) + " (tolerance 1e-6)"};
}

CheckResult check_splitting_order() {
  std::mt19937_64 rng(17);
  ModelParams<double> params;
  params.n_sites = 8;
  params.alpha = 0.25;
  const ChainState<double> initial = random_state(rng, params.n_sites, 0.1);
  const double t_end = 10.0;
  const double h = 0.25;

  auto run = [&](double step) {
    return integrate<double>(initial, params, IntegratorKind::spectral_split,
                             StepSize<double>{step}, t_end);
  };
  const auto ref = run(h / 16);
  auto error_vs_ref = [&](const ChainState<double>& s) {
    return std::sqrt((s.q - ref.q).square().sum() + (s.p - ref.p).square().sum());
  };
  const double e1 = error_vs_ref(run(h));
  const double e2 = error_vs_ref(run(h / 2));
  const double ratio = e1 / e2;
  const bool ok = ratio >= 3.4 && ratio <= 4.6;
  return {"split-step convergence order", ok,
          "error ratio e(h)/e(h/2) = " + scientific(ratio) + " (expected in [3.4, 4.6])"};
}

}  // namespace

std::vector<CheckResult> run_self_checks() {
  return {check_round_trip(), check_parseval(), check_force_gradient(), check_splitting_order()};
}

}  // namespace fpulab
