#pragma once

// Parameter types and right-hand sides of the three simulated systems:
// the reduced mean-field DDE, the delay-coupled Kuramoto network and the
// delay-coupled Hindmarsh-Rose network.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dkb/errors.hpp"

namespace dkb {

using Complex = std::complex<double>;
inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// (omega0, delta, k, tau). All four are validated on construction.
class SystemParams {
 public:
  SystemParams(double omega0, double delta, double k, double tau)
      : omega0_(omega0), delta_(delta), k_(k), tau_(tau) {
    if (!(omega0 > 0.0) || !std::isfinite(omega0))
      throw InvalidParameter("omega0 must be positive, got " + std::to_string(omega0));
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw InvalidParameter("delta must be positive, got " + std::to_string(delta));
    if (!(k > 0.0) || !std::isfinite(k))
      throw InvalidParameter("k must be positive, got " + std::to_string(k));
    if (!(tau >= 0.0) || !std::isfinite(tau))
      throw InvalidParameter("tau must be non-negative, got " + std::to_string(tau));
  }

  double omega0() const noexcept { return omega0_; }
  double delta() const noexcept { return delta_; }
  double k() const noexcept { return k_; }
  double tau() const noexcept { return tau_; }

  SystemParams with_k(double k) const { return {omega0_, delta_, k, tau_}; }
  SystemParams with_tau(double tau) const { return {omega0_, delta_, k_, tau}; }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;

 private:
  double omega0_;
  double delta_;
  double k_;
  double tau_;
};

/// Mean field r(t) on the reduced manifold.
using ComplexState = Complex;

/// Phases and natural frequencies of a finite Kuramoto network.
class NetworkState {
 public:
  NetworkState(std::vector<double> phases, std::vector<double> frequencies)
      : phases_(std::move(phases)), frequencies_(std::move(frequencies)) {
    if (phases_.size() != frequencies_.size())
      throw InvalidParameter("phases and frequencies must have equal length");
    for (double& th : phases_) th = wrap_phase(th);
  }

  std::size_t size() const noexcept { return phases_.size(); }
  std::span<const double> phases() const noexcept { return phases_; }
  std::span<const double> frequencies() const noexcept { return frequencies_; }

  void set_phases(std::span<const double> phases) {
    if (phases.size() != phases_.size()) throw InvalidParameter("phase vector length mismatch");
    for (std::size_t i = 0; i < phases.size(); ++i) phases_[i] = wrap_phase(phases[i]);
  }

  static double wrap_phase(double theta) {
    double w = std::fmod(theta, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
  }

 private:
  std::vector<double> phases_;
  std::vector<double> frequencies_;
};

/// Hindmarsh-Rose network state; the four sequences share one length.
struct HRState {
  std::vector<double> x, y, z;
  std::vector<double> currents;

  std::size_t size() const noexcept { return x.size(); }

  void validate() const {
    const std::size_t n = x.size();
    if (y.size() != n || z.size() != n || currents.size() != n)
      throw InvalidParameter("HRState sequences must share one length");
  }
};

struct HRDerivative {
  std::vector<double> dx, dy, dz;
};

// ---------------------------------------------------------------------------
// Right-hand sides

/// r' = -(i omega0 + delta) r + (k/2) r_tau - (k/2) conj(r_tau) r^2
inline ComplexState reduced_rhs(ComplexState r_now, ComplexState r_delayed, const SystemParams& p) {
  const double half_k = 0.5 * p.k();
  return -Complex(p.delta(), p.omega0()) * r_now + half_k * r_delayed -
         half_k * std::conj(r_delayed) * r_now * r_now;
}

/// Discrete order parameter (1/N) sum exp(i theta_j), summed in index order.
inline Complex order_parameter(std::span<const double> phases) {
  if (phases.empty()) return {0.0, 0.0};
  double re = 0.0;
  double im = 0.0;
  for (double th : phases) {
    re += std::cos(th);
    im += std::sin(th);
  }
  const double inv_n = 1.0 / static_cast<double>(phases.size());
  return {re * inv_n, im * inv_n};
}

/// Kuramoto phase velocities in mean-field form: omega_i + k Im(z_tau exp(-i theta_i)).
/// `phases` and `delayed_phases` need not be reduced modulo 2 pi.
inline void kuramoto_rhs_raw(std::span<const double> phases, std::span<const double> delayed_phases,
                             std::span<const double> frequencies, double k, std::span<double> out) {
  const std::size_t n = phases.size();
  if (delayed_phases.size() != n || frequencies.size() != n || out.size() != n)
    throw InvalidParameter("kuramoto_rhs: length mismatch");
  const Complex z = order_parameter(delayed_phases);
  for (std::size_t i = 0; i < n; ++i) {
    // Im(z e^{-i th}) = z.im cos th - z.re sin th
    out[i] = frequencies[i] + k * (z.imag() * std::cos(phases[i]) - z.real() * std::sin(phases[i]));
  }
}

inline std::vector<double> kuramoto_rhs(const NetworkState& state, std::span<const double> delayed_phases,
                                        const SystemParams& p) {
  if (delayed_phases.size() != state.size())
    throw InvalidParameter("kuramoto_rhs: delayed_phases has length " + std::to_string(delayed_phases.size()) +
                           ", expected " + std::to_string(state.size()));
  std::vector<double> out(state.size());
  kuramoto_rhs_raw(state.phases(), delayed_phases, state.frequencies(), p.k(), out);
  return out;
}

/// Hindmarsh-Rose vector field with diffusive delayed coupling in z.
/// Layout of the flat form: [x_0..x_{N-1}, y_0.., z_0..].
inline void hr_rhs_raw(std::span<const double> state, std::span<const double> delayed_z,
                       std::span<const double> currents, double k, std::span<double> out) {
  const std::size_t n = currents.size();
  if (state.size() != 3 * n || delayed_z.size() != n || out.size() != 3 * n)
    throw InvalidParameter("hr_rhs: length mismatch");
  double zsum = 0.0;
  for (double v : delayed_z) zsum += v;
  const double zbar = zsum / static_cast<double>(n);
  const double* x = state.data();
  const double* y = x + n;
  const double* z = y + n;
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    out[j] = y[j] - xj * xj * xj + 3.0 * xj * xj - z[j] + 3.0;
    out[n + j] = 1.0 - 5.0 * xj * xj - y[j];
    out[2 * n + j] = 0.006 * (4.0 * (xj + currents[j]) - z[j]) + k * (zbar - z[j]);
  }
}

inline HRDerivative hr_rhs(const HRState& s, std::span<const double> delayed_z, double k) {
  s.validate();
  const std::size_t n = s.size();
  if (delayed_z.size() != n) throw InvalidParameter("hr_rhs: delayed_z length mismatch");
  std::vector<double> flat(3 * n);
  std::copy(s.x.begin(), s.x.end(), flat.begin());
  std::copy(s.y.begin(), s.y.end(), flat.begin() + static_cast<std::ptrdiff_t>(n));
  std::copy(s.z.begin(), s.z.end(), flat.begin() + static_cast<std::ptrdiff_t>(2 * n));
  std::vector<double> out(3 * n);
  hr_rhs_raw(flat, delayed_z, s.currents, k, out);
  HRDerivative d;
  d.dx.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n));
  d.dy.assign(out.begin() + static_cast<std::ptrdiff_t>(n), out.begin() + static_cast<std::ptrdiff_t>(2 * n));
  d.dz.assign(out.begin() + static_cast<std::ptrdiff_t>(2 * n), out.end());
  return d;
}

// ---------------------------------------------------------------------------
// Sampling

enum class Sampling { quantile, random };

inline std::string to_string(Sampling s) { return s == Sampling::quantile ? "quantile" : "random"; }

namespace detail {
// 53-bit uniform in [0, 1); fixed so results do not depend on the standard library.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace detail

/// Natural frequencies from the Lorentzian with median omega0 and half-width delta.
inline std::vector<double> lorentzian_frequencies(std::size_t n, double omega0, double delta,
                                                  Sampling mode = Sampling::quantile, std::uint64_t seed = 0) {
  std::vector<double> w(n);
  if (mode == Sampling::quantile) {
    for (std::size_t i = 1; i <= n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n + 1);
      w[i - 1] = omega0 + delta * std::tan(std::numbers::pi * (u - 0.5));
    }
  } else {
    std::mt19937_64 rng(seed);
    for (auto& wi : w) {
      double u = detail::uniform01(rng);
      while (u <= 0.0) u = detail::uniform01(rng);
      wi = omega0 + delta * std::tan(std::numbers::pi * (u - 0.5));
    }
  }
  return w;
}

/// Gaussian samples via Box-Muller; `variance` is a variance, not a standard deviation.
inline std::vector<double> gaussian_samples(std::size_t n, double mean, double variance, std::uint64_t seed) {
  if (variance < 0.0) throw InvalidParameter("variance must be non-negative");
  std::mt19937_64 rng(seed);
  const double sd = std::sqrt(variance);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; i += 2) {
    double u1 = detail::uniform01(rng);
    while (u1 <= 0.0) u1 = detail::uniform01(rng);
    const double u2 = detail::uniform01(rng);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    out[i] = mean + sd * rad * std::cos(kTwoPi * u2);
    if (i + 1 < n) out[i + 1] = mean + sd * rad * std::sin(kTwoPi * u2);
  }
  return out;
}

}  // namespace dkb
