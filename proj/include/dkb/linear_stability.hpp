#pragma once

// Linear stability of the incoherent state r = 0: characteristic roots,
// Hopf frequencies and delays, Hopf curves and unstable-root counts.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dkb/contour.hpp"
#include "dkb/errors.hpp"
#include "dkb/model.hpp"

namespace dkb {

enum class Branch { plus, minus };

inline std::string to_string(Branch b) { return b == Branch::plus ? "plus" : "minus"; }

inline Branch parse_branch(const std::string& s) {
  if (s == "plus" || s == "+") return Branch::plus;
  if (s == "minus" || s == "-") return Branch::minus;
  throw InvalidParameter("unknown branch '" + s + "'");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// A purely imaginary root i*beta of the characteristic equation at (k, tau).
struct HopfPoint {
  double k = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  Branch branch = Branch::plus;
  int index = 0;
};

/// lambda + (i omega0 + delta) - (k/2) exp(-lambda tau)
inline Complex characteristic_residual(Complex lambda, const SystemParams& p) {
  return lambda + Complex(p.delta(), p.omega0()) - 0.5 * p.k() * std::exp(-lambda * p.tau());
}

inline Complex characteristic_derivative(Complex lambda, const SystemParams& p) {
  return 1.0 + 0.5 * p.k() * p.tau() * std::exp(-lambda * p.tau());
}

/// Residuals of the two real equations satisfied by a Hopf point:
/// delta - (k/2) cos(beta tau) and -beta - omega0 - (k/2) sin(beta tau).
inline std::pair<double, double> hopf_system_residual(double k, double tau, double beta, double omega0,
                                                      double delta) {
  return {delta - 0.5 * k * std::cos(tau * beta), -beta - omega0 - 0.5 * k * std::sin(tau * beta)};
}

/// beta_{+/-} = -omega0 +/- sqrt(k^2/4 - delta^2); empty when k < 2 delta.
inline std::optional<std::pair<double, double>> hopf_frequencies(const SystemParams& p) {
  const double disc = 0.25 * p.k() * p.k() - p.delta() * p.delta();
  if (p.k() == 2.0 * p.delta()) return std::pair{-p.omega0(), -p.omega0()};
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  return std::pair{-p.omega0() + s, -p.omega0() - s};
}

inline double hopf_frequency(Branch branch, double k, double omega0, double delta) {
  if (!(k > 2.0 * delta)) throw NoHopfError("no Hopf frequency for k <= 2 delta");
  const double s = std::sqrt(0.25 * k * k - delta * delta);
  return branch == Branch::plus ? -omega0 + s : -omega0 - s;
}

/// Critical delay tau_j^{+/-}(k) at which i*beta_{+/-} is a characteristic root.
/// The plus family switches form where beta_+ changes sign (k^2 = 4(delta^2 + omega0^2)).
inline double hopf_delay(Branch branch, int j, double k, const SystemParams& p) {
  const double omega0 = p.omega0();
  const double delta = p.delta();
  if (!(k > 2.0 * delta))
    throw NoHopfError("k = " + std::to_string(k) + " does not exceed 2 delta = " + std::to_string(2 * delta));
  const double beta = hopf_frequency(branch, k, omega0, delta);
  if (std::abs(beta) < 1e-8) throw DegenerateFrequencyError("Hopf frequency vanishes at k = " + std::to_string(k));
  const double jd = static_cast<double>(j);
  const double pi = std::numbers::pi;
  const double phase = std::asin(std::clamp((-2.0 * beta - 2.0 * omega0) / k, -1.0, 1.0));
  double tau = 0.0;
  if (branch == Branch::plus) {
    if (k * k <= 4.0 * (delta * delta + omega0 * omega0))
      tau = (phase - 2.0 * jd * pi) / beta;
    else
      tau = (phase + 2.0 * (jd + 1.0) * pi) / beta;
  } else {
    tau = (phase - 2.0 * (jd + 1.0) * pi) / beta;
  }
  if (!(tau > 0.0))
    throw BranchIndexError("branch " + to_string(branch) + " index " + std::to_string(j) +
                           " gives non-positive delay " + std::to_string(tau));
  return tau;
}

inline HopfPoint make_hopf_point(Branch branch, int j, double k, const SystemParams& p) {
  return {k, hopf_delay(branch, j, k, p), hopf_frequency(branch, k, p.omega0(), p.delta()), branch, j};
}

/// Samples the Hopf curve (branch, j) at n_points equally spaced k values.
/// Points at a degenerate (zero) frequency are skipped.
inline std::vector<HopfPoint> hopf_curve(Branch branch, int j, Interval k_range, int n_points, const SystemParams& p) {
  if (!(k_range.hi > k_range.lo) || n_points < 2) throw InvalidParameter("hopf_curve: empty k range");
  if (!(k_range.lo > 2.0 * p.delta()))
    throw InvalidParameter("hopf_curve: k range must lie above 2 delta = " + std::to_string(2.0 * p.delta()));
  std::vector<HopfPoint> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double k = k_range.lo + k_range.width() * static_cast<double>(i) / static_cast<double>(n_points - 1);
    try {
      out.push_back(make_hopf_point(branch, j, k, p));
    } catch (const DegenerateFrequencyError&) {
    }
  }
  return out;
}

/// Hopf points of curve (branch, j) on the horizontal line tau = const, found
/// by scanning k over (2 delta, k_max] and bisecting sign changes of tau_j(k) - tau.
inline std::vector<HopfPoint> hopf_points_at_tau(Branch branch, int j, double tau, const SystemParams& p,
                                                 double k_max = 4.0, int samples = 400) {
  std::vector<HopfPoint> out;
  auto gap = [&](double k) -> std::optional<double> {
    try {
      return hopf_delay(branch, j, k, p) - tau;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const double lo = 2.0 * p.delta();
  std::optional<double> prev;
  double k_prev = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double k = lo + (k_max - lo) * static_cast<double>(i) / samples;
    const auto v = gap(k);
    if (v && prev && (*v < 0.0) != (*prev < 0.0) && std::abs(*v - *prev) < 1.0) {
      double a = k_prev, b = k, fa = *prev;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = gap(m).value_or(0.0);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double kc = 0.5 * (a + b);
      out.push_back({kc, tau, hopf_frequency(branch, kc, p.omega0(), p.delta()), branch, j});
    }
    prev = v;
    k_prev = k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Root refinement and sensitivities

struct NewtonResult {
  Complex root;
  bool converged = false;
  int iterations = 0;
};

/// Newton iteration on the characteristic equation (tolerance 1e-12, at most 50 steps).
inline NewtonResult refine_root(Complex guess, const SystemParams& p, double tol = 1e-12, int max_iter = 50) {
  NewtonResult r{guess, false, 0};
  for (int it = 1; it <= max_iter; ++it) {
    const Complex f = characteristic_residual(r.root, p);
    const Complex df = characteristic_derivative(r.root, p);
    const Complex step = f / df;
    r.root -= step;
    r.iterations = it;
    if (std::abs(step) <= tol * std::max(1.0, std::abs(r.root))) {
      r.converged = std::abs(characteristic_residual(r.root, p)) < 1e-9;
      return r;
    }
  }
  return r;
}

/// Implicit derivatives d(lambda)/dk and d(lambda)/dtau of a characteristic root.
struct RootSensitivity {
  Complex d_k;
  Complex d_tau;
};

inline RootSensitivity root_sensitivity(Complex lambda, const SystemParams& p) {
  const Complex e = std::exp(-lambda * p.tau());
  const Complex f_lambda = characteristic_derivative(lambda, p);
  const Complex f_k = -0.5 * e;
  const Complex f_tau = 0.5 * p.k() * lambda * e;
  return {-f_k / f_lambda, -f_tau / f_lambda};
}

// ---------------------------------------------------------------------------
// Counting unstable roots

namespace detail {

inline int contour_samples(double m, double tau) { return 64 + 16 * static_cast<int>(std::ceil(m * std::max(tau, 1.0))); }

}  // namespace detail

/// Number of characteristic roots with positive real part (argument principle).
inline int count_unstable_roots(const SystemParams& p) {
  const double m0 = p.omega0() + p.k() + p.delta() + 1.0;
  auto f = [&p](Complex z) { return characteristic_residual(z, p); };
  for (int attempt = 0; attempt < 3; ++attempt) {
    const double m = m0 * (1.0 + 0.07 * attempt);
    WindingOptions opt;
    opt.initial_samples = detail::contour_samples(m, p.tau());
    const WindingResult w = winding(f, right_rectangle(0.0, m, m), opt);
    bool on_contour = w.unresolved;
    if (w.min_abs < 1e-3) {
      const NewtonResult nr = refine_root(w.argmin, p);
      if (nr.converged) {
        const Complex r = nr.root;
        const double dist = std::min({std::abs(r.real()), std::abs(r.real() - m), std::abs(std::abs(r.imag()) - m)});
        if (dist < 1e-8 && r.real() > -1e-8 && r.real() < m + 1e-8 && std::abs(r.imag()) < m + 1e-8) on_contour = true;
      }
    }
    if (!on_contour) return w.winding();
  }
  throw RootOnContourError("characteristic root on the counting contour after 3 attempts");
}

}  // namespace dkb
