#pragma once

// Normal-form data at Hopf, Bautin and double-Hopf points of the reduced
// model. Time is normalised by the critical delay, and the unfolding
// parameters are (eps, delta) = (k - k_c, tau - tau_c).

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "dkb/errors.hpp"
#include "dkb/linear_stability.hpp"

namespace dkb {

/// A complex-valued linear map (eps, delta) -> d_eps*eps + d_delta*delta.
struct ComplexLinearMap {
  Complex d_eps;
  Complex d_delta;
  Complex operator()(double eps, double delta) const { return d_eps * eps + d_delta * delta; }
};

struct RealLinearMap {
  double d_eps = 0.0;
  double d_delta = 0.0;
  double operator()(double eps, double delta) const { return d_eps * eps + d_delta * delta; }
};

/// D = 1 / (1 + (k tau / 2) exp(-i beta tau)).
inline Complex normalizer(double k, double tau, double beta) {
  const Complex den = 1.0 + 0.5 * k * tau * std::exp(-kI * beta * tau);
  if (std::abs(den) < 1e-12) throw SingularNormalizerError("normal-form normalizer is singular");
  return 1.0 / den;
}

/// Linear part l0(eps, delta) of the Hopf normal form: the eigenvalue
/// derivatives of the time-normalised characteristic equation.
inline ComplexLinearMap l0_map(const HopfPoint& h, const SystemParams& p) {
  const Complex d = normalizer(h.k, h.tau, h.beta);
  const Complex e = std::exp(-kI * h.beta * h.tau);
  return {d * 0.5 * h.tau * e, d * (-p.delta() + 0.5 * h.k * e - kI * p.omega0())};
}

/// First Lyapunov coefficient; positive means subcritical.
inline double lyapunov_l1(const HopfPoint& h) {
  const Complex d = normalizer(h.k, h.tau, h.beta);
  return -0.5 * h.k * h.tau * (std::exp(kI * h.beta * h.tau) * d).real();
}

/// Second Lyapunov coefficient.
inline double lyapunov_l2(const HopfPoint& h) {
  const Complex d = normalizer(h.k, h.tau, h.beta);
  return -3.0 * h.k * h.tau * d.real();
}

/// Expression with the sign of l1 on Hopf points: -delta - 2 tau delta^2 + tau k^2 / 4.
inline double l1_sign_indicator(double k, double tau, double delta) {
  return -delta - 2.0 * tau * delta * delta + 0.25 * tau * k * k;
}

/// The curve on which l1 vanishes: k = sqrt(4 delta / tau + 8 delta^2).
inline double bautin_curve(double tau, double delta) {
  if (!(tau > 0.0)) throw InvalidParameter("bautin_curve: tau must be positive");
  return std::sqrt(4.0 * delta / tau + 8.0 * delta * delta);
}

struct BautinPoint {
  double k = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  double re_l2 = 0.0;
  Branch branch = Branch::plus;
  int index = 0;
};

struct CurveSearch {
  double k_max = 4.0;
  int samples = 400;
  double k_tol = 1e-10;
};

namespace detail {

// Bisection to the resolution limit of double precision or `tol`, whichever is reached first.
template <class F>
double bisect(F&& f, double a, double b, double fa, double tol) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b || (b - a) < tol) return m;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double k_sample(const SystemParams& p, const CurveSearch& s, int i) {
  const double lo = 2.0 * p.delta();
  return lo + (s.k_max - lo) * static_cast<double>(i) / static_cast<double>(s.samples);
}

}  // namespace detail

/// Bautin point on the Hopf curve (branch, j): the lowest k in (2 delta, k_max]
/// where l1 changes sign.
inline std::optional<BautinPoint> find_bautin(Branch branch, int j, const SystemParams& p_base,
                                              const CurveSearch& search = {}) {
  auto l1_at = [&](double k) -> std::optional<double> {
    try {
      return lyapunov_l1(make_hopf_point(branch, j, k, p_base));
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  std::optional<double> prev;
  double k_prev = 0.0;
  for (int i = 1; i <= search.samples; ++i) {
    const double k = detail::k_sample(p_base, search, i);
    const auto v = l1_at(k);
    if (v && prev && (*v < 0.0) != (*prev < 0.0)) {
      const double kb = detail::bisect([&](double kk) { return l1_at(kk).value_or(0.0); }, k_prev, k, *prev,
                                       search.k_tol * 1e-3);
      const HopfPoint h = make_hopf_point(branch, j, kb, p_base);
      return BautinPoint{h.k, h.tau, h.beta, lyapunov_l2(h), branch, j};
    }
    prev = v;
    k_prev = k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Double Hopf

struct DHCoefficients {
  Complex a11, a12, a21, a22;
  Complex c11, c12, c21, c22;
  Complex d1_norm, d2_norm;
};

struct DoubleHopfPoint {
  double k = 0.0;
  double tau = 0.0;
  double alpha = 0.0;  // frequency on the first curve
  double beta = 0.0;   // frequency on the second curve
  Branch branch_a = Branch::plus;
  int index_a = 0;
  Branch branch_b = Branch::minus;
  int index_b = 0;
  DHCoefficients coeffs{};
};

inline DHCoefficients dh_coefficients(double k, double tau, double alpha, double beta, const SystemParams& p) {
  DHCoefficients c;
  c.d1_norm = normalizer(k, tau, alpha);
  c.d2_norm = normalizer(k, tau, beta);
  const Complex ea = std::exp(-kI * alpha * tau);
  const Complex eb = std::exp(-kI * beta * tau);
  // The a-coefficients are the l0 maps of the two Hopf frequencies.
  const ComplexLinearMap m1 = l0_map({k, tau, alpha, Branch::plus, 0}, p);
  const ComplexLinearMap m2 = l0_map({k, tau, beta, Branch::plus, 0}, p);
  c.a11 = m1.d_eps;
  c.a12 = m1.d_delta;
  c.a21 = m2.d_eps;
  c.a22 = m2.d_delta;
  c.c11 = -0.5 * c.d1_norm * k * tau * std::conj(ea);
  c.c12 = -0.5 * c.d1_norm * k * tau * std::conj(eb);
  c.c21 = -0.5 * c.d2_norm * k * tau * std::conj(ea);
  c.c22 = -0.5 * c.d2_norm * k * tau * std::conj(eb);
  return c;
}

inline DHCoefficients dh_coefficients(const DoubleHopfPoint& dh, const SystemParams& p) {
  return dh_coefficients(dh.k, dh.tau, dh.alpha, dh.beta, p);
}

inline void check_nonresonance(double alpha, double beta, double margin = 1e-6) {
  const double a = std::abs(alpha);
  const double b = std::abs(beta);
  if (std::abs(a - 3.0 * b) <= margin || std::abs(3.0 * a - b) <= margin)
    throw ResonanceError("1:3 resonant double Hopf point (alpha = " + std::to_string(alpha) +
                         ", beta = " + std::to_string(beta) + ")");
}

/// Intersection of the Hopf curves `a` and `b`: lowest k in (2 delta, k_max]
/// where tau_a(k) - tau_b(k) changes sign.
inline std::optional<DoubleHopfPoint> find_double_hopf(std::pair<Branch, int> a, std::pair<Branch, int> b,
                                                       const SystemParams& p_base, const CurveSearch& search = {}) {
  if (a == b) throw InvalidParameter("find_double_hopf: the two curves must differ");
  auto gap = [&](double k) -> std::optional<double> {
    try {
      return hopf_delay(a.first, a.second, k, p_base) - hopf_delay(b.first, b.second, k, p_base);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  std::optional<double> prev;
  double k_prev = 0.0;
  for (int i = 1; i <= search.samples; ++i) {
    const double k = detail::k_sample(p_base, search, i);
    const auto v = gap(k);
    // A sign change with a large jump is a branch-switch discontinuity, not a crossing.
    if (v && prev && (*v < 0.0) != (*prev < 0.0) && std::abs(*v - *prev) < 1.0) {
      const double kc =
          detail::bisect([&](double kk) { return gap(kk).value_or(0.0); }, k_prev, k, *prev, search.k_tol * 1e-3);
      DoubleHopfPoint dh;
      dh.k = kc;
      dh.tau = hopf_delay(a.first, a.second, kc, p_base);
      dh.alpha = hopf_frequency(a.first, kc, p_base.omega0(), p_base.delta());
      dh.beta = hopf_frequency(b.first, kc, p_base.omega0(), p_base.delta());
      dh.branch_a = a.first;
      dh.index_a = a.second;
      dh.branch_b = b.first;
      dh.index_b = b.second;
      check_nonresonance(dh.alpha, dh.beta);
      dh.coeffs = dh_coefficients(dh, p_base);
      return dh;
    }
    prev = v;
    k_prev = k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Unfolding of the amplitude equations
//   r1' = r1 (c1 + r1^2 + b0 r2^2),  r2' = r2 (c2 + c0 r1^2 + d0 r2^2)

struct Unfolding {
  RealLinearMap c1_map;
  RealLinearMap c2_map;
  double b0 = 0.0;
  double c0 = 0.0;
  double d0 = 0.0;
  int eps1 = 1;
  int eps2 = 1;
  std::string case_label;
  // eps/delta slopes of the local Neimark-Sacker lines c2 = c0 c1 and c2 = c1 / b0.
  std::optional<double> ns_slope_c0;
  std::optional<double> ns_slope_b0;
};

/// Twelve-case table indexed by the signs of d0, b0, c0 and d0 - b0 c0.
inline std::string classify_unfolding(double b0, double c0, double d0) {
  const bool dp = d0 > 0.0;
  const bool bp = b0 > 0.0;
  const bool cp = c0 > 0.0;
  const bool gp = (d0 - b0 * c0) > 0.0;
  if (dp) {
    if (bp && cp) return gp ? "Ia" : "Ib";
    if (bp && !cp) return "II";
    if (!bp && cp) return "III";
    return gp ? "IVa" : "IVb";
  }
  if (bp && cp) return "V";
  if (bp && !cp) return gp ? "VIa" : "VIb";
  if (!bp && cp) return gp ? "VIIa" : "VIIb";
  return "VIII";
}

inline Unfolding dh_unfolding(const DHCoefficients& c) {
  const double rc11 = c.c11.real();
  const double rc22 = c.c22.real();
  if (std::abs(rc11) < 1e-12 || std::abs(rc22) < 1e-12)
    throw DegenerateUnfoldingError("Re c11 or Re c22 vanishes");
  Unfolding u;
  u.eps1 = rc11 > 0.0 ? 1 : -1;
  u.eps2 = rc22 > 0.0 ? 1 : -1;
  // The time rescaling by eps1 multiplies both linear parts.
  u.c1_map = {u.eps1 * c.a11.real(), u.eps1 * c.a12.real()};
  u.c2_map = {u.eps1 * c.a21.real(), u.eps1 * c.a22.real()};
  u.b0 = u.eps1 * u.eps2 * c.c12.real() / rc22;
  u.c0 = c.c21.real() / rc11;
  u.d0 = u.eps1 * u.eps2;
  u.case_label = classify_unfolding(u.b0, u.c0, u.d0);

  auto slope = [](double num, double den) -> std::optional<double> {
    if (std::abs(den) < 1e-14) return std::nullopt;
    return num / den;
  };
  const auto& m1 = u.c1_map;
  const auto& m2 = u.c2_map;
  u.ns_slope_c0 = slope(u.c0 * m1.d_delta - m2.d_delta, m2.d_eps - u.c0 * m1.d_eps);
  if (std::abs(u.b0) > 1e-14) u.ns_slope_b0 = slope(m1.d_delta - u.b0 * m2.d_delta, u.b0 * m2.d_eps - m1.d_eps);
  return u;
}

}  // namespace dkb
