#pragma once

// Coherent states of the reduced model as rotating waves r = R exp(i Omega t).
// Phase equivariance turns periodic-orbit continuation into a two-equation
// algebraic problem in (R^2, Omega); stability comes from the co-rotating
// linearisation, whose characteristic function always has the phase root 0.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dkb/contour.hpp"
#include "dkb/errors.hpp"
#include "dkb/linear_stability.hpp"
#include "dkb/model.hpp"

namespace dkb {

enum class Sweep { k, tau };

inline std::string to_string(Sweep s) { return s == Sweep::k ? "k" : "tau"; }

inline Sweep parse_sweep(const std::string& s) {
  if (s == "k") return Sweep::k;
  if (s == "tau") return Sweep::tau;
  throw InvalidParameter("unknown sweep parameter '" + s + "'");
}

struct RotatingWave {
  double R = 0.0;
  double Omega = 0.0;
  double k = 0.0;
  double tau = 0.0;
  int unstable_count = 0;
  bool marginal = false;  // a nontrivial root sat on the imaginary axis

  double period() const { return kTwoPi / std::abs(Omega); }
};

/// [delta - (k/2)(1 - R^2) cos(Omega tau), Omega + omega0 + (k/2)(1 + R^2) sin(Omega tau)]
inline std::array<double, 2> rotating_wave_residual(double R, double Omega, const SystemParams& p) {
  const double u = R * R;
  const double ph = Omega * p.tau();
  return {p.delta() - 0.5 * p.k() * (1.0 - u) * std::cos(ph), Omega + p.omega0() + 0.5 * p.k() * (1.0 + u) * std::sin(ph)};
}

// ---------------------------------------------------------------------------
// Stability

struct CorotatingCoefficients {
  Complex p1;
  Complex q;
  Complex s;
};

inline CorotatingCoefficients corotating_coefficients(double R, double Omega, const SystemParams& p) {
  const Complex e = std::exp(kI * Omega * p.tau());
  const double u = R * R;
  return {Complex(p.delta(), Omega + p.omega0()) + p.k() * u * e, 0.5 * p.k() * std::conj(e), -0.5 * p.k() * u * e};
}

/// D(mu) = (mu + p1 - q e^{-mu tau})(mu + conj(p1) - conj(q) e^{-mu tau}) - |s|^2 e^{-2 mu tau}
inline Complex corotating_characteristic(Complex mu, const CorotatingCoefficients& c, double tau) {
  const Complex e = std::exp(-mu * tau);
  return (mu + c.p1 - c.q * e) * (mu + std::conj(c.p1) - std::conj(c.q) * e) - std::norm(c.s) * e * e;
}

inline Complex corotating_characteristic_derivative(Complex mu, const CorotatingCoefficients& c, double tau) {
  const Complex e = std::exp(-mu * tau);
  const Complex a = mu + c.p1 - c.q * e;
  const Complex b = mu + std::conj(c.p1) - std::conj(c.q) * e;
  const Complex da = 1.0 + c.q * tau * e;
  const Complex db = 1.0 + std::conj(c.q) * tau * e;
  return da * b + a * db + 2.0 * tau * std::norm(c.s) * e * e;
}

struct StabilityOptions {
  double indent = 1e-6;       // radius of the half-disc excluding the phase root
  double axis_offset = 0.0;   // left edge of the counting rectangle
};

/// Number of nontrivial co-rotating roots with positive real part.
inline int wave_stability(const RotatingWave& w, const SystemParams& p, const StabilityOptions& opt = {}) {
  const SystemParams pw = p.with_k(w.k).with_tau(w.tau);
  const auto c = corotating_coefficients(w.R, w.Omega, pw);
  const double tau = pw.tau();
  const double scale = std::pow(1.0 + std::abs(c.p1) + std::abs(c.q), 2);
  if (std::abs(corotating_characteristic(0.0, c, tau)) > 1e-8 * scale)
    throw InvalidParameter("wave_stability: (R, Omega) is not a rotating wave (D(0) != 0)");

  auto f = [&](Complex mu) { return corotating_characteristic(mu, c, tau); };
  const double m0 = 2.0 * (pw.delta() + pw.k() + std::abs(w.Omega) + pw.omega0()) + 1.0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const double m = m0 * (1.0 + 0.07 * attempt);
    WindingOptions wopt;
    wopt.initial_samples = detail::contour_samples(m, tau);
    const auto path = right_rectangle(opt.axis_offset, m, m, opt.axis_offset == 0.0 ? opt.indent : 0.0);
    const WindingResult wr = winding(f, path, wopt);
    bool retry = wr.unresolved;
    if (wr.min_abs < 1e-3 * scale) {
      // Polish the closest approach into a root and see where it sits.
      Complex mu = wr.argmin;
      bool converged = false;
      for (int it = 0; it < 60; ++it) {
        const Complex step = f(mu) / corotating_characteristic_derivative(mu, c, tau);
        mu -= step;
        if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag())) break;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(mu))) {
          converged = true;
          break;
        }
      }
      if (converged && std::abs(mu) > 100.0 * opt.indent) {
        if (std::abs(mu.real() - opt.axis_offset) < 1e-8 && std::abs(mu.imag()) < m)
          throw MarginalStabilityError("nontrivial co-rotating root on the imaginary axis at mu = " +
                                       std::to_string(mu.real()) + " + " + std::to_string(mu.imag()) + "i");
        const double outer = std::min(std::abs(mu.real() - opt.axis_offset - m), std::abs(std::abs(mu.imag()) - m));
        if (outer < 1e-8) retry = true;
      }
    }
    if (!retry) return wr.winding();
  }
  throw RootOnContourError("co-rotating root on the counting contour after 3 attempts");
}

/// Stability count that tolerates marginal points by nudging the contour off the axis.
inline RotatingWave with_stability(RotatingWave w, const SystemParams& p) {
  try {
    w.unstable_count = wave_stability(w, p);
    w.marginal = false;
  } catch (const MarginalStabilityError&) {
    StabilityOptions opt;
    opt.axis_offset = 1e-7;
    w.unstable_count = wave_stability(w, p, opt);
    w.marginal = true;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Continuation in (R^2, Omega, parameter)

struct Fold {
  double parameter = 0.0;
  double R = 0.0;
  double Omega = 0.0;
  std::size_t after_point = 0;  // the fold lies between points[after_point] and points[after_point + 1]
};

struct WaveBranch {
  std::vector<RotatingWave> points;
  Sweep swept_parameter = Sweep::k;
  std::vector<Fold> folds;
  bool truncated = false;   // corrector failed at the minimum step
  std::string termination;  // why continuation stopped
};

struct ContinuationOptions {
  double ds_min = 1e-5;
  double ds_max = 1e-2;
  double ds_initial = 1e-3;
  int max_steps = 20000;
  double newton_tol = 1e-12;
  int newton_max_iter = 12;
  bool compute_stability = true;
};

namespace detail {

using Vec3 = std::array<double, 3>;

struct WaveSystem {
  SystemParams base;
  Sweep sweep;

  SystemParams at(double param) const { return sweep == Sweep::k ? base.with_k(param) : base.with_tau(param); }

  std::array<double, 2> f(const Vec3& x) const {
    const SystemParams p = at(x[2]);
    const double c = std::cos(x[1] * p.tau());
    const double s = std::sin(x[1] * p.tau());
    return {p.delta() - 0.5 * p.k() * (1.0 - x[0]) * c, x[1] + p.omega0() + 0.5 * p.k() * (1.0 + x[0]) * s};
  }

  // Rows of the 2x3 Jacobian in (u, Omega, parameter).
  std::array<Vec3, 2> jac(const Vec3& x) const {
    const SystemParams p = at(x[2]);
    const double u = x[0];
    const double om = x[1];
    const double k = p.k();
    const double tau = p.tau();
    const double c = std::cos(om * tau);
    const double s = std::sin(om * tau);
    Vec3 r1{0.5 * k * c, 0.5 * k * (1.0 - u) * tau * s, 0.0};
    Vec3 r2{0.5 * k * s, 1.0 + 0.5 * k * (1.0 + u) * tau * c, 0.0};
    if (sweep == Sweep::k) {
      r1[2] = -0.5 * (1.0 - u) * c;
      r2[2] = 0.5 * (1.0 + u) * s;
    } else {
      r1[2] = 0.5 * k * (1.0 - u) * om * s;
      r2[2] = 0.5 * k * (1.0 + u) * om * c;
    }
    return {r1, r2};
  }

  Vec3 tangent(const Vec3& x) const {
    const auto j = jac(x);
    Vec3 t{j[0][1] * j[1][2] - j[0][2] * j[1][1], j[0][2] * j[1][0] - j[0][0] * j[1][2],
           j[0][0] * j[1][1] - j[0][1] * j[1][0]};
    const double n = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    for (double& v : t) v /= n;
    return t;
  }
};

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline std::optional<Vec3> solve3(std::array<Vec3, 3> a, Vec3 b) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) return std::nullopt;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec3 x{};
  for (int r = 2; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < 3; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

// Newton on [F(x) = 0, dir . (x - anchor) = sigma].
inline std::optional<Vec3> correct(const WaveSystem& sys, Vec3 x, const Vec3& anchor, const Vec3& dir, double sigma,
                                   const ContinuationOptions& opt, int* iterations = nullptr) {
  for (int it = 1; it <= opt.newton_max_iter; ++it) {
    const auto fx = sys.f(x);
    const double g = dot(dir, Vec3{x[0] - anchor[0], x[1] - anchor[1], x[2] - anchor[2]}) - sigma;
    const auto j = sys.jac(x);
    const auto dx = solve3({j[0], j[1], dir}, {-fx[0], -fx[1], -g});
    if (!dx) return std::nullopt;
    for (int c = 0; c < 3; ++c) x[c] += (*dx)[c];
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2])) return std::nullopt;
    const double step = std::sqrt(dot(*dx, *dx));
    if (step < opt.newton_tol) {
      const auto r = sys.f(x);
      if (std::hypot(r[0], r[1]) < 1e-10) {
        if (iterations) *iterations = it;
        return x;
      }
    }
  }
  return std::nullopt;
}

// Newton on F(u, Omega) = 0 at a fixed parameter value.
inline std::optional<Vec3> correct_fixed(const WaveSystem& sys, Vec3 x) {
  for (int it = 0; it < 50; ++it) {
    const auto fx = sys.f(x);
    const auto j = sys.jac(x);
    const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if (std::abs(det) < 1e-300) return std::nullopt;
    const double du = (-fx[0] * j[1][1] + fx[1] * j[0][1]) / det;
    const double dom = (-fx[1] * j[0][0] + fx[0] * j[1][0]) / det;
    x[0] += du;
    x[1] += dom;
    if (std::hypot(du, dom) < 1e-14) {
      const auto r = sys.f(x);
      if (std::hypot(r[0], r[1]) < 1e-10) return x;
    }
  }
  return std::nullopt;
}

inline RotatingWave to_wave(const WaveSystem& sys, const Vec3& x) {
  const SystemParams p = sys.at(x[2]);
  return {std::sqrt(std::max(0.0, x[0])), x[1], p.k(), p.tau(), 0, false};
}

inline Vec3 to_vec(const RotatingWave& w, Sweep sweep) { return {w.R * w.R, w.Omega, sweep == Sweep::k ? w.k : w.tau}; }

}  // namespace detail

/// Pseudo-arclength continuation of the rotating-wave branch born at `seed`.
/// The parameter not swept is held at the seed's value.
inline WaveBranch solve_branch(const HopfPoint& seed, Sweep sweep, Interval range, const SystemParams& p,
                           const ContinuationOptions& opt = {}) {
  if (!(range.hi > range.lo)) throw InvalidParameter("solve_branch: empty parameter range");
  const SystemParams base = p.with_k(seed.k).with_tau(seed.tau);
  const detail::WaveSystem sys{base, sweep};
  using detail::Vec3;

  WaveBranch br;
  br.swept_parameter = sweep;
  Vec3 x{0.0, seed.beta, sweep == Sweep::k ? seed.k : seed.tau};
  if (!range.contains(x[2])) throw InvalidParameter("solve_branch: seed parameter outside the range");
  br.points.push_back(detail::to_wave(sys, x));

  Vec3 t = sys.tangent(x);
  if (t[0] < 0.0)
    for (double& v : t) v = -v;
  std::vector<Vec3> tangents{t};
  std::vector<Vec3> states{x};
  double ds = opt.ds_initial;
  Vec3 dir = t;
  br.termination = "max_steps";

  for (int step = 0; step < opt.max_steps; ++step) {
    int iters = 0;
    std::optional<Vec3> next;
    while (true) {
      const Vec3 pred{x[0] + ds * dir[0], x[1] + ds * dir[1], x[2] + ds * dir[2]};
      next = detail::correct(sys, pred, x, dir, ds, opt, &iters);
      if (next) break;
      if (ds <= opt.ds_min * (1.0 + 1e-12)) break;
      ds = std::max(opt.ds_min, 0.5 * ds);
    }
    if (!next) {
      br.truncated = true;
      br.termination = "corrector_failed";
      break;
    }
    const Vec3 xn = *next;
    if (xn[0] > 1.0) {
      br.termination = "R_exceeds_1";
      break;
    }
    if (xn[0] < 0.0) {
      br.termination = "returned_to_zero";
      break;
    }
    if (!range.contains(xn[2])) {
      br.termination = "range_boundary";
      break;
    }
    Vec3 tn = sys.tangent(xn);
    const Vec3 sec{xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]};
    if (detail::dot(tn, sec) < 0.0)
      for (double& v : tn) v = -v;

    // Fold: the parameter component of the tangent changes sign.
    const Vec3& tp = tangents.back();
    if ((tp[2] > 0.0) != (tn[2] > 0.0)) {
      const double len = std::sqrt(detail::dot(sec, sec));
      const Vec3 sdir{sec[0] / len, sec[1] / len, sec[2] / len};
      double lo = 0.0;
      double hi = len;
      Vec3 best = xn;
      for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Vec3 pred{x[0] + mid * sdir[0], x[1] + mid * sdir[1], x[2] + mid * sdir[2]};
        const auto xm = detail::correct(sys, pred, x, sdir, mid, opt);
        if (!xm) break;
        Vec3 tm = sys.tangent(*xm);
        if (detail::dot(tm, sdir) < 0.0)
          for (double& v : tm) v = -v;
        best = *xm;
        if ((tm[2] > 0.0) == (tp[2] > 0.0))
          lo = mid;
        else
          hi = mid;
      }
      const auto fw = detail::to_wave(sys, best);
      br.folds.push_back({best[2], fw.R, fw.Omega, br.points.size() - 1});
    }

    br.points.push_back(detail::to_wave(sys, xn));
    tangents.push_back(tn);
    states.push_back(xn);
    dir = detail::Vec3{sec[0] / std::sqrt(detail::dot(sec, sec)), sec[1] / std::sqrt(detail::dot(sec, sec)),
                       sec[2] / std::sqrt(detail::dot(sec, sec))};
    x = xn;
    if (iters <= 3) ds = std::min(opt.ds_max, 1.5 * ds);
  }

  if (opt.compute_stability)
    for (auto& w : br.points) w = with_stability(w, p);
  return br;
}

inline const std::vector<Fold>& fold_points(const WaveBranch& b) {
  if (b.points.empty()) throw InvalidParameter("fold_points: empty branch");
  return b.folds;
}

/// All waves on `b` at the given value of its swept parameter, polished at that value.
inline std::vector<RotatingWave> waves_at(const WaveBranch& b, double value, const SystemParams& p) {
  std::vector<RotatingWave> out;
  const SystemParams base = b.swept_parameter == Sweep::k ? p.with_tau(b.points.front().tau)
                                                          : p.with_k(b.points.front().k);
  const detail::WaveSystem sys{base, b.swept_parameter};
  for (std::size_t i = 0; i + 1 < b.points.size(); ++i) {
    const auto a = detail::to_vec(b.points[i], b.swept_parameter);
    const auto c = detail::to_vec(b.points[i + 1], b.swept_parameter);
    if ((a[2] - value) * (c[2] - value) > 0.0 || a[2] == c[2]) continue;
    if (c[2] == value && i + 2 < b.points.size()) continue;  // counted as the next segment's start
    const double f = (value - a[2]) / (c[2] - a[2]);
    detail::Vec3 g{a[0] + f * (c[0] - a[0]), a[1] + f * (c[1] - a[1]), value};
    const auto x = detail::correct_fixed(sys, g);
    if (!x || (*x)[0] <= 0.0 || (*x)[0] > 1.0) continue;
    out.push_back(with_stability(detail::to_wave(sys, *x), p));
  }
  return out;
}

/// Every rotating wave at fixed (k, tau), found independently of any branch by
/// scanning Omega: R^2 follows from the first residual equation and the second
/// is bisected for sign changes.
inline std::vector<RotatingWave> enumerate_waves(const SystemParams& p, int samples = 200000) {
  const double k = p.k();
  const double tau = p.tau();
  auto u_of = [&](double om) { return 1.0 - 2.0 * p.delta() / (k * std::cos(om * tau)); };
  auto g = [&](double om) { return om + p.omega0() + 0.5 * k * (2.0 - 2.0 * p.delta() / (k * std::cos(om * tau))) * std::sin(om * tau); };
  auto valid = [&](double om) {
    const double u = u_of(om);
    return std::cos(om * tau) > 0.0 && u > 0.0 && u <= 1.0;
  };
  // Omega + omega0 = -(k/2)(1+u) sin: |Omega + omega0| <= k.
  const double lo = -p.omega0() - k - 1e-9;
  const double hi = -p.omega0() + k + 1e-9;
  std::vector<RotatingWave> out;
  double om_prev = lo;
  bool v_prev = valid(lo);
  double g_prev = g(lo);
  for (int i = 1; i <= samples; ++i) {
    const double om = lo + (hi - lo) * i / samples;
    const bool v = valid(om);
    const double gv = g(om);
    if (v && v_prev && (gv < 0.0) != (g_prev < 0.0)) {
      double a = om_prev, b = om, fa = g_prev;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = g(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double omc = 0.5 * (a + b);
      const double u = u_of(omc);
      if (u > 0.0 && u <= 1.0) out.push_back(with_stability({std::sqrt(u), omc, k, tau, 0, false}, p));
    }
    om_prev = om;
    v_prev = v;
    g_prev = gv;
  }
  return out;
}

}  // namespace dkb
