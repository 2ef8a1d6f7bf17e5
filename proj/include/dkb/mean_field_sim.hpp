#pragma once

// Simulations of the reduced mean-field equation and of the finite Kuramoto
// network: order-parameter traces, attractor classification, quasi-static
// sweeps, and the amplitude-growth checks used to confirm l1's sign.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dkb/dde.hpp"
#include "dkb/errors.hpp"
#include "dkb/linear_stability.hpp"
#include "dkb/model.hpp"
#include "dkb/rotating_wave.hpp"

namespace dkb {

enum class TraceSource { reduced, network };

inline std::string to_string(TraceSource s) { return s == TraceSource::reduced ? "reduced" : "network"; }

struct OrderParameterTrace {
  std::vector<double> times;
  std::vector<Complex> values;
  TraceSource source = TraceSource::reduced;
};

enum class AttractorKind { incoherent, coherent, quasiperiodic, undecided };

inline std::string to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::incoherent: return "incoherent";
    case AttractorKind::coherent: return "coherent";
    case AttractorKind::quasiperiodic: return "quasiperiodic";
    case AttractorKind::undecided: return "undecided";
  }
  return "undecided";
}

struct AttractorSummary {
  AttractorKind kind = AttractorKind::undecided;
  double r_inf = 0.0;
  std::optional<double> period;
  std::optional<double> rotation_frequency;
  double modulation = 0.0;  // (max |r| - min |r|) / mean |r| over the window
};

struct ClassifyOptions {
  double incoherent_below = 0.05;
  double max_cv = 0.01;
  double min_modulation = 0.05;
  double ratio_tol = 1e-2;
};

/// Finite networks ripple at roughly 1/sqrt(N); a 1% spread is too tight there.
inline ClassifyOptions finite_n_classify() {
  ClassifyOptions o;
  o.max_cv = 0.05;
  return o;
}

namespace detail {

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Angular frequency of the strongest spectral line of a uniformly sampled,
// demeaned signal; naive DFT on at most 2048 points with parabolic refinement.
inline double dominant_frequency(const std::vector<double>& t, std::vector<double> y) {
  const std::size_t stride = std::max<std::size_t>(1, y.size() / 2048);
  std::vector<double> ys;
  for (std::size_t i = 0; i < y.size(); i += stride) ys.push_back(y[i]);
  const double dt = (t[1] - t[0]) * static_cast<double>(stride);
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  for (double& v : ys) v -= mean;
  const std::size_t n = ys.size();
  std::vector<double> power(n / 2 + 1, 0.0);
  for (std::size_t j = 1; j <= n / 2; ++j) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = kTwoPi * static_cast<double>(j * i % n) / static_cast<double>(n);
      re += ys[i] * std::cos(a);
      im -= ys[i] * std::sin(a);
    }
    power[j] = re * re + im * im;
  }
  std::size_t best = 1;
  for (std::size_t j = 2; j <= n / 2; ++j)
    if (power[j] > power[best]) best = j;
  double shift = 0.0;
  if (best > 1 && best < n / 2) {
    const double a = power[best - 1], b = power[best], c = power[best + 1];
    const double den = a - 2.0 * b + c;
    if (den != 0.0) shift = 0.5 * (a - c) / den;
  }
  return kTwoPi * (static_cast<double>(best) + shift) / (static_cast<double>(n) * dt);
}

inline bool near_integer_ratio(double a, double b, double tol) {
  if (a <= 0.0 || b <= 0.0) return false;
  for (double r : {a / b, b / a}) {
    const double m = std::round(r);
    if (m >= 1.0 && std::abs(r - m) < tol) return true;
  }
  return false;
}

}  // namespace detail

/// Classifies the behaviour of r(t) over the final `window` time units.
inline AttractorSummary classify_attractor(const OrderParameterTrace& trace, double window,
                                           const ClassifyOptions& opt = {}) {
  if (trace.times.size() < 4 || !(window > 0.0)) throw InvalidParameter("classify_attractor: empty trace or window");
  const double t_end = trace.times.back();
  // One sample of slack: recording starts on the step grid, which need not divide the window.
  const double dt = trace.times[1] - trace.times[0];
  if (t_end - trace.times.front() < window * (1.0 - 1e-9) - dt)
    throw InvalidParameter("classify_attractor: window exceeds trace length");
  const auto first = static_cast<std::size_t>(
      std::lower_bound(trace.times.begin(), trace.times.end(), t_end - window - 1e-9) - trace.times.begin());

  std::vector<double> t(trace.times.begin() + static_cast<std::ptrdiff_t>(first), trace.times.end());
  std::vector<double> mag;
  std::vector<double> arg;
  mag.reserve(t.size());
  arg.reserve(t.size());
  double prev = 0.0;
  double offset = 0.0;
  for (std::size_t i = first; i < trace.values.size(); ++i) {
    const double a = std::arg(trace.values[i]);
    if (i > first) {
      double d = a - prev;
      if (d > std::numbers::pi) offset -= kTwoPi;
      if (d < -std::numbers::pi) offset += kTwoPi;
    }
    prev = a;
    arg.push_back(a + offset);
    mag.push_back(std::abs(trace.values[i]));
  }

  AttractorSummary s;
  const double n = static_cast<double>(mag.size());
  const double mean = std::accumulate(mag.begin(), mag.end(), 0.0) / n;
  double var = 0.0;
  for (double m : mag) var += (m - mean) * (m - mean);
  const double sd = std::sqrt(var / n);
  const auto [lo, hi] = std::minmax_element(mag.begin(), mag.end());
  s.r_inf = mean;
  if (mean < opt.incoherent_below) {
    s.kind = AttractorKind::incoherent;
    return s;
  }
  s.modulation = (*hi - *lo) / mean;
  const double omega = detail::ls_slope(t, arg);
  s.rotation_frequency = omega;
  if (sd / mean < opt.max_cv) {
    s.kind = AttractorKind::coherent;
    s.period = kTwoPi / std::abs(omega);
    return s;
  }
  if (s.modulation > opt.min_modulation) {
    const double w_mod = detail::dominant_frequency(t, mag);
    if (!detail::near_integer_ratio(w_mod, std::abs(omega), opt.ratio_tol)) s.kind = AttractorKind::quasiperiodic;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reduced model

struct RunOptions {
  double h = 0.0;            // 0 selects default_step(tau)
  double record_from = 0.0;  // first recorded time
  int sample_every = 1;      // record every n-th step
  double keep_window = 0.0;  // history retained beyond tau (for seeding later runs)
};

struct ReducedRun {
  OrderParameterTrace trace;
  HistoryTrajectory final_history;
  double max_abs = 0.0;  // largest |r| over the run, monitored at every step
};

inline ReducedRun run_reduced(const SystemParams& p, HistoryTrajectory history, double t_end,
                              const RunOptions& opt = {}) {
  if (history.dim() != 2) throw InvalidParameter("reduced history must have dimension 2 (re, im)");
  const double h = opt.h > 0.0 ? opt.h : default_step(p.tau());
  OrderParameterTrace trace;
  trace.source = TraceSource::reduced;
  double max_abs = 0.0;
  std::size_t step = 0;
  const auto every = static_cast<std::size_t>(std::max(1, opt.sample_every));
  IntegrateOptions io;
  io.keep_window = opt.keep_window;
  io.observer = [&](double t, std::span<const double> x) {
    const Complex r{x[0], x[1]};
    max_abs = std::max(max_abs, std::abs(r));
    if (t >= opt.record_from - 1e-9 && step % every == 0) {
      trace.times.push_back(t);
      trace.values.push_back(r);
    }
    ++step;
  };
  auto rhs = [&p](double, std::span<const double> x, std::span<const double> xd, std::span<double> dx) {
    const Complex f = reduced_rhs({x[0], x[1]}, {xd[0], xd[1]}, p);
    dx[0] = f.real();
    dx[1] = f.imag();
  };
  HistoryTrajectory out = integrate(rhs, std::move(history), t_end, h, p.tau(), io);
  return {std::move(trace), std::move(out), max_abs};
}

/// Constant history r(t) = r0 for t <= 0.
inline ReducedRun run_reduced(const SystemParams& p, Complex r0, double t_end, const RunOptions& opt = {}) {
  return run_reduced(p, HistoryTrajectory::constant({r0.real(), r0.imag()}), t_end, opt);
}

// ---------------------------------------------------------------------------
// Quasi-static sweeps

enum class Direction { up, down };

inline std::string to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

struct SweepOptions {
  double transient = 200.0;
  double window = 100.0;
  double initial_r = 0.01;           // constant history at the first sweep point
  double perturbation_floor = 1e-3;  // reseed when the carried state has decayed below this
  ClassifyOptions classify;
};

struct SweepPoint {
  double parameter = 0.0;
  AttractorSummary summary;
};

/// Steps the swept parameter across `range`, each run seeded by the final
/// delay window of the previous one.
inline std::vector<SweepPoint> hysteresis_sweep(const SystemParams& p_base, Sweep sweep, Interval range, int steps,
                                                Direction direction, const SweepOptions& opt = {}) {
  if (steps < 2) throw InvalidParameter("hysteresis_sweep: need at least 2 steps");
  if (!(range.hi > range.lo)) throw InvalidParameter("hysteresis_sweep: empty range");
  const double max_tau = sweep == Sweep::tau ? range.hi : p_base.tau();
  std::vector<SweepPoint> out;
  std::optional<HistoryTrajectory> carried;
  for (int i = 0; i < steps; ++i) {
    const int idx = direction == Direction::up ? i : steps - 1 - i;
    const double value = range.lo + range.width() * static_cast<double>(idx) / static_cast<double>(steps - 1);
    const SystemParams p = sweep == Sweep::k ? p_base.with_k(value) : p_base.with_tau(value);
    std::optional<HistoryTrajectory> seed;
    if (carried) {
      const auto last = carried->back();
      if (std::hypot(last[0], last[1]) >= opt.perturbation_floor)
        seed = carried->tail_window(std::max(p.tau(), default_step(p.tau())));
      else
        seed = HistoryTrajectory::constant({opt.perturbation_floor, 0.0});
    } else {
      seed = HistoryTrajectory::constant({opt.initial_r, 0.0});
    }
    RunOptions ro;
    ro.record_from = opt.transient - opt.window;
    ro.keep_window = max_tau;
    const double t_end = opt.transient + opt.window;
    try {
      ReducedRun run = run_reduced(p, std::move(*seed), t_end, ro);
      out.push_back({value, classify_attractor(run.trace, opt.window, opt.classify)});
      carried.emplace(std::move(run.final_history));
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.time(), std::string(e.what()) + " (swept " + to_string(sweep) +
                                          " = " + std::to_string(value) + ")");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite network

enum class PhaseInit { grid, random };

struct NetworkOptions {
  Sampling sampling = Sampling::quantile;
  PhaseInit init = PhaseInit::grid;
  std::uint64_t seed = 0;
  double h = 0.0;
  double record_from = 0.0;
  int sample_every = 1;
  double snapshot_every = 0.0;  // > 0 stores wrapped phases at this interval
};

struct PhaseSnapshot {
  double t = 0.0;
  std::vector<double> phases;  // reduced to [0, 2 pi)
};

struct NetworkRun {
  OrderParameterTrace trace;
  std::vector<PhaseSnapshot> snapshots;
  std::vector<double> frequencies;
};

/// Initial phases spread over [0, span]: the midpoint grid span (j + 1/2) / N, or seeded uniform draws.
inline std::vector<double> initial_phases(std::size_t n, double span, PhaseInit init, std::uint64_t seed) {
  std::vector<double> th(n);
  if (init == PhaseInit::grid) {
    for (std::size_t j = 0; j < n; ++j) th[j] = span * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
  } else {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (double& v : th) v = span * detail::uniform01(rng);
  }
  return th;
}

/// Integrates the delayed Kuramoto network from a constant phase history.
/// Phases are carried unwrapped inside the integrator, where the dense output
/// has to interpolate them, and reduced modulo 2 pi only in snapshots.
inline NetworkRun run_network(std::size_t n, const SystemParams& p, double span, double t_end,
                              const NetworkOptions& opt = {}) {
  if (n < 2) throw InvalidParameter("run_network: N must be at least 2");
  if (!(span > 0.0) || span > kTwoPi * (1.0 + 1e-12)) throw InvalidParameter("run_network: span must lie in (0, 2 pi]");
  NetworkRun run;
  run.frequencies = lorentzian_frequencies(n, p.omega0(), p.delta(), opt.sampling, opt.seed);
  run.trace.source = TraceSource::network;
  const double h = opt.h > 0.0 ? opt.h : default_step(p.tau());
  const auto every = static_cast<std::size_t>(std::max(1, opt.sample_every));
  const auto snap_every =
      opt.snapshot_every > 0.0 ? static_cast<std::size_t>(std::max(1.0, std::round(opt.snapshot_every / h))) : 0;
  std::size_t step = 0;
  IntegrateOptions io;
  io.observer = [&](double t, std::span<const double> x) {
    if (t >= opt.record_from - 1e-9) {
      if (step % every == 0) {
        run.trace.times.push_back(t);
        run.trace.values.push_back(order_parameter(x));
      }
      if (snap_every > 0 && step % snap_every == 0) {
        PhaseSnapshot s{t, std::vector<double>(x.begin(), x.end())};
        for (double& v : s.phases) v = NetworkState::wrap_phase(v);
        run.snapshots.push_back(std::move(s));
      }
    }
    ++step;
  };
  const double k = p.k();
  const auto& freqs = run.frequencies;
  auto rhs = [&](double, std::span<const double> x, std::span<const double> xd, std::span<double> dx) {
    kuramoto_rhs_raw(x, xd, freqs, k, dx);
  };
  integrate(rhs, HistoryTrajectory::constant(initial_phases(n, span, opt.init, opt.seed)), t_end, h, p.tau(), io);
  return run;
}

// ---------------------------------------------------------------------------
// Reduced vs network

struct MatchedInitials {
  double target_r0 = 0.5;  // |z(0)| realised by the network phase grid
  double t_end = 300.0;
  double window = 100.0;
  NetworkOptions network;
  ClassifyOptions reduced_classify;
  ClassifyOptions network_classify = finite_n_classify();
};

struct CompareReport {
  double span = 0.0;  // phase span giving |z(0)| = target
  Complex r0;
  AttractorSummary reduced;
  AttractorSummary network;
  double discrepancy = 0.0;  // |r_inf(reduced) - r_inf(network)|
};

/// Span s of the midpoint grid with |z| = sin(s/2) / (N sin(s/(2N))) equal to `target`.
inline double span_for_order(std::size_t n, double target) {
  if (!(target > 0.0 && target < 1.0)) throw InvalidParameter("span_for_order: target must lie in (0, 1)");
  const double nn = static_cast<double>(n);
  auto mag = [nn](double s) { return std::sin(0.5 * s) / (nn * std::sin(0.5 * s / nn)); };
  double a = 1e-12;
  double b = kTwoPi;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    const double m = 0.5 * (a + b);
    (mag(m) > target ? a : b) = m;
  }
  return 0.5 * (a + b);
}

inline CompareReport compare_reduced_network(const SystemParams& p, std::size_t n, const MatchedInitials& m = {}) {
  CompareReport rep;
  rep.span = span_for_order(n, m.target_r0);
  NetworkOptions no = m.network;
  no.init = PhaseInit::grid;
  no.record_from = m.t_end - m.window;
  const NetworkRun net = run_network(n, p, rep.span, m.t_end, no);
  // The reduced variable is the conjugate of the network's z: it turns at -omega0.
  rep.r0 = std::conj(order_parameter(initial_phases(n, rep.span, PhaseInit::grid, 0)));
  RunOptions ro;
  ro.record_from = m.t_end - m.window;
  const ReducedRun red = run_reduced(p, rep.r0, m.t_end, ro);
  rep.network = classify_attractor(net.trace, m.window, m.network_classify);
  rep.reduced = classify_attractor(red.trace, m.window, m.reduced_classify);
  rep.discrepancy = std::abs(rep.reduced.r_inf - rep.network.r_inf);
  return rep;
}

// ---------------------------------------------------------------------------
// Amplitude growth near a Hopf point

struct GrowthOptions {
  double transient = 20000.0;  // growth rates near criticality are O(1e-3)
  double window = 200.0;
  double initial_r = 0.02;
};

/// Mean |r|^2 over the last `window` of a run from constant history `r0`.
inline double steady_r2(const SystemParams& p, Complex r0, const GrowthOptions& g) {
  RunOptions ro;
  ro.record_from = g.transient;
  const ReducedRun run = run_reduced(p, r0, g.transient + g.window, ro);
  double acc = 0.0;
  for (const auto& v : run.trace.values) acc += std::norm(v);
  return acc / static_cast<double>(run.trace.values.size());
}

/// +1 when increasing the swept parameter destabilises r = 0 at the Hopf point.
inline int unstable_direction(const HopfPoint& h, Sweep sweep, const SystemParams& p) {
  const SystemParams ph = p.with_k(h.k).with_tau(h.tau);
  const auto s = root_sensitivity(Complex(0.0, h.beta), ph);
  const double d = sweep == Sweep::k ? s.d_k.real() : s.d_tau.real();
  if (d == 0.0) throw InvalidParameter("unstable_direction: crossing is not transversal");
  return d > 0.0 ? 1 : -1;
}

struct ScalingFit {
  std::vector<double> offsets;  // unsigned distances past the Hopf value
  std::vector<double> r2;
  double slope = 0.0;           // |r|^2 ~ slope * offset (line through the origin)
  double r_squared = 0.0;
};

/// Steady |r|^2 at offsets past a Hopf point and its fit by a line through the origin.
inline ScalingFit amplitude_scaling(const HopfPoint& h, Sweep sweep, const std::vector<double>& offsets,
                                    const SystemParams& p, const GrowthOptions& g = {}) {
  const int dir = unstable_direction(h, sweep, p);
  ScalingFit fit;
  const SystemParams ph = p.with_k(h.k).with_tau(h.tau);
  for (double off : offsets) {
    const double v = (sweep == Sweep::k ? h.k : h.tau) + dir * off;
    const SystemParams q = sweep == Sweep::k ? ph.with_k(v) : ph.with_tau(v);
    fit.offsets.push_back(off);
    fit.r2.push_back(steady_r2(q, g.initial_r, g));
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    sxy += fit.offsets[i] * fit.r2[i];
    sxx += fit.offsets[i] * fit.offsets[i];
  }
  fit.slope = sxy / sxx;
  const double mean = std::accumulate(fit.r2.begin(), fit.r2.end(), 0.0) / static_cast<double>(fit.r2.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    ss_res += std::pow(fit.r2[i] - fit.slope * fit.offsets[i], 2);
    ss_tot += std::pow(fit.r2[i] - mean, 2);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return fit;
}

struct BistabilityProbe {
  double offset = 0.0;       // distance on the stable side of the Hopf value
  double small_initial = 0.0;
  double small_final = 0.0;  // mean |r| at the end of the small-history run
  AttractorSummary large;    // attractor reached from the large history
  bool small_decays() const { return small_final < 0.5 * small_initial; }
  bool large_persists() const { return large.kind != AttractorKind::incoherent && large.r_inf > 0.1; }
};

/// On the stable side of a Hopf point, checks that a tiny perturbation of
/// r = 0 decays while a large history reaches a distinct coherent attractor.
inline BistabilityProbe bistability_probe(const HopfPoint& h, Sweep sweep, double offset, const SystemParams& p,
                                          double small_r = 1e-3, double large_r = 0.5,
                                          const GrowthOptions& g = {}) {
  const int dir = unstable_direction(h, sweep, p);
  const SystemParams ph = p.with_k(h.k).with_tau(h.tau);
  const double v = (sweep == Sweep::k ? h.k : h.tau) - dir * offset;
  const SystemParams q = sweep == Sweep::k ? ph.with_k(v) : ph.with_tau(v);
  BistabilityProbe pr;
  pr.offset = offset;
  pr.small_initial = small_r;
  pr.small_final = std::sqrt(steady_r2(q, small_r, g));
  RunOptions ro;
  ro.record_from = g.transient;
  const ReducedRun big = run_reduced(q, large_r, g.transient + g.window, ro);
  pr.large = classify_attractor(big.trace, g.window);
  return pr;
}

}  // namespace dkb
