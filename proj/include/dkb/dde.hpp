#pragma once

// Fixed-step RK4 integrator for systems with one constant delay. Delayed
// values come from cubic-Hermite dense output over the stored nodes, or from
// the prehistory function before the first node.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dkb/errors.hpp"

namespace dkb {

using HistoryFunction = std::function<void(double t, std::span<double> out)>;

inline double default_step(double tau) { return tau > 0.0 ? std::min(tau / 64.0, 1e-2) : 1e-2; }

/// Solution of a delayed system on [t0, t1] (nodes spaced by h) together with
/// its prehistory on [t0 - tau, t0).
class HistoryTrajectory {
 public:
  /// Constant history equal to `state` for t <= t0.
  static HistoryTrajectory constant(std::vector<double> state, double t0 = 0.0) {
    const std::size_t dim = state.size();
    auto shared = std::make_shared<const std::vector<double>>(state);
    HistoryTrajectory h(dim, t0, [shared](double, std::span<double> out) {
      std::copy(shared->begin(), shared->end(), out.begin());
    });
    h.append_node(state);
    return h;
  }

  /// Arbitrary history function; the node at t0 is taken from it.
  static HistoryTrajectory from_function(std::size_t dim, double t0, HistoryFunction f) {
    HistoryTrajectory h(dim, t0, std::move(f));
    std::vector<double> x0(dim);
    h.prehistory_(t0, x0);
    h.append_node(x0);
    return h;
  }

  std::size_t dim() const noexcept { return dim_; }
  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return node_time(last_index()); }
  double step() const noexcept { return h_; }
  double history_span() const noexcept { return span_; }

  /// Global index range of retained nodes.
  std::size_t first_index() const noexcept { return first_; }
  std::size_t last_index() const noexcept { return first_ + count() - 1; }
  std::size_t count() const noexcept { return states_.size() / dim_; }

  double node_time(std::size_t global) const noexcept { return t0_ + static_cast<double>(global) * h_; }
  std::span<const double> node_state(std::size_t global) const {
    return {states_.data() + (global - first_) * dim_, dim_};
  }
  std::span<const double> node_derivative(std::size_t global) const {
    return {derivs_.data() + (global - first_) * dim_, dim_};
  }
  std::span<const double> back() const { return node_state(last_index()); }

  /// Earliest time at which value_at() is defined.
  double earliest() const noexcept { return first_ == 0 ? t0_ - span_ : node_time(first_); }

  /// Dense output; exact at nodes.
  void value_at(double t, std::span<double> out) const {
    const double tol = 1e-9 * std::max(1.0, h_);
    if (t < earliest() - tol || t > t1() + tol)
      throw HistoryRangeError("history query at t = " + std::to_string(t) + " outside [" + std::to_string(earliest()) +
                              ", " + std::to_string(t1()) + "]");
    if (t < t0_ - tol) {
      prehistory_(t, out);
      return;
    }
    const double s = (t - t0_) / h_;
    double fl = std::floor(s + 1e-9);
    std::size_t i = fl <= 0.0 ? 0 : static_cast<std::size_t>(fl);
    double theta = s - static_cast<double>(i);
    if (i >= last_index()) {
      i = last_index();
      theta = 0.0;
    }
    if (i < first_) throw HistoryRangeError("history query before retained window");
    if (std::abs(theta) < 1e-9) {
      const auto x = node_state(i);
      std::copy(x.begin(), x.end(), out.begin());
      return;
    }
    if (!has_derivative(i + 1))
      throw HistoryRangeError("dense output not yet available at t = " + std::to_string(t));
    const auto x0 = node_state(i);
    const auto x1 = node_state(i + 1);
    const auto f0 = node_derivative(i);
    const auto f1 = node_derivative(i + 1);
    const double th = theta;
    const double th2 = th * th;
    const double th3 = th2 * th;
    const double h00 = 2 * th3 - 3 * th2 + 1;
    const double h10 = th3 - 2 * th2 + th;
    const double h01 = -2 * th3 + 3 * th2;
    const double h11 = th3 - th2;
    for (std::size_t c = 0; c < dim_; ++c)
      out[c] = h00 * x0[c] + h10 * h_ * f0[c] + h01 * x1[c] + h11 * h_ * f1[c];
  }

  std::vector<double> value_at(double t) const {
    std::vector<double> out(dim_);
    value_at(t, out);
    return out;
  }

  /// The last `width` time units as a new history ending at t = 0.
  HistoryTrajectory tail_window(double width) const {
    auto snapshot = std::make_shared<const HistoryTrajectory>(*this);
    const double shift = t1();
    if (width > shift - earliest() + 1e-12) throw HistoryRangeError("tail_window wider than retained history");
    return from_function(dim_, 0.0, [snapshot, shift](double t, std::span<double> out) {
      snapshot->value_at(t + shift, out);
    });
  }

  // Engine-side mutators used by integrate().
  bool has_derivative(std::size_t global) const noexcept { return global - first_ < derivs_.size() / dim_; }

  void append_node(std::span<const double> x) { states_.insert(states_.end(), x.begin(), x.end()); }
  void set_derivative(std::size_t global, std::span<const double> f) {
    const std::size_t local = global - first_;
    if (derivs_.size() / dim_ == local) derivs_.insert(derivs_.end(), f.begin(), f.end());
  }

  void set_step(double h) { h_ = h; }
  void extend_span(double tau) { span_ = std::max(span_, tau); }
  bool fresh() const noexcept { return count() == 1 && derivs_.empty(); }

  void trim_before(double t_keep) {
    if (t_keep <= node_time(first_)) return;
    const auto drop = static_cast<std::size_t>(std::floor((t_keep - t0_) / h_)) - first_;
    // Compact only once a sizeable prefix has accumulated.
    if (drop < 1024 || drop >= count()) return;
    states_.erase(states_.begin(), states_.begin() + static_cast<std::ptrdiff_t>(drop * dim_));
    derivs_.erase(derivs_.begin(), derivs_.begin() + static_cast<std::ptrdiff_t>(std::min(drop * dim_, derivs_.size())));
    first_ += drop;
  }

 private:
  HistoryTrajectory(std::size_t dim, double t0, HistoryFunction f) : dim_(dim), t0_(t0), prehistory_(std::move(f)) {
    if (dim == 0) throw InvalidParameter("history dimension must be positive");
  }

  std::size_t dim_;
  double t0_;
  double h_ = 1.0;
  double span_ = 0.0;
  HistoryFunction prehistory_;
  std::size_t first_ = 0;
  std::vector<double> states_;
  std::vector<double> derivs_;
};

using StepObserver = std::function<void(double t, std::span<const double> x)>;

struct IntegrateOptions {
  bool retain_all = false;   // keep every node instead of the trailing tau-window
  StepObserver observer;     // called at the start time and after every step
  double keep_window = 0.0;  // retain at least this much trailing history (beyond tau)
};

/// Integrates x'(t) = rhs(t, x(t), x(t - tau)) from history.t1() to t_end with
/// classical RK4 at fixed step h. `rhs` is called as
/// rhs(t, span<const double> x, span<const double> x_delayed, span<double> dx).
template <class Rhs>
HistoryTrajectory integrate(Rhs&& rhs, HistoryTrajectory history, double t_end, double h, double tau,
                            const IntegrateOptions& opt = {}) {
  if (!(h > 0.0)) throw InvalidParameter("step must be positive");
  if (!(tau >= 0.0)) throw InvalidParameter("delay must be non-negative");
  if (tau > 0.0 && h > tau / 4.0 * (1.0 + 1e-12))
    throw StepTooLargeError("step " + std::to_string(h) + " exceeds tau/4 = " + std::to_string(tau / 4.0));
  HistoryTrajectory& H = history;
  if (H.fresh()) {
    H.set_step(h);
  } else if (std::abs(H.step() - h) > 1e-14 * h) {
    throw InvalidParameter("continued integration must keep the step size");
  }
  H.extend_span(tau);

  const std::size_t d = H.dim();
  std::vector<double> x(d), xd(d), stage(d), k1(d), k2(d), k3(d), k4(d), next(d);
  const auto steps_total = static_cast<std::size_t>(std::llround(std::max(0.0, t_end - H.t0()) / h));
  std::size_t n = H.last_index();
  {
    auto xb = H.back();
    std::copy(xb.begin(), xb.end(), x.begin());
  }
  auto delayed = [&](double t_stage, std::span<const double> xs) -> std::span<const double> {
    if (tau == 0.0) return xs;
    H.value_at(t_stage - tau, xd);
    return xd;
  };
  if (opt.observer && n == 0) opt.observer(H.t0(), x);

  for (; n < steps_total; ++n) {
    const double t = H.node_time(n);
    rhs(t, std::span<const double>(x), delayed(t, x), std::span<double>(k1));
    H.set_derivative(n, k1);
    for (std::size_t c = 0; c < d; ++c) stage[c] = x[c] + 0.5 * h * k1[c];
    rhs(t + 0.5 * h, std::span<const double>(stage), delayed(t + 0.5 * h, stage), std::span<double>(k2));
    for (std::size_t c = 0; c < d; ++c) stage[c] = x[c] + 0.5 * h * k2[c];
    rhs(t + 0.5 * h, std::span<const double>(stage), delayed(t + 0.5 * h, stage), std::span<double>(k3));
    for (std::size_t c = 0; c < d; ++c) stage[c] = x[c] + h * k3[c];
    rhs(t + h, std::span<const double>(stage), delayed(t + h, stage), std::span<double>(k4));
    bool finite = true;
    for (std::size_t c = 0; c < d; ++c) {
      next[c] = x[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
      finite = finite && std::isfinite(next[c]);
    }
    if (!finite) throw DivergenceError(t + h, "non-finite state");
    H.append_node(next);
    x.swap(next);
    if (opt.observer) opt.observer(H.node_time(n + 1), x);
    if (!opt.retain_all) H.trim_before(t + h - std::max(tau, opt.keep_window) - 2.0 * h);
  }
  // Derivative at the final node completes the dense output up to t1.
  if (!H.has_derivative(H.last_index())) {
    const double t = H.t1();
    rhs(t, std::span<const double>(x), delayed(t, x), std::span<double>(k1));
    H.set_derivative(H.last_index(), k1);
  }
  return history;
}

}  // namespace dkb
