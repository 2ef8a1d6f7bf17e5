#pragma once

// Zero counting by the argument principle on piecewise-smooth closed paths.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "dkb/model.hpp"

namespace dkb {

/// One smooth piece of a closed path, parametrised on [0, 1].
using PathPiece = std::function<Complex(double)>;

inline PathPiece segment(Complex a, Complex b) {
  return [a, b](double s) { return a + (b - a) * s; };
}

/// Circular arc around `center` from angle `from` to angle `to`.
inline PathPiece arc(Complex center, double radius, double from, double to) {
  return [=](double s) { return center + std::polar(radius, from + (to - from) * s); };
}

struct WindingResult {
  double total_arg = 0.0;   // accumulated change of arg f
  double min_abs = HUGE_VAL;  // smallest |f| sampled on the path
  Complex argmin{};         // where it was sampled
  bool unresolved = false;  // refinement hit the depth limit
  int winding() const { return static_cast<int>(std::lround(total_arg / (2.0 * std::numbers::pi))); }
};

struct WindingOptions {
  int initial_samples = 64;      // per piece
  int max_depth = 40;
  double max_angle_step = 0.4;   // radians between accepted neighbours
};

namespace detail {

template <class F>
void accumulate_piece(F& f, const PathPiece& piece, double s0, double s1, Complex f0, Complex f1, int depth,
                      const WindingOptions& opt, WindingResult& out) {
  const double d = std::arg(f1 / f0);
  if (std::abs(d) <= opt.max_angle_step) {
    out.total_arg += d;
    return;
  }
  if (depth >= opt.max_depth) {
    out.unresolved = true;
    out.total_arg += d;
    return;
  }
  const double sm = 0.5 * (s0 + s1);
  const Complex zm = piece(sm);
  const Complex fm = f(zm);
  if (std::abs(fm) < out.min_abs) {
    out.min_abs = std::abs(fm);
    out.argmin = zm;
  }
  accumulate_piece(f, piece, s0, sm, f0, fm, depth + 1, opt, out);
  accumulate_piece(f, piece, sm, s1, fm, f1, depth + 1, opt, out);
}

}  // namespace detail

/// Change of arg f along the closed path formed by `pieces` (traversed in order).
/// The winding number equals zeros minus poles enclosed, counted positively
/// for counter-clockwise traversal.
template <class F>
WindingResult winding(F&& f, const std::vector<PathPiece>& pieces, const WindingOptions& opt = {}) {
  WindingResult out;
  for (const auto& piece : pieces) {
    const int n = opt.initial_samples;
    double s_prev = 0.0;
    Complex z_prev = piece(0.0);
    Complex f_prev = f(z_prev);
    if (std::abs(f_prev) < out.min_abs) {
      out.min_abs = std::abs(f_prev);
      out.argmin = z_prev;
    }
    for (int i = 1; i <= n; ++i) {
      const double s = static_cast<double>(i) / n;
      const Complex z = piece(s);
      const Complex fz = f(z);
      if (std::abs(fz) < out.min_abs) {
        out.min_abs = std::abs(fz);
        out.argmin = z;
      }
      detail::accumulate_piece(f, piece, s_prev, s, f_prev, fz, 0, opt, out);
      s_prev = s;
      f_prev = fz;
    }
  }
  return out;
}

/// Counter-clockwise boundary of [x0, x0 + width] x [-half_height, half_height],
/// optionally indented around the origin with a small right half-disc so that
/// a root at zero is excluded.
inline std::vector<PathPiece> right_rectangle(double x0, double width, double half_height, double indent = 0.0) {
  const Complex bl{x0, -half_height};
  const Complex br{x0 + width, -half_height};
  const Complex tr{x0 + width, half_height};
  const Complex tl{x0, half_height};
  std::vector<PathPiece> path{segment(bl, br), segment(br, tr), segment(tr, tl)};
  if (indent > 0.0) {
    path.push_back(segment(tl, Complex{x0, indent}));
    path.push_back(arc(Complex{x0, 0.0}, indent, std::numbers::pi / 2, -std::numbers::pi / 2));
    path.push_back(segment(Complex{x0, -indent}, bl));
  } else {
    path.push_back(segment(tl, bl));
  }
  return path;
}

}  // namespace dkb
