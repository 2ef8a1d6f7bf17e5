// dkb: command-line front end for the delay-coupled Kuramoto bifurcation toolkit.
//
//   dkb hopf-curves  Hopf curves, Bautin curve, Bautin and double-Hopf points
//   dkb branch       rotating-wave branches with stability and folds
//   dkb simulate     reduced | network | hr | sweep
//   dkb double-hopf  coefficients and unfolding at one curve intersection
//
// Every command writes into --out (default: $DKB_OUT_DIR, else ".") and leaves
// a <command>_manifest.json next to its outputs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dkb/dkb.hpp"
#include "json.hpp"

#ifndef DKB_VERSION
#define DKB_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dkb;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kNumerical = 3, kInvariant = 4 };

/// Post-condition failure inside the tool; maps to exit code 4.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A run that produced output but must still report failure (truncated branch).
struct PartialResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Context {
  std::string command;
  fs::path out_dir;
  std::vector<std::string> argv;
  json params = json::object();
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

void write_manifest(const Context& ctx, double wall) {
  json m;
  m["command"] = ctx.command;
  m["argv"] = ctx.argv;
  m["params"] = ctx.params;
  m["seed"] = ctx.seed ? json(*ctx.seed) : json(nullptr);
  m["version"] = DKB_VERSION;
  m["outputs"] = ctx.outputs;
  m["wall_time_s"] = wall;
  write_json(ctx.out_dir / (ctx.command + "_manifest.json"), m);
}

std::string underscore(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

// "lo:hi"
Interval parse_interval(const std::string& s) {
  const auto c = s.find(':');
  if (c == std::string::npos) throw InvalidParameter("expected lo:hi, got '" + s + "'");
  try {
    Interval iv{std::stod(s.substr(0, c)), std::stod(s.substr(c + 1))};
    if (!(iv.hi > iv.lo)) throw InvalidParameter("empty range '" + s + "'");
    return iv;
  } catch (const std::logic_error&) {
    throw InvalidParameter("bad number in range '" + s + "'");
  }
}

// "plus:0..3,minus:0..1" or "plus:0,minus:0"
std::vector<std::pair<Branch, int>> parse_curves(const std::string& s) {
  std::vector<std::pair<Branch, int>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto c = item.find(':');
    if (c == std::string::npos) throw InvalidParameter("expected branch:j or branch:j0..j1, got '" + item + "'");
    const Branch b = parse_branch(item.substr(0, c));
    const std::string idx = item.substr(c + 1);
    const auto dots = idx.find("..");
    int lo = 0;
    int hi = 0;
    try {
      lo = std::stoi(idx.substr(0, dots));
      hi = dots == std::string::npos ? lo : std::stoi(idx.substr(dots + 2));
    } catch (const std::logic_error&) {
      throw InvalidParameter("bad curve index in '" + item + "'");
    }
    if (lo < 0 || hi < lo) throw InvalidParameter("bad curve index range in '" + item + "'");
    for (int j = lo; j <= hi; ++j) out.emplace_back(b, j);
  }
  if (out.empty()) throw InvalidParameter("no curves selected");
  return out;
}

std::string curve_name(Branch b, int j) { return to_string(b) + ":" + std::to_string(j); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const AttractorSummary& s) {
  return {{"kind", to_string(s.kind)},
          {"r_inf", s.r_inf},
          {"period", opt_json(s.period)},
          {"rotation_frequency", opt_json(s.rotation_frequency)},
          {"modulation", s.modulation}};
}

// Short form for the stdout summary line.
std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string describe(const AttractorSummary& s) {
  std::string out = to_string(s.kind);
  if (s.period) out += ", period " + fmt_short(*s.period);
  return out;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

void check_reduced_bound(double max_abs) {
  if (max_abs > 1.0 + 1e-6) throw InvariantViolation("reduced |r| reached " + fmt(max_abs));
}

// ---------------------------------------------------------------------------
// hopf-curves

struct HopfCurvesArgs {
  double k_max = 4.0;
  int n = 400;
  std::string branches = "plus:0..3,minus:0..1";
  std::string format = "csv";
};

void run_hopf_curves(Context& ctx, const SystemParams& p, const HopfCurvesArgs& a) {
  if (!(a.k_max > 2.0 * p.delta())) throw InvalidParameter("--k-max must exceed 2 delta");
  if (a.n < 2) throw InvalidParameter("--n must be at least 2");
  const auto curves = parse_curves(a.branches);
  // Sample strictly inside (2 delta, k_max]: tau is not defined at k = 2 delta.
  const Interval kr{2.0 * p.delta() + (a.k_max - 2.0 * p.delta()) / a.n, a.k_max};

  const auto sampled = parallel_map(
      curves, [&](const std::pair<Branch, int>& c) { return hopf_curve(c.first, c.second, kr, a.n, p); }, ctx.jobs);
  for (const auto& c : sampled)
    for (const auto& h : c)
      if (std::abs(characteristic_residual({0.0, h.beta}, p.with_k(h.k).with_tau(h.tau))) > 1e-10)
        throw InvariantViolation("Hopf point with residual above 1e-10");

  CurveSearch search;
  search.k_max = a.k_max;
  const auto bautins = parallel_map(
      curves, [&](const std::pair<Branch, int>& c) { return find_bautin(c.first, c.second, p, search); }, ctx.jobs);
  std::vector<BautinPoint> bp;
  for (const auto& b : bautins)
    if (b) bp.push_back(*b);
  std::sort(bp.begin(), bp.end(), [](const auto& x, const auto& y) { return x.tau < y.tau; });

  std::vector<std::pair<std::pair<Branch, int>, std::pair<Branch, int>>> pairs;
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t j = i + 1; j < curves.size(); ++j)
      if (curves[i].first != curves[j].first) pairs.emplace_back(curves[i], curves[j]);
  const auto hh = parallel_map(
      pairs,
      [&](const auto& pr) -> std::optional<DoubleHopfPoint> {
        const auto& plus = pr.first.first == Branch::plus ? pr.first : pr.second;
        const auto& minus = pr.first.first == Branch::plus ? pr.second : pr.first;
        try {
          return find_double_hopf(plus, minus, p, search);
        } catch (const ResonanceError&) {
          return std::nullopt;
        }
      },
      ctx.jobs);
  std::vector<DoubleHopfPoint> dp;
  for (const auto& d : hh)
    if (d) dp.push_back(*d);
  std::sort(dp.begin(), dp.end(), [](const auto& x, const auto& y) { return x.tau < y.tau; });

  std::vector<std::pair<double, double>> red;  // (tau, k) on the Bautin curve
  for (int i = 0; i < a.n; ++i) {
    const double k = kr.lo + kr.width() * i / (a.n - 1);
    // k = sqrt(4 delta / tau + 8 delta^2) solved for tau.
    const double den = k * k - 8.0 * p.delta() * p.delta();
    if (den > 0.0) red.emplace_back(4.0 * p.delta() / den, k);
  }

  if (a.format == "json") {
    json doc;
    doc["omega0"] = p.omega0();
    doc["delta"] = p.delta();
    doc["k_max"] = a.k_max;
    json jc = json::array();
    for (std::size_t i = 0; i < curves.size(); ++i) {
      json pts = json::array();
      for (const auto& h : sampled[i]) pts.push_back({{"k", h.k}, {"tau", h.tau}, {"beta", h.beta}});
      jc.push_back({{"branch", to_string(curves[i].first)}, {"j", curves[i].second}, {"points", pts}});
    }
    doc["curves"] = jc;
    json jr = json::array();
    for (const auto& [tau, k] : red) jr.push_back({{"k", k}, {"tau", tau}});
    doc["bautin_curve"] = jr;
    json jp = json::array();
    for (std::size_t i = 0; i < bp.size(); ++i)
      jp.push_back({{"label", "B" + std::to_string(i + 1)},
                    {"type", "bautin"},
                    {"k", bp[i].k},
                    {"tau", bp[i].tau},
                    {"beta", bp[i].beta},
                    {"curve", curve_name(bp[i].branch, bp[i].index)},
                    {"re_l2", bp[i].re_l2}});
    for (std::size_t i = 0; i < dp.size(); ++i)
      jp.push_back({{"label", "HH" + std::to_string(i + 1)},
                    {"type", "double_hopf"},
                    {"k", dp[i].k},
                    {"tau", dp[i].tau},
                    {"alpha", dp[i].alpha},
                    {"beta", dp[i].beta},
                    {"curves", {curve_name(dp[i].branch_a, dp[i].index_a), curve_name(dp[i].branch_b, dp[i].index_b)}}});
    doc["points"] = jp;
    write_json(ctx.file("hopf_curves.json"), doc);
  } else {
    Csv c(ctx.file("hopf_curves.csv"), {"branch", "j", "k", "tau", "beta"});
    for (std::size_t i = 0; i < curves.size(); ++i)
      for (const auto& h : sampled[i])
        c.row({to_string(curves[i].first), std::to_string(curves[i].second), fmt(h.k), fmt(h.tau), fmt(h.beta)});
    Csv r(ctx.file("bautin_curve.csv"), {"k", "tau"});
    for (const auto& [tau, k] : red) r.row({fmt(k), fmt(tau)});
    Csv pt(ctx.file("points.csv"), {"label", "type", "k", "tau", "frequency_1", "frequency_2", "curves", "re_l2"});
    for (std::size_t i = 0; i < bp.size(); ++i)
      pt.row({"B" + std::to_string(i + 1), "bautin", fmt(bp[i].k), fmt(bp[i].tau), fmt(bp[i].beta), "",
              curve_name(bp[i].branch, bp[i].index), fmt(bp[i].re_l2)});
    for (std::size_t i = 0; i < dp.size(); ++i)
      pt.row({"HH" + std::to_string(i + 1), "double_hopf", fmt(dp[i].k), fmt(dp[i].tau), fmt(dp[i].alpha),
              fmt(dp[i].beta),
              curve_name(dp[i].branch_a, dp[i].index_a) + "|" + curve_name(dp[i].branch_b, dp[i].index_b), ""});
  }
  for (std::size_t i = 0; i < bp.size(); ++i)
    std::printf("B%zu  k=%.4f tau=%.4f (%s)\n", i + 1, bp[i].k, bp[i].tau, curve_name(bp[i].branch, bp[i].index).c_str());
  for (std::size_t i = 0; i < dp.size(); ++i)
    std::printf("HH%zu k=%.4f tau=%.4f (%s x %s)\n", i + 1, dp[i].k, dp[i].tau,
                curve_name(dp[i].branch_a, dp[i].index_a).c_str(), curve_name(dp[i].branch_b, dp[i].index_b).c_str());
}

// ---------------------------------------------------------------------------
// branch

struct BranchArgs {
  std::optional<double> tau;
  std::optional<double> k;
  std::string sweep = "k";
  std::string range;
  std::string branches = "plus:0,minus:0";
  double ds_max = 1e-2;
};

void run_branch(Context& ctx, const SystemParams& p0, const BranchArgs& a) {
  const Sweep sweep = parse_sweep(a.sweep);
  if (sweep == Sweep::k && !a.tau) throw InvalidParameter("--sweep k needs --tau");
  if (sweep == Sweep::tau && !a.k) throw InvalidParameter("--sweep tau needs --k");
  const Interval range = a.range.empty() ? (sweep == Sweep::k ? Interval{2.0 * p0.delta(), 6.0} : Interval{0.0, 10.0})
                                         : parse_interval(a.range);
  const SystemParams p = sweep == Sweep::k ? p0.with_tau(*a.tau) : p0.with_k(*a.k);
  const auto curves = parse_curves(a.branches);

  std::vector<HopfPoint> seeds;
  for (const auto& [b, j] : curves) {
    if (sweep == Sweep::k) {
      for (const auto& h : hopf_points_at_tau(b, j, *a.tau, p, range.hi))
        if (range.contains(h.k)) seeds.push_back(h);
    } else {
      try {
        const auto h = make_hopf_point(b, j, *a.k, p);
        if (range.contains(h.tau)) seeds.push_back(h);
      } catch (const NoHopfError&) {
        throw;
      } catch (const DegenerateFrequencyError&) {
      }
    }
  }

  ContinuationOptions opt;
  opt.ds_max = a.ds_max;
  const auto branches = parallel_map(
      seeds, [&](const HopfPoint& h) { return solve_branch(h, sweep, range, p, opt); }, ctx.jobs);

  Csv rows(ctx.file("branch.csv"),
           {"branch_id", "curve", "parameter", "k", "tau", "R", "Omega", "period", "unstable_count", "marginal"});
  Csv folds(ctx.file("folds.csv"), {"branch_id", "curve", "parameter", "R", "Omega"});
  json doc;
  doc["sweep"] = to_string(sweep);
  doc["fixed"] = sweep == Sweep::k ? json{{"tau", *a.tau}} : json{{"k", *a.k}};
  doc["range"] = {range.lo, range.hi};
  json jb = json::array();
  bool truncated = false;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& br = branches[i];
    const std::string name = curve_name(seeds[i].branch, seeds[i].index);
    for (const auto& w : br.points) {
      const auto res = rotating_wave_residual(w.R, w.Omega, p.with_k(w.k).with_tau(w.tau));
      if (std::hypot(res[0], res[1]) > 1e-8) throw InvariantViolation("branch point off the wave set");
      const double par = sweep == Sweep::k ? w.k : w.tau;
      rows.row({std::to_string(i), name, fmt(par), fmt(w.k), fmt(w.tau), fmt(w.R), fmt(w.Omega),
                fmt(w.Omega != 0.0 ? w.period() : 0.0), std::to_string(w.unstable_count), w.marginal ? "1" : "0"});
    }
    json jf = json::array();
    for (const auto& f : fold_points(br)) {
      folds.row({std::to_string(i), name, fmt(f.parameter), fmt(f.R), fmt(f.Omega)});
      jf.push_back({{"parameter", f.parameter}, {"R", f.R}, {"Omega", f.Omega}});
    }
    jb.push_back({{"branch_id", i},
                  {"curve", name},
                  {"hopf", {{"k", seeds[i].k}, {"tau", seeds[i].tau}, {"beta", seeds[i].beta}}},
                  {"points", br.points.size()},
                  {"termination", br.termination},
                  {"truncated", br.truncated},
                  {"folds", jf}});
    truncated = truncated || br.truncated;
    std::printf("branch %zu (%s): %zu points, %zu folds, %s\n", i, name.c_str(), br.points.size(), br.folds.size(),
                br.termination.c_str());
  }
  doc["branches"] = jb;
  write_json(ctx.file("branch.json"), doc);
  if (truncated) throw PartialResult("continuation truncated (corrector failed at minimum step)");
}

// ---------------------------------------------------------------------------
// simulate

struct SimArgs {
  double k = 1.0;
  double tau = 1.0;
  double t_end = 300.0;
  double window = 100.0;
  double h = 0.0;
  int sample_every = 10;
  // reduced
  double r0 = 0.01;
  double r0_phase = 0.0;
  // network
  std::size_t n = 300;
  double span = kTwoPi;
  std::string sampling = "quantile";
  std::string init = "grid";
  std::uint64_t seed = 0;
  double snapshot_every = 0.0;
  // hr
  double hr_k = 2.0;
  double hr_tau = 4.0;
  std::string hr_span = "1:2.5";
  double current_mean = 1.56;
  double current_var = 0.5;
  // sweep
  std::string sweep = "k";
  std::string range;
  int steps = 40;
  std::string direction = "both";
  double transient = 200.0;
};

void trace_csv(const fs::path& path, const OrderParameterTrace& tr, int every) {
  Csv c(path, {"t", "re", "im", "abs"});
  for (std::size_t i = 0; i < tr.times.size(); i += static_cast<std::size_t>(std::max(1, every)))
    c.row({fmt(tr.times[i]), fmt(tr.values[i].real()), fmt(tr.values[i].imag()), fmt(std::abs(tr.values[i]))});
}

void run_sim_reduced(Context& ctx, const SystemParams& p0, const SimArgs& a) {
  const SystemParams p = p0.with_k(a.k).with_tau(a.tau);
  if (!(a.window > 0.0) || a.window > a.t_end) throw InvalidParameter("--window must lie in (0, t_end]");
  RunOptions ro;
  ro.h = a.h;
  const auto run = run_reduced(p, std::polar(a.r0, a.r0_phase), a.t_end, ro);
  check_reduced_bound(run.max_abs);
  const auto s = classify_attractor(run.trace, a.window);
  trace_csv(ctx.file("trace.csv"), run.trace, a.sample_every);
  json doc{{"target", "reduced"}, {"k", a.k}, {"tau", a.tau}, {"summary", summary_json(s)}, {"max_abs", run.max_abs}};
  write_json(ctx.file("summary.json"), doc);
  std::printf("%s\n", describe(s).c_str());
}

void run_sim_network(Context& ctx, const SystemParams& p0, const SimArgs& a) {
  const SystemParams p = p0.with_k(a.k).with_tau(a.tau);
  if (!(a.window > 0.0) || a.window > a.t_end) throw InvalidParameter("--window must lie in (0, t_end]");
  // Spans typed as 6.2832 mean the full circle.
  const double span = a.span > kTwoPi && a.span <= kTwoPi + 1e-4 ? kTwoPi : a.span;
  NetworkOptions no;
  no.sampling = a.sampling == "random" ? Sampling::random : Sampling::quantile;
  if (a.sampling != "random" && a.sampling != "quantile") throw InvalidParameter("--sampling quantile|random");
  no.init = a.init == "random" ? PhaseInit::random : PhaseInit::grid;
  if (a.init != "random" && a.init != "grid") throw InvalidParameter("--init grid|random");
  no.seed = a.seed;
  no.h = a.h;
  no.snapshot_every = a.snapshot_every;
  const auto run = run_network(a.n, p, span, a.t_end, no);
  for (const auto& z : run.trace.values)
    if (std::abs(z) > 1.0 + 1e-12) throw InvariantViolation("network |z| above 1");
  const auto s = classify_attractor(run.trace, a.window, finite_n_classify());
  trace_csv(ctx.file("trace.csv"), run.trace, a.sample_every);
  if (!run.snapshots.empty()) {
    Csv c(ctx.file("snapshots.csv"), {"t", "j", "phase"});
    for (const auto& snap : run.snapshots)
      for (std::size_t j = 0; j < snap.phases.size(); ++j) c.row({fmt(snap.t), std::to_string(j), fmt(snap.phases[j])});
  }
  json doc{{"target", "network"}, {"N", a.n},       {"k", a.k},       {"tau", a.tau},
           {"span", span},        {"seed", a.seed}, {"sampling", a.sampling},
           {"init", a.init},      {"summary", summary_json(s)}};
  write_json(ctx.file("summary.json"), doc);
  std::printf("%s\n", describe(s).c_str());
}

void run_sim_hr(Context& ctx, const SimArgs& a) {
  HROptions ho;
  if (a.h > 0.0) ho.h = a.h;
  const Interval span = [&] {
    const auto c = a.hr_span.find(':');
    if (c == std::string::npos) throw InvalidParameter("--span for hr expects lo:hi");
    try {
      Interval iv{std::stod(a.hr_span.substr(0, c)), std::stod(a.hr_span.substr(c + 1))};
      if (iv.hi < iv.lo) throw InvalidParameter("empty --span");
      return iv;
    } catch (const std::logic_error&) {
      throw InvalidParameter("bad number in --span '" + a.hr_span + "'");
    }
  }();
  const auto res = run_hr(a.n, a.hr_k, a.hr_tau, a.current_mean, a.current_var, span, a.seed, a.t_end, ho);
  {
    Csv c(ctx.file("mean_field.csv"), {"t", "mean_x", "mean_z"});
    for (std::size_t i = 0; i < res.times.size(); i += static_cast<std::size_t>(std::max(1, a.sample_every)))
      c.row({fmt(res.times[i]), fmt(res.mean_x[i]), fmt(res.mean_z[i])});
  }
  {
    Csv c(ctx.file("peaks.csv"), {"j", "t"});
    for (std::size_t j = 0; j < res.peak_times.size(); ++j)
      for (double t : res.peak_times[j]) c.row({std::to_string(j), fmt(t)});
  }
  json doc{{"target", "hr"},
           {"N", a.n},
           {"k", a.hr_k},
           {"tau", a.hr_tau},
           {"span", {span.lo, span.hi}},
           {"seed", a.seed},
           {"current_mean", a.current_mean},
           {"current_var", a.current_var},
           {"verdict", to_string(res.verdict)},
           {"amplitude_ratio", res.amplitude_ratio},
           {"period", opt_json(res.period)},
           {"period_rel_std", res.period_rel_std}};
  write_json(ctx.file("summary.json"), doc);
  std::string line = to_string(res.verdict);
  if (res.verdict == HRVerdict::coherent && res.period) line += ", period " + fmt_short(*res.period);
  std::printf("%s\n", line.c_str());
}

void run_sim_sweep(Context& ctx, const SystemParams& p0, const SimArgs& a) {
  const Sweep sweep = parse_sweep(a.sweep);
  if (a.range.empty()) throw InvalidParameter("--range is required for sweep");
  const Interval range = parse_interval(a.range);
  const SystemParams p = p0.with_k(a.k).with_tau(a.tau);
  std::vector<Direction> dirs;
  if (a.direction == "up" || a.direction == "both") dirs.push_back(Direction::up);
  if (a.direction == "down" || a.direction == "both") dirs.push_back(Direction::down);
  if (dirs.empty()) throw InvalidParameter("--direction up|down|both");
  SweepOptions so;
  so.transient = a.transient;
  so.window = a.window;
  const auto runs = parallel_map(
      dirs, [&](const Direction& d) { return hysteresis_sweep(p, sweep, range, a.steps, d, so); }, ctx.jobs);
  Csv c(ctx.file("sweep.csv"), {"direction", "parameter", "kind", "r_inf", "period", "rotation_frequency"});
  json jd = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    json pts = json::array();
    for (const auto& q : runs[i]) {
      c.row({to_string(dirs[i]), fmt(q.parameter), to_string(q.summary.kind), fmt(q.summary.r_inf),
             q.summary.period ? fmt(*q.summary.period) : "", q.summary.rotation_frequency ? fmt(*q.summary.rotation_frequency) : ""});
      pts.push_back({{"parameter", q.parameter}, {"summary", summary_json(q.summary)}});
    }
    jd.push_back({{"direction", to_string(dirs[i])}, {"points", pts}});
  }
  json doc{{"target", "sweep"}, {"sweep", to_string(sweep)}, {"range", {range.lo, range.hi}}, {"steps", a.steps},
           {"directions", jd}};
  write_json(ctx.file("summary.json"), doc);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    std::string line = to_string(dirs[i]) + ": ";
    for (const auto& q : runs[i])
      line += q.summary.kind == AttractorKind::coherent ? 'C' : q.summary.kind == AttractorKind::incoherent ? '.' : '?';
    std::printf("%s\n", line.c_str());
  }
}

// ---------------------------------------------------------------------------
// double-hopf

void run_double_hopf(Context& ctx, const SystemParams& p, const std::string& pair, double k_max) {
  const auto curves = parse_curves(pair);
  if (curves.size() != 2) throw InvalidParameter("--pair needs exactly two curves");
  CurveSearch search;
  search.k_max = k_max;
  const auto dh = find_double_hopf(curves[0], curves[1], p, search);
  json doc;
  doc["pair"] = {curve_name(curves[0].first, curves[0].second), curve_name(curves[1].first, curves[1].second)};
  doc["found"] = dh.has_value();
  if (dh) {
    const auto& c = dh->coeffs;
    const Unfolding u = dh_unfolding(c);
    const double a = std::abs(dh->alpha);
    const double b = std::abs(dh->beta);
    doc["point"] = {{"k", dh->k}, {"tau", dh->tau}, {"alpha", dh->alpha}, {"beta", dh->beta}};
    doc["coefficients"] = {{"a11", complex_json(c.a11)}, {"a12", complex_json(c.a12)}, {"a21", complex_json(c.a21)},
                           {"a22", complex_json(c.a22)}, {"c11", complex_json(c.c11)}, {"c12", complex_json(c.c12)},
                           {"c21", complex_json(c.c21)}, {"c22", complex_json(c.c22)}};
    doc["unfolding"] = {{"eps1", u.eps1},
                        {"eps2", u.eps2},
                        {"b0", u.b0},
                        {"c0", u.c0},
                        {"d0", u.d0},
                        {"c1", {{"eps", u.c1_map.d_eps}, {"delta", u.c1_map.d_delta}}},
                        {"c2", {{"eps", u.c2_map.d_eps}, {"delta", u.c2_map.d_delta}}},
                        {"case", u.case_label},
                        {"ns_slopes", {opt_json(u.ns_slope_c0), opt_json(u.ns_slope_b0)}}};
    doc["checks"] = {{"nonresonance_margin", std::min(std::abs(a - 3.0 * b), std::abs(3.0 * a - b))},
                     {"transversal", std::abs(c.a11.real() * c.a22.real() - c.a12.real() * c.a21.real()) > 1e-12}};
    std::printf("HH k=%.4f tau=%.4f b0=%.4f c0=%.4f d0=%g case %s\n", dh->k, dh->tau, u.b0, u.c0, u.d0,
                u.case_label.c_str());
  } else {
    std::printf("no intersection for k in (%g, %g]\n", 2.0 * p.delta(), k_max);
  }
  write_json(ctx.file("double_hopf.json"), doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bifurcation analysis of the delay-coupled Kuramoto model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DKB_VERSION);

  double omega0 = 3.0;
  double delta = 0.1;
  std::string out_dir;
  unsigned jobs = 1;
  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--omega0", omega0, "centre frequency")->capture_default_str();
    sc->add_option("--delta", delta, "Lorentzian half-width")->capture_default_str();
    sc->add_option("--out", out_dir, "output directory (default $DKB_OUT_DIR or .)");
    sc->add_option("--jobs", jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  };

  HopfCurvesArgs hc;
  auto* c_hopf = app.add_subcommand("hopf-curves", "Hopf and Bautin curves with Bautin and double-Hopf points");
  add_common(c_hopf);
  c_hopf->add_option("--k-max", hc.k_max)->capture_default_str();
  c_hopf->add_option("--n", hc.n, "samples per curve")->capture_default_str();
  c_hopf->add_option("--branches", hc.branches)->capture_default_str();
  c_hopf->add_option("--format", hc.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  BranchArgs ba;
  auto* c_branch = app.add_subcommand("branch", "rotating-wave branches born at Hopf points");
  add_common(c_branch);
  c_branch->add_option("--tau", ba.tau, "fixed delay (with --sweep k)");
  c_branch->add_option("--k", ba.k, "fixed coupling (with --sweep tau)");
  c_branch->add_option("--sweep", ba.sweep)->check(CLI::IsMember({"k", "tau"}))->capture_default_str();
  c_branch->add_option("--range", ba.range, "lo:hi of the swept parameter");
  c_branch->add_option("--branches", ba.branches)->capture_default_str();
  c_branch->add_option("--ds-max", ba.ds_max)->capture_default_str();

  SimArgs sa;
  auto* c_sim = app.add_subcommand("simulate", "time integration experiments");
  c_sim->require_subcommand(1);
  auto add_sim_common = [&](CLI::App* sc) {
    add_common(sc);
    sc->add_option("--k", sa.k)->capture_default_str();
    sc->add_option("--tau", sa.tau)->capture_default_str();
    sc->add_option("--t-end", sa.t_end)->capture_default_str();
    sc->add_option("--window", sa.window)->capture_default_str();
    sc->add_option("--step", sa.h, "integration step (0 = default)")->capture_default_str();
    sc->add_option("--sample-every", sa.sample_every, "write every n-th step")->capture_default_str();
  };
  auto* s_red = c_sim->add_subcommand("reduced", "reduced mean-field model");
  add_sim_common(s_red);
  s_red->add_option("--r0", sa.r0, "|r| of the constant history")->capture_default_str();
  s_red->add_option("--r0-phase", sa.r0_phase)->capture_default_str();

  auto* s_net = c_sim->add_subcommand("network", "finite Kuramoto network");
  add_sim_common(s_net);
  s_net->add_option("--N", sa.n)->capture_default_str();
  s_net->add_option("--span", sa.span, "initial phase span")->capture_default_str();
  s_net->add_option("--sampling", sa.sampling)->capture_default_str();
  s_net->add_option("--init", sa.init)->capture_default_str();
  s_net->add_option("--seed", sa.seed)->capture_default_str();
  s_net->add_option("--snapshot-every", sa.snapshot_every)->capture_default_str();

  auto* s_hr = c_sim->add_subcommand("hr", "Hindmarsh-Rose network");
  add_common(s_hr);
  s_hr->add_option("--N", sa.n)->capture_default_str();
  s_hr->add_option("--k", sa.hr_k)->capture_default_str();
  s_hr->add_option("--tau", sa.hr_tau)->capture_default_str();
  s_hr->add_option("--span", sa.hr_span, "lo:hi of the initial values")->capture_default_str();
  s_hr->add_option("--seed", sa.seed)->capture_default_str();
  s_hr->add_option("--t-end", sa.t_end)->capture_default_str();
  s_hr->add_option("--step", sa.h)->capture_default_str();
  s_hr->add_option("--current-mean", sa.current_mean)->capture_default_str();
  s_hr->add_option("--current-var", sa.current_var)->capture_default_str();
  s_hr->add_option("--sample-every", sa.sample_every)->capture_default_str();

  auto* s_sweep = c_sim->add_subcommand("sweep", "quasi-static hysteresis sweep of the reduced model");
  add_sim_common(s_sweep);
  s_sweep->add_option("--sweep", sa.sweep)->check(CLI::IsMember({"k", "tau"}))->capture_default_str();
  s_sweep->add_option("--range", sa.range, "lo:hi")->required();
  s_sweep->add_option("--steps", sa.steps)->capture_default_str();
  s_sweep->add_option("--direction", sa.direction)->check(CLI::IsMember({"up", "down", "both"}))->capture_default_str();
  s_sweep->add_option("--transient", sa.transient)->capture_default_str();

  std::string pair = "plus:0,minus:0";
  double dh_k_max = 4.0;
  auto* c_dh = app.add_subcommand("double-hopf", "double-Hopf point, coefficients and unfolding");
  add_common(c_dh);
  c_dh->add_option("--pair", pair)->capture_default_str();
  c_dh->add_option("--k-max", dh_k_max)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  Context ctx;
  ctx.jobs = jobs;
  ctx.argv.assign(argv + 1, argv + argc);
  CLI::App* leaf = app.get_subcommands().front();
  std::string name = leaf->get_name();
  if (leaf == c_sim) {
    leaf = c_sim->get_subcommands().front();
    name = "simulate_" + leaf->get_name();
  }
  ctx.command = underscore(name);
  for (const CLI::Option* o : leaf->get_options()) {
    if (o->get_name() == "--help" || o->get_name() == "--out" || o->get_name() == "--jobs") continue;
    const auto r = o->results();
    std::string key = o->get_name();
    key = underscore(key.substr(key.find_first_not_of('-')));
    ctx.params[key] = r.empty() ? json(o->get_default_str()) : json(r.back());
  }
  if (leaf == s_net || leaf == s_hr) ctx.seed = sa.seed;

  if (out_dir.empty()) {
    const char* env = std::getenv("DKB_OUT_DIR");
    out_dir = env && *env ? env : ".";
  }
  ctx.out_dir = out_dir;

  const auto t0 = std::chrono::steady_clock::now();
  int rc = kOk;
  try {
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw InvalidParameter("cannot create output directory " + ctx.out_dir.string());
    const SystemParams p(omega0, delta, 1.0, 1.0);
    if (leaf == c_hopf) run_hopf_curves(ctx, p, hc);
    else if (leaf == c_branch) run_branch(ctx, p, ba);
    else if (leaf == s_red) run_sim_reduced(ctx, p, sa);
    else if (leaf == s_net) run_sim_network(ctx, p, sa);
    else if (leaf == s_hr) run_sim_hr(ctx, sa);
    else if (leaf == s_sweep) run_sim_sweep(ctx, p, sa);
    else if (leaf == c_dh) run_double_hopf(ctx, p, pair, dh_k_max);
  } catch (const InvalidParameter& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    rc = kUsage;
  } catch (const PartialResult& e) {
    std::fprintf(stderr, "numerical failure: %s (partial output kept)\n", e.what());
    rc = kNumerical;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "divergence at t = %s: %s\n", fmt(e.time()).c_str(), e.what());
    rc = kNumerical;
  } catch (const dkb::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    rc = kNumerical;
  } catch (const InvariantViolation& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    rc = kInvariant;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    rc = kInvariant;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (rc != kUsage) {
    try {
      write_manifest(ctx, wall);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      if (rc == kOk) rc = kInvariant;
    }
  }
  return rc;
}
