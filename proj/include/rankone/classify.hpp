#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankone/error.hpp"
#include "rankone/measure.hpp"
#include "rankone/spectral_model.hpp"

namespace rankone {

// ---------------------------------------------------------------------------
// epsilon schedules

/// Multiple of the quadrature node gap below which transforms of a
/// discretized density are not sampled.
inline constexpr double kQuadratureFloorFactor = 8.0;
inline constexpr int kDefaultScheduleFirst = 10;
inline constexpr int kDefaultScheduleLast = 40;

/// eps_k = scale * 2^-k for k = first..last (strictly decreasing).
inline std::vector<double> geometric_schedule(double scale, int first, int last) {
  RANKONE_THROW_UNLESS(scale > 0.0 && first <= last, ErrorCode::InvalidArgument,
                       "geometric_schedule: need scale > 0 and first <= last");
  std::vector<double> eps;
  eps.reserve(static_cast<std::size_t>(last - first + 1));
  for (int k = first; k <= last; ++k) eps.push_back(std::ldexp(scale, -k));
  return eps;
}

namespace detail {
inline double schedule_scale(const Measure& nu) {
  const double w = nu.width();
  return w > 0.0 ? w : 1.0;
}

// Drops eps below `floor`; if fewer than `fallback` points survive, the
// schedule becomes floor * 2^j, j = fallback-1 .. 0.
inline std::vector<double> floored(std::vector<double> eps, double floor, int fallback) {
  if (floor <= 0.0) return eps;
  std::erase_if(eps, [floor](double e) { return e < floor; });
  if (eps.size() < static_cast<std::size_t>(fallback)) {
    eps.clear();
    for (int j = fallback - 1; j >= 0; --j) eps.push_back(std::ldexp(floor, j));
  }
  return eps;
}
}  // namespace detail

/// Schedule for boundary values: hull-width * 2^-k, k = first..last, cut at
/// a multiple of the quadrature node gap when nu discretizes a density.
inline std::vector<double> default_schedule(const Measure& nu, int first = kDefaultScheduleFirst,
                                            int last = kDefaultScheduleLast) {
  return detail::floored(geometric_schedule(detail::schedule_scale(nu), first, last),
                         kQuadratureFloorFactor * nu.quadrature_scale(), 8);
}

/// Schedule for scaling probes: cut at the finest materialized length of any
/// refinable component (quadrature node gap or Cantor cell).
inline std::vector<double> probe_schedule(const Measure& nu, int first = kDefaultScheduleFirst,
                                          int last = kDefaultScheduleLast) {
  return detail::floored(geometric_schedule(detail::schedule_scale(nu), first, last),
                         kQuadratureFloorFactor * nu.resolution(), 5);
}

// ---------------------------------------------------------------------------
// boundary values

struct BoundaryValue {
  double lambda = 0.0;
  cplx estimate;
  std::vector<double> eps;
  std::vector<cplx> values;
  std::vector<cplx> extrapolants;  // quadratic extrapolation through points k-2, k-1, k
  std::vector<double> residuals;   // |E_k - E_{k-1}|
  bool converged = false;
  bool atom_at_lambda = false;
  std::optional<double> divergence_exponent;
};

namespace detail {
// Value at eps = 0 of the quadratic through three (eps, value) samples.
inline cplx extrapolate_to_zero(double e0, double e1, double e2, cplx f0, cplx f1, cplx f2) {
  const double l0 = (e1 * e2) / ((e0 - e1) * (e0 - e2));
  const double l1 = (e0 * e2) / ((e1 - e0) * (e1 - e2));
  const double l2 = (e0 * e1) / ((e2 - e0) * (e2 - e1));
  return l0 * f0 + l1 * f1 + l2 * f2;
}

// Least-squares slope of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  LineFit fit;
  if (n < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  if (n > 2 && sxx > 0.0) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      sse += r * r;
    }
    fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}
}  // namespace detail

/// F(lambda + i0) by quadratic Richardson extrapolation of F(lambda + i eps_k).
/// When the sequence does not settle, the growth |F| ~ eps^-exponent is fitted
/// over the second half of the schedule.
inline BoundaryValue boundary_value(const Measure& nu, double lambda,
                                    std::span<const double> schedule,
                                    double convergence_tol = 1e-8) {
  RANKONE_THROW_UNLESS(std::isfinite(lambda), ErrorCode::InvalidArgument,
                       "boundary_value: lambda must be finite");
  RANKONE_THROW_UNLESS(schedule.size() >= 3, ErrorCode::InvalidArgument,
                       "boundary_value: schedule needs at least 3 points");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    RANKONE_THROW_UNLESS(schedule[k] > 0.0 && (k == 0 || schedule[k] < schedule[k - 1]),
                         ErrorCode::InvalidArgument,
                         "boundary_value: schedule must be positive and strictly decreasing");
  }
  BoundaryValue bv;
  bv.lambda = lambda;
  bv.eps.assign(schedule.begin(), schedule.end());
  bv.atom_at_lambda = nu.atom_near(lambda).has_value();
  for (double e : schedule) bv.values.push_back(borel_transform(nu, {lambda, e}));

  for (std::size_t k = 2; k < schedule.size(); ++k) {
    bv.extrapolants.push_back(detail::extrapolate_to_zero(schedule[k - 2], schedule[k - 1],
                                                          schedule[k], bv.values[k - 2],
                                                          bv.values[k - 1], bv.values[k]));
  }
  for (std::size_t k = 1; k < bv.extrapolants.size(); ++k)
    bv.residuals.push_back(std::abs(bv.extrapolants[k] - bv.extrapolants[k - 1]));

  bv.estimate = bv.extrapolants.back();
  // Away from the support F is analytic at lambda; take F(lambda) itself
  // instead of carrying the O(eps^3) extrapolation error of a floored schedule.
  const auto [lo, hi] = nu.hull();
  const double margin = kQuadratureFloorFactor * nu.quadrature_scale();
  const bool outside = lambda < lo - margin || lambda > hi + margin;
  if (outside && !bv.atom_at_lambda) bv.estimate = real_axis_transform(nu, lambda);
  const bool finite = std::isfinite(bv.estimate.real()) && std::isfinite(bv.estimate.imag());
  if (!bv.atom_at_lambda && finite && !bv.residuals.empty()) {
    const std::size_t tail = std::min<std::size_t>(2, bv.residuals.size());
    const double bound = convergence_tol * (1.0 + std::abs(bv.estimate));
    bv.converged = outside || std::all_of(bv.residuals.end() - static_cast<std::ptrdiff_t>(tail),
                                          bv.residuals.end(), [bound](double r) { return r <= bound; });
  }
  if (!bv.converged) {
    const std::size_t start = schedule.size() / 2;
    std::vector<double> lx, ly;
    for (std::size_t k = start; k < schedule.size(); ++k) {
      const double mag = std::abs(bv.values[k]);
      if (mag > 0.0 && std::isfinite(mag)) {
        lx.push_back(std::log(schedule[k]));
        ly.push_back(std::log(mag));
      }
    }
    const double exponent = -detail::fit_line(lx, ly).slope;
    bv.divergence_exponent = std::clamp(exponent, 1e-12, 1.0);
  }
  return bv;
}

inline BoundaryValue boundary_value(const Measure& nu, double lambda) {
  const auto sched = default_schedule(nu);
  return boundary_value(nu, lambda, sched);
}

// ---------------------------------------------------------------------------
// g2 = int d nu / |mu - lambda|^2

/// Growth factor between consecutive refinement depths that marks g2 divergent.
inline constexpr double kG2GrowthRatio = 1.5;

struct G2Result {
  bool divergent = false;
  double value = 0.0;             // last finite value (meaningless if divergent at an atom)
  std::vector<int> depths;        // refinement depths, empty for a single evaluation
  std::vector<double> sequence;   // g2 at each depth
  bool atom_hit = false;
};

inline G2Result g2(const Measure& nu, double lambda) {
  G2Result r;
  if (nu.atom_near(lambda)) {
    r.divergent = true;
    r.atom_hit = true;
    r.value = std::numeric_limits<double>::infinity();
    return r;
  }
  r.value = inverse_square_sum(nu, lambda);
  return r;
}

/// A refinable model materialized at a ladder of depths, built once and
/// shared by every per-lambda query.
class RefinementLadder {
 public:
  RefinementLadder(const SpectralModel& model, std::vector<int> depths) : depths_(std::move(depths)) {
    RANKONE_THROW_UNLESS(!depths_.empty(), ErrorCode::InvalidArgument,
                         "refinement ladder needs at least one depth");
    RANKONE_THROW_UNLESS(std::is_sorted(depths_.begin(), depths_.end()) &&
                             std::adjacent_find(depths_.begin(), depths_.end()) == depths_.end(),
                         ErrorCode::InvalidArgument, "refinement depths must be ascending");
    models_.reserve(depths_.size());
    for (int d : depths_) models_.push_back(model.at_depth(d));
  }

  const std::vector<int>& depths() const { return depths_; }
  const std::vector<SpectralModel>& models() const { return models_; }
  const SpectralModel& finest() const { return models_.back(); }

 private:
  std::vector<int> depths_;
  std::vector<SpectralModel> models_;
};

/// Depth ladder ending at the model's own depth: {d-2, d-1, d}, clipped at 0.
inline std::vector<int> default_depths(const SpectralModel& model) {
  const int d = model.depth();
  if (d < 0) return {};
  std::vector<int> out;
  for (int k = std::max(0, d - 2); k <= d; ++k) out.push_back(k);
  return out;
}

/// g2 along a refinement ladder. Divergent when an atom sits at lambda at
/// some depth, or when each of the last two refinements grows g2 by more
/// than kG2GrowthRatio.
inline G2Result g2_refined(const RefinementLadder& ladder, double lambda) {
  G2Result r;
  r.depths = ladder.depths();
  for (const auto& m : ladder.models()) {
    const G2Result one = g2(m.nu(), lambda);
    r.sequence.push_back(one.value);
    if (one.atom_hit) r.atom_hit = true;
  }
  r.value = r.sequence.back();
  if (r.atom_hit) {
    r.divergent = true;
    return r;
  }
  const std::size_t n = r.sequence.size();
  if (n >= 3) {
    r.divergent = r.sequence[n - 1] > kG2GrowthRatio * r.sequence[n - 2] &&
                  r.sequence[n - 2] > kG2GrowthRatio * r.sequence[n - 3];
  }
  return r;
}

// ---------------------------------------------------------------------------
// secular function h(lambda) = a1 - lambda - sum_i W_i / (mu_i - lambda)

inline double secular_function(const SpectralModel& model, double lambda) {
  return model.a1() - lambda - real_axis_transform(model.nu(), lambda);
}

/// True when h changes sign from + to - across [lambda - radius, lambda + radius]
/// with no atom of nu inside, i.e. a root of h lies within `radius`.
inline bool secular_root_within(const SpectralModel& model, double lambda, double radius) {
  const auto pts = model.nu().points();
  const double lo = lambda - radius;
  const double hi = lambda + radius;
  auto it = std::lower_bound(pts.begin(), pts.end(), lo);
  if (it != pts.end() && *it <= hi) return false;
  return secular_function(model, lo) >= 0.0 && secular_function(model, hi) <= 0.0;
}

// ---------------------------------------------------------------------------
// point classification

enum class PointTag { PurePoint, SingularContinuousCandidate, AbsolutelyContinuous, Regular };

inline std::string_view to_string(PointTag t) {
  switch (t) {
    case PointTag::PurePoint: return "PurePoint";
    case PointTag::SingularContinuousCandidate: return "SingularContinuousCandidate";
    case PointTag::AbsolutelyContinuous: return "AbsolutelyContinuous";
    case PointTag::Regular: return "Regular";
  }
  return "Unknown";
}

inline constexpr double kExactTol = 1e-8;
inline constexpr double kRefinableTol = 1e-4;

inline double default_tolerance(const SpectralModel& model) {
  return model.refinable() ? kRefinableTol : kExactTol;
}

struct ClassifyOptions {
  std::optional<double> tol;
  std::vector<double> schedule;              // empty: default_schedule(nu)
  const RefinementLadder* ladder = nullptr;  // g2 refinement for refinable models
};

struct PointEvidence {
  BoundaryValue boundary;
  G2Result g2;
  double residual = 0.0;       // |a1 - lambda - Re F(lambda + i0)|
  double im_F = 0.0;
  double root_distance = 0.0;  // residual / (1 + g2 at the current depth)
};

struct PointClass {
  double lambda = 0.0;
  PointTag tag = PointTag::Regular;
  double tol = 0.0;
  PointEvidence evidence;
};

/// Pointwise membership in the minimal supports:
///   PurePoint:   a1 - lambda = F(lambda + i0) (real) and g2 < inf
///   SC candidate: the same equality with g2 = inf (refinement verdict)
///   AC:          Im F(lambda + i0) > tol
/// The equality is accepted when the residual is within tol, or when the
/// Newton distance residual/(1 + g2) is within tol and a sign change of h
/// confirms the root lies inside that distance.
inline PointClass classify_point(const SpectralModel& model, double lambda,
                                 const ClassifyOptions& opts = {}) {
  const Measure& nu = model.nu();
  const double tol = opts.tol.value_or(default_tolerance(model));
  const std::vector<double> sched = opts.schedule.empty() ? default_schedule(nu) : opts.schedule;

  PointClass pc;
  pc.lambda = lambda;
  pc.tol = tol;
  auto& ev = pc.evidence;
  ev.boundary = boundary_value(nu, lambda, sched, tol);
  if (ev.boundary.atom_at_lambda) {
    throw Error(ErrorCode::AtomAtLambda,
                "lambda = " + std::to_string(lambda) + " coincides with an atom of nu");
  }
  const cplx F = ev.boundary.estimate;
  ev.residual = std::abs(model.a1() - lambda - F.real());
  ev.im_F = F.imag();
  const double g2_here = inverse_square_sum(nu, lambda);
  ev.root_distance = ev.residual / (1.0 + g2_here);
  ev.g2 = opts.ladder != nullptr ? g2_refined(*opts.ladder, lambda) : g2(nu, lambda);

  if (ev.im_F > tol) {
    pc.tag = PointTag::AbsolutelyContinuous;
    return pc;
  }
  bool equality = ev.residual <= tol;
  if (!equality && ev.root_distance <= tol) {
    const double ulp = std::nextafter(std::abs(lambda), INFINITY) - std::abs(lambda);
    equality = secular_root_within(model, lambda, std::max(2.0 * ev.root_distance, 64.0 * ulp));
  }
  if (std::abs(ev.im_F) <= tol && equality) {
    pc.tag = ev.g2.divergent ? PointTag::SingularContinuousCandidate : PointTag::PurePoint;
  } else {
    pc.tag = PointTag::Regular;
  }
  return pc;
}

// ---------------------------------------------------------------------------
// eigenvalues

namespace detail {
// One root of h on the open gap (a, b); h(a+) > 0 > h(b-) is guaranteed by
// monotonicity, `a_is_atom`/`b_is_atom` mark poles at the ends.
inline std::optional<double> gap_root(const SpectralModel& model, double a, bool a_is_atom,
                                      double b, bool b_is_atom, double clip_lo, double clip_hi) {
  double lo = a;
  double hi = b;
  bool lo_pole = a_is_atom;
  bool hi_pole = b_is_atom;
  if (clip_lo > lo) {
    lo = clip_lo;
    lo_pole = false;
  }
  if (clip_hi < hi) {
    hi = clip_hi;
    hi_pole = false;
  }
  if (!(lo < hi)) return std::nullopt;
  const double h_lo = lo_pole ? INFINITY : secular_function(model, lo);
  const double h_hi = hi_pole ? -INFINITY : secular_function(model, hi);
  if (h_lo == 0.0) return lo;
  if (h_hi == 0.0) return hi;
  if (!(h_lo > 0.0 && h_hi < 0.0)) return std::nullopt;

  // Safeguarded Newton on h' = -(1 + g2). A run of steps from one side is
  // followed by a doubled step so the root gets bracketed from both sides;
  // iteration stops once the sign bracket spans adjacent doubles.
  const auto pts = model.nu().points();
  const auto wts = model.nu().weights();
  double x = lo + 0.5 * (hi - lo);
  int same_side = 0;
  bool last_lo = false;
  for (;;) {
    double G = 0.0, g = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double r = 1.0 / (pts[i] - x);
      G += wts[i] * r;
      g += wts[i] * r * r;
    }
    const double hx = model.a1() - x - G;
    if (hx == 0.0) return x;
    const bool moved_lo = hx > 0.0;
    if (moved_lo) {
      lo = x;
      lo_pole = false;
    } else {
      hi = x;
      hi_pole = false;
    }
    same_side = moved_lo == last_lo ? same_side + 1 : 0;
    last_lo = moved_lo;
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) break;
    const double step = hx / (1.0 + g);
    const double y = x + (same_side >= 1 ? 2.0 * step : step);
    x = (y > lo && y < hi && std::isfinite(y)) ? y : mid;
  }
  if (lo_pole) {
    x = hi;
  } else if (hi_pole) {
    x = lo;
  } else {
    x = std::abs(secular_function(model, lo)) <= std::abs(secular_function(model, hi)) ? lo : hi;
  }
  // One Newton polish step, kept only if it stays in the bracket and helps.
  const double hx = secular_function(model, x);
  const double step = hx / (1.0 + inverse_square_sum(model.nu(), x));
  const double y = x + step;
  if (y > a && y < b && y >= clip_lo && y <= clip_hi) {
    if (std::abs(secular_function(model, y)) < std::abs(hx)) x = y;
  }
  return x;
}
}  // namespace detail

/// All roots of h in [lo, hi]: at most one per gap of supp nu (h is strictly
/// decreasing there), including the two unbounded rays.
inline std::vector<double> find_eigenvalues(const SpectralModel& model, double lo, double hi) {
  RANKONE_THROW_UNLESS(std::isfinite(lo) && std::isfinite(hi), ErrorCode::InvalidArgument,
                       "find_eigenvalues: interval must be finite");
  const Measure& nu = model.nu();
  RANKONE_THROW_UNLESS(nu.size() > 0, ErrorCode::EmptyModel, "nu has no atoms");
  std::vector<double> roots;
  if (!(lo <= hi)) return roots;
  const auto pts = nu.points();
  const double root_mass = std::sqrt(nu.total_mass());
  const double left = std::min(model.a1(), pts.front()) - root_mass - 1.0;
  const double right = std::max(model.a1(), pts.back()) + root_mass + 1.0;

  auto solve = [&](double a, bool a_atom, double b, bool b_atom) {
    if (b < lo || a > hi) return;
    if (auto r = detail::gap_root(model, a, a_atom, b, b_atom, lo, hi)) roots.push_back(*r);
  };
  solve(left, false, pts.front(), true);
  // Skip gaps that cannot meet [lo, hi].
  auto first = std::upper_bound(pts.begin(), pts.end(), lo);
  std::size_t start = first == pts.begin() ? 0 : static_cast<std::size_t>(first - pts.begin()) - 1;
  for (std::size_t i = start; i + 1 < pts.size(); ++i) {
    if (pts[i] > hi) break;
    solve(pts[i], true, pts[i + 1], true);
  }
  solve(pts.back(), true, right, false);
  return roots;
}

/// Interval guaranteed to contain every root of h.
inline std::pair<double, double> eigenvalue_bracket(const SpectralModel& model) {
  const auto [a, b] = model.nu().hull();
  const double root_mass = std::sqrt(model.nu().total_mass());
  return {std::min(model.a1(), a) - root_mass - 1.0, std::max(model.a1(), b) + root_mass + 1.0};
}

// ---------------------------------------------------------------------------
// Stieltjes inversion

struct StieltjesResult {
  double eps = 0.0;
  std::vector<double> grid;
  std::vector<double> density;          // (1/pi) Im phi(lambda + i eps)
  std::vector<double> atom_locations;
  std::vector<double> atom_masses;      // extrapolated lim eps Im phi(lambda_j + i eps)
  double atomic_mass = 0.0;
  double continuous_mass = 0.0;         // integral of density minus fitted atom profiles
  double total_mass() const { return atomic_mass + continuous_mass; }
};

/// eps * Im phi(lambda + i eps) extrapolated to eps -> 0 from eps and eps/2.
inline double atom_mass_estimate(const SpectralModel& model, double lambda, double eps) {
  const double m1 = eps * phi(model, {lambda, eps}).imag();
  const double m2 = 0.5 * eps * phi(model, {lambda, 0.5 * eps}).imag();
  return (4.0 * m2 - m1) / 3.0;
}

inline StieltjesResult stieltjes_invert(const SpectralModel& model, double lo, double hi,
                                        double eps, int grid_points = 2001,
                                        std::optional<std::vector<double>> atoms = std::nullopt) {
  RANKONE_THROW_UNLESS(eps > 0.0, ErrorCode::InvalidArgument, "stieltjes_invert: eps must be > 0");
  RANKONE_THROW_UNLESS(hi > lo && grid_points >= 2, ErrorCode::InvalidArgument,
                       "stieltjes_invert: need lo < hi and at least two grid points");
  StieltjesResult res;
  res.eps = eps;
  if (atoms) {
    res.atom_locations = *atoms;
  } else if (!model.refinable()) {
    res.atom_locations = find_eigenvalues(model, lo, hi);
  }
  for (double x : res.atom_locations) {
    const double m = atom_mass_estimate(model, x, eps);
    res.atom_masses.push_back(m);
    res.atomic_mass += m;
  }
  const double h = (hi - lo) / (grid_points - 1);
  res.grid.resize(grid_points);
  res.density.resize(grid_points);
  std::vector<double> remainder(grid_points);
  for (int j = 0; j < grid_points; ++j) {
    const double x = lo + j * h;
    res.grid[j] = x;
    res.density[j] = phi(model, {x, eps}).imag() / std::numbers::pi;
    double fitted = 0.0;
    for (std::size_t k = 0; k < res.atom_locations.size(); ++k) {
      const double d = x - res.atom_locations[k];
      fitted += res.atom_masses[k] * eps / (std::numbers::pi * (d * d + eps * eps));
    }
    remainder[j] = res.density[j] - fitted;
  }
  for (int j = 0; j + 1 < grid_points; ++j)
    res.continuous_mass += 0.5 * h * (remainder[j] + remainder[j + 1]);
  return res;
}

// ---------------------------------------------------------------------------
// scaling probe (heuristic)

enum class ProbeTarget { Nu, Omega };

struct ScProbeReport {
  double lambda = 0.0;
  ProbeTarget target = ProbeTarget::Nu;
  std::vector<double> eps;
  std::vector<double> im_values;
  double exponent = 0.0;  // s in Im ~ eps^(s - 1)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string band;
  static constexpr bool heuristic = true;
};

/// Local scaling exponent s from a least-squares fit of log Im G(lambda + i eps)
/// against log eps, where G is the transform of nu (F) or of omega (phi) and
/// Im G ~ eps^(s-1). s near 0 indicates an atom, near 1 a density, in between
/// a fractal (singular continuous) concentration; s near 2 a regular point.
inline ScProbeReport sc_probe(const SpectralModel& model, double lambda,
                              std::span<const double> schedule,
                              ProbeTarget target = ProbeTarget::Nu) {
  RANKONE_THROW_UNLESS(schedule.size() >= 3, ErrorCode::InvalidArgument,
                       "sc_probe: schedule needs at least 3 points");
  ScProbeReport rep;
  rep.lambda = lambda;
  rep.target = target;
  std::vector<double> lx, ly;
  for (double e : schedule) {
    const cplx z{lambda, e};
    const double im = target == ProbeTarget::Nu ? borel_transform(model.nu(), z).imag()
                                                : phi(model, z).imag();
    rep.eps.push_back(e);
    rep.im_values.push_back(im);
    if (im > 0.0 && std::isfinite(im)) {
      lx.push_back(std::log(e));
      ly.push_back(std::log(im));
    }
  }
  const auto fit = detail::fit_line(lx, ly);
  rep.exponent = 1.0 + fit.slope;
  rep.ci_low = rep.exponent - 1.96 * fit.slope_stderr;
  rep.ci_high = rep.exponent + 1.96 * fit.slope_stderr;
  if (rep.exponent < 0.2) {
    rep.band = "pure-point-like";
  } else if (rep.exponent <= 0.8) {
    rep.band = "singular-continuous-indication";
  } else if (rep.exponent < 1.5) {
    rep.band = "absolutely-continuous-like";
  } else {
    rep.band = "regular-point";
  }
  return rep;
}

inline ScProbeReport sc_probe(const SpectralModel& model, double lambda,
                              ProbeTarget target = ProbeTarget::Nu) {
  const auto sched = probe_schedule(model.nu());
  return sc_probe(model, lambda, sched, target);
}

}  // namespace rankone
