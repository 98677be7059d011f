#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankone/error.hpp"
#include "rankone/quadrature.hpp"

namespace rankone {

using cplx = std::complex<double>;

enum class MeasureKind { Atomic, QuadratureDensity, CantorApprox, Mixture };

/// Relative gap (in units of the hull width) below which two atoms are merged.
inline constexpr double kMergeRelTol = 1e-13;
/// Largest Cantor depth that will be materialized (2^26 atoms).
inline constexpr int kMaxCantorDepth = 26;

struct DensitySpec {
  double lo = 0.0;
  double hi = 1.0;
  std::function<double(double)> density;
  std::string label;
  int panels = 64;
  int nodes_per_panel = 64;
};

struct CantorSpec {
  double lo = 0.0;
  double hi = 1.0;
  double ratio = 1.0 / 3.0;
  double p = 0.5;
  int depth = 16;
};

class Measure;

struct MixtureTerm {
  double coefficient;
  std::shared_ptr<const Measure> measure;
};

/// A compactly supported finite Borel measure, always carried as a sorted
/// list of weighted atoms. Continuous and self-similar measures keep their
/// generating description so they can be re-materialized at another depth.
class Measure {
 public:
  static Measure atomic(std::vector<double> points, std::vector<double> weights) {
    RANKONE_THROW_UNLESS(!points.empty(), ErrorCode::InvalidArgument,
                         "atomic measure needs at least one point");
    RANKONE_THROW_UNLESS(points.size() == weights.size(), ErrorCode::InvalidArgument,
                         "atomic measure: points and weights differ in length");
    for (std::size_t i = 0; i < points.size(); ++i) {
      RANKONE_THROW_UNLESS(std::isfinite(points[i]), ErrorCode::InvalidArgument,
                           "atomic measure: point " + std::to_string(i) + " is not finite");
      RANKONE_THROW_UNLESS(std::isfinite(weights[i]) && weights[i] > 0.0,
                           ErrorCode::InvalidArgument,
                           "atomic measure: weight " + std::to_string(i) + " must be > 0");
    }
    Measure m;
    m.kind_ = MeasureKind::Atomic;
    m.set_atoms(std::move(points), std::move(weights));
    return m;
  }

  static Measure density(DensitySpec spec) {
    RANKONE_THROW_UNLESS(spec.hi > spec.lo && std::isfinite(spec.lo) && std::isfinite(spec.hi),
                         ErrorCode::InvalidArgument, "density measure: need lo < hi");
    RANKONE_THROW_UNLESS(spec.panels >= 1 && spec.nodes_per_panel >= 1,
                         ErrorCode::InvalidArgument,
                         "density measure: panels and nodes must be >= 1");
    RANKONE_THROW_UNLESS(static_cast<bool>(spec.density), ErrorCode::InvalidArgument,
                         "density measure: no density function");
    const QuadratureRule rule =
        composite_gauss_legendre(spec.lo, spec.hi, spec.panels, spec.nodes_per_panel);
    std::vector<double> pts;
    std::vector<double> wts;
    pts.reserve(rule.nodes.size());
    wts.reserve(rule.nodes.size());
    double max_gap = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double rho = spec.density(rule.nodes[i]);
      RANKONE_THROW_UNLESS(std::isfinite(rho) && rho >= 0.0, ErrorCode::InvalidArgument,
                           "density measure: density must be finite and >= 0 on [lo, hi]");
      if (i > 0) max_gap = std::max(max_gap, rule.nodes[i] - rule.nodes[i - 1]);
      if (rho > 0.0) {
        pts.push_back(rule.nodes[i]);
        wts.push_back(rule.weights[i] * rho);
      }
    }
    max_gap = std::max({max_gap, rule.nodes.front() - spec.lo, spec.hi - rule.nodes.back()});
    RANKONE_THROW_UNLESS(!pts.empty(), ErrorCode::InvalidArgument,
                         "density measure: density vanishes at every node");
    Measure m;
    m.kind_ = MeasureKind::QuadratureDensity;
    m.density_ = std::make_shared<const DensitySpec>(std::move(spec));
    m.quadrature_scale_ = max_gap;
    m.resolution_ = max_gap;
    m.set_atoms(std::move(pts), std::move(wts));
    return m;
  }

  /// Normalized Lebesgue measure on [lo, hi].
  static Measure uniform(double lo, double hi, int panels = 64, int nodes_per_panel = 64) {
    const double inv = 1.0 / (hi - lo);
    return density({lo, hi, [inv](double) { return inv; }, "uniform", panels, nodes_per_panel});
  }

  static Measure cantor(CantorSpec spec) {
    RANKONE_THROW_UNLESS(spec.hi > spec.lo && std::isfinite(spec.lo) && std::isfinite(spec.hi),
                         ErrorCode::InvalidArgument, "cantor measure: need lo < hi");
    RANKONE_THROW_UNLESS(spec.ratio > 0.0 && spec.ratio < 0.5, ErrorCode::InvalidArgument,
                         "cantor measure: ratio must lie in (0, 1/2)");
    RANKONE_THROW_UNLESS(spec.p > 0.0 && spec.p < 1.0, ErrorCode::InvalidArgument,
                         "cantor measure: p must lie in (0, 1)");
    RANKONE_THROW_UNLESS(spec.depth >= 0 && spec.depth <= kMaxCantorDepth,
                         ErrorCode::InvalidArgument, "cantor measure: depth out of range");
    const std::size_t count = std::size_t{1} << spec.depth;
    std::vector<double> left(1, spec.lo);
    std::vector<double> mass(1, 1.0);
    double len = spec.hi - spec.lo;
    for (int level = 0; level < spec.depth; ++level) {
      std::vector<double> next_left;
      std::vector<double> next_mass;
      next_left.reserve(left.size() * 2);
      next_mass.reserve(left.size() * 2);
      const double child = len * spec.ratio;
      for (std::size_t i = 0; i < left.size(); ++i) {
        next_left.push_back(left[i]);
        next_mass.push_back(mass[i] * spec.p);
        next_left.push_back(left[i] + len - child);
        next_mass.push_back(mass[i] * (1.0 - spec.p));
      }
      left = std::move(next_left);
      mass = std::move(next_mass);
      len = child;
    }
    std::vector<double> pts(count);
    for (std::size_t i = 0; i < count; ++i) pts[i] = left[i] + 0.5 * len;
    Measure m;
    m.kind_ = MeasureKind::CantorApprox;
    m.cantor_ = std::make_shared<const CantorSpec>(spec);
    m.resolution_ = len;
    m.set_atoms(std::move(pts), std::move(mass));
    return m;
  }

  static Measure mixture(std::vector<std::pair<double, Measure>> terms) {
    RANKONE_THROW_UNLESS(!terms.empty(), ErrorCode::InvalidArgument,
                         "mixture measure needs at least one component");
    Measure m;
    m.kind_ = MeasureKind::Mixture;
    std::vector<double> pts;
    std::vector<double> wts;
    for (auto& [coef, comp] : terms) {
      RANKONE_THROW_UNLESS(std::isfinite(coef) && coef > 0.0, ErrorCode::InvalidArgument,
                           "mixture measure: coefficients must be > 0");
      for (std::size_t i = 0; i < comp.size(); ++i) {
        pts.push_back(comp.points()[i]);
        wts.push_back(coef * comp.weights()[i]);
      }
      m.quadrature_scale_ = std::max(m.quadrature_scale_, comp.quadrature_scale_);
      m.resolution_ = std::max(m.resolution_, comp.resolution_);
      m.components_.push_back({coef, std::make_shared<const Measure>(std::move(comp))});
    }
    m.set_atoms(std::move(pts), std::move(wts));
    return m;
  }

  /// Atomic measure on the atoms of `base` with new weights; atoms whose new
  /// weight is zero are dropped. Resolution metadata of `base` is kept so
  /// transforms of the result know how finely the base was materialized.
  static Measure reweighted(const Measure& base, std::span<const double> new_weights) {
    RANKONE_THROW_UNLESS(new_weights.size() == base.size(), ErrorCode::InvalidArgument,
                         "reweighted: weight count does not match atom count");
    std::vector<double> pts;
    std::vector<double> wts;
    for (std::size_t i = 0; i < base.size(); ++i) {
      RANKONE_THROW_UNLESS(std::isfinite(new_weights[i]) && new_weights[i] >= 0.0,
                           ErrorCode::InvalidArgument, "reweighted: weights must be >= 0");
      if (new_weights[i] > 0.0) {
        pts.push_back(base.points()[i]);
        wts.push_back(new_weights[i]);
      }
    }
    RANKONE_THROW_UNLESS(!pts.empty(), ErrorCode::AllWeightsZero,
                         "every reweighted atom has zero weight");
    Measure m;
    m.kind_ = MeasureKind::Atomic;
    m.quadrature_scale_ = base.quadrature_scale_;
    m.resolution_ = base.resolution_;
    m.set_atoms(std::move(pts), std::move(wts));
    return m;
  }

  MeasureKind kind() const { return kind_; }
  std::size_t size() const { return points_->size(); }
  std::span<const double> points() const { return *points_; }
  std::span<const double> weights() const { return *weights_; }

  /// Compensated (Neumaier) sum of the weights.
  double total_mass() const {
    double sum = 0.0, carry = 0.0;
    for (double w : *weights_) {
      const double t = sum + w;
      carry += std::abs(sum) >= std::abs(w) ? (sum - t) + w : (w - t) + sum;
      sum = t;
    }
    return sum + carry;
  }
  std::pair<double, double> hull() const { return {points_->front(), points_->back()}; }
  double width() const { return points_->back() - points_->front(); }
  double merge_tolerance() const { return kMergeRelTol * width(); }

  /// Largest node gap of any quadrature-discretized component; 0 when the
  /// measure has no continuous part. Transforms sampled at Im z below a few
  /// multiples of this scale see the nodes rather than the density.
  double quadrature_scale() const { return quadrature_scale_; }
  /// Finest length scale represented by the materialization (node gap or
  /// Cantor cell length); 0 for purely atomic input.
  double resolution() const { return resolution_; }

  bool refinable() const {
    switch (kind_) {
      case MeasureKind::Atomic: return false;
      case MeasureKind::QuadratureDensity:
      case MeasureKind::CantorApprox: return true;
      case MeasureKind::Mixture:
        return std::any_of(components_.begin(), components_.end(),
                           [](const MixtureTerm& t) { return t.measure->refinable(); });
    }
    return false;
  }

  /// Materialization depth: Cantor depth, or log2 of the panel count for a
  /// density, or the finest component depth for a mixture. -1 if not refinable.
  int depth() const {
    switch (kind_) {
      case MeasureKind::Atomic: return -1;
      case MeasureKind::CantorApprox: return cantor_->depth;
      case MeasureKind::QuadratureDensity: {
        int d = 0;
        while ((1 << (d + 1)) <= density_->panels) ++d;
        return d;
      }
      case MeasureKind::Mixture: {
        int d = -1;
        for (const auto& t : components_) d = std::max(d, t.measure->depth());
        return d;
      }
    }
    return -1;
  }

  /// Same measure materialized at another depth. Density components get
  /// 2^depth panels; atomic measures are returned unchanged.
  Measure at_depth(int new_depth) const {
    switch (kind_) {
      case MeasureKind::Atomic: return *this;
      case MeasureKind::CantorApprox: {
        CantorSpec s = *cantor_;
        s.depth = new_depth;
        return cantor(s);
      }
      case MeasureKind::QuadratureDensity: {
        RANKONE_THROW_UNLESS(new_depth >= 0 && new_depth <= 24, ErrorCode::InvalidArgument,
                             "density refinement depth out of range");
        DensitySpec s = *density_;
        s.panels = 1 << new_depth;
        return density(std::move(s));
      }
      case MeasureKind::Mixture: {
        std::vector<std::pair<double, Measure>> terms;
        for (const auto& t : components_) terms.emplace_back(t.coefficient, t.measure->at_depth(new_depth));
        return mixture(std::move(terms));
      }
    }
    return *this;
  }

  /// Index of an atom within the merge tolerance of x, if any.
  std::optional<std::size_t> atom_near(double x) const {
    const auto& p = *points_;
    auto it = std::lower_bound(p.begin(), p.end(), x);
    const double tol = merge_tolerance();
    std::optional<std::size_t> best;
    double best_dist = tol;
    auto consider = [&](std::vector<double>::const_iterator c) {
      if (c == p.end()) return;
      const double d = std::abs(*c - x);
      if (d <= best_dist) {
        best_dist = d;
        best = static_cast<std::size_t>(c - p.begin());
      }
    };
    consider(it);
    if (it != p.begin()) consider(std::prev(it));
    return best;
  }

  const CantorSpec* cantor_spec() const { return cantor_.get(); }
  const DensitySpec* density_spec() const { return density_.get(); }
  const std::vector<MixtureTerm>& components() const { return components_; }

 private:
  Measure() = default;

  void set_atoms(std::vector<double> pts, std::vector<double> wts) {
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
    const double tol = kMergeRelTol * (pts[order.back()] - pts[order.front()]);
    auto out_p = std::make_shared<std::vector<double>>();
    auto out_w = std::make_shared<std::vector<double>>();
    out_p->reserve(pts.size());
    out_w->reserve(pts.size());
    for (std::size_t idx : order) {
      if (!out_p->empty() && pts[idx] - out_p->back() <= tol) {
        // Coalesce into the previous atom at the weighted mean position.
        double& wp = out_w->back();
        double& pp = out_p->back();
        const double w = wp + wts[idx];
        pp = (pp * wp + pts[idx] * wts[idx]) / w;
        wp = w;
      } else {
        out_p->push_back(pts[idx]);
        out_w->push_back(wts[idx]);
      }
    }
    points_ = std::move(out_p);
    weights_ = std::move(out_w);
  }

  MeasureKind kind_ = MeasureKind::Atomic;
  std::shared_ptr<const std::vector<double>> points_;
  std::shared_ptr<const std::vector<double>> weights_;
  std::shared_ptr<const DensitySpec> density_;
  std::shared_ptr<const CantorSpec> cantor_;
  std::vector<MixtureTerm> components_;
  double quadrature_scale_ = 0.0;
  double resolution_ = 0.0;
};

inline double total_mass(const Measure& m) { return m.total_mass(); }
inline std::pair<double, double> support_hull(const Measure& m) { return m.hull(); }

inline Measure cantor_refine(const Measure& m, int new_depth) {
  RANKONE_THROW_UNLESS(m.kind() == MeasureKind::CantorApprox, ErrorCode::InvalidArgument,
                       "cantor_refine: measure is not a Cantor approximation");
  return m.at_depth(new_depth);
}

/// Borel transform F(z) = sum_i w_i / (mu_i - z). The lower half-plane is
/// served through F(conj z) = conj F(z).
inline cplx borel_transform(const Measure& nu, cplx z) {
  RANKONE_THROW_UNLESS(z.imag() != 0.0, ErrorCode::InvalidArgument,
                       "borel_transform: Im z must be nonzero");
  if (z.imag() < 0.0) return std::conj(borel_transform(nu, std::conj(z)));
  const double x = z.real();
  const double y = z.imag();
  const auto pts = nu.points();
  const auto wts = nu.weights();
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = pts[i] - x;
    const double den = d * d + y * y;
    re += wts[i] * d / den;
    im += wts[i] * y / den;
  }
  return {re, im};
}

/// sum_i w_i / (mu_i - lambda) for real lambda off the atoms.
inline double real_axis_transform(const Measure& nu, double lambda) {
  const auto pts = nu.points();
  const auto wts = nu.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) s += wts[i] / (pts[i] - lambda);
  return s;
}

/// sum_i w_i / (mu_i - lambda)^2; +inf if lambda is an atom.
inline double inverse_square_sum(const Measure& nu, double lambda) {
  const auto pts = nu.points();
  const auto wts = nu.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = pts[i] - lambda;
    s += wts[i] / (d * d);
  }
  return s;
}

}  // namespace rankone
