#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rankone/error.hpp"
#include "rankone/measure.hpp"

namespace rankone {

/// Rule producing the coupling function v on the atoms of the base measure.
/// Constant and functional rules survive re-materialization; sample lists
/// are tied to one materialization.
class Coupling {
 public:
  using Function = std::function<cplx(double)>;

  static Coupling constant(cplx value) { return Coupling(value); }
  static Coupling samples(std::vector<cplx> values) { return Coupling(std::move(values)); }
  static Coupling function(Function f) { return Coupling(std::move(f)); }

  bool survives_refinement() const { return !std::holds_alternative<std::vector<cplx>>(rule_); }

  std::vector<cplx> evaluate(const Measure& m) const {
    const auto pts = m.points();
    std::vector<cplx> out(pts.size());
    if (const auto* c = std::get_if<cplx>(&rule_)) {
      std::fill(out.begin(), out.end(), *c);
    } else if (const auto* s = std::get_if<std::vector<cplx>>(&rule_)) {
      RANKONE_THROW_UNLESS(s->size() == pts.size(), ErrorCode::InvalidArgument,
                           "coupling samples: got " + std::to_string(s->size()) +
                               " values for " + std::to_string(pts.size()) + " atoms");
      out = *s;
    } else {
      const auto& f = std::get<Function>(rule_);
      for (std::size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      RANKONE_THROW_UNLESS(std::isfinite(out[i].real()) && std::isfinite(out[i].imag()),
                           ErrorCode::InvalidArgument,
                           "coupling value at atom " + std::to_string(i) + " is not finite");
    }
    return out;
  }

 private:
  explicit Coupling(cplx c) : rule_(c) {}
  explicit Coupling(std::vector<cplx> s) : rule_(std::move(s)) {}
  explicit Coupling(Function f) : rule_(std::move(f)) {}

  std::variant<cplx, std::vector<cplx>, Function> rule_;
};

/// The data (m, v, a1) of the block operator
///   B = [[A0, V], [V*, a1]] on L^2(m) (+) C,
/// with A0 multiplication by the independent variable and V 1 = v.
class SpectralModel {
 public:
  SpectralModel(Measure m, Coupling rule, double a1)
      : m_(std::move(m)), rule_(std::move(rule)), a1_(a1) {
    RANKONE_THROW_UNLESS(std::isfinite(a1_), ErrorCode::InvalidArgument, "a1 must be finite");
    v_ = rule_.evaluate(m_);
    std::vector<double> nu_w(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) nu_w[i] = m_.weights()[i] * std::norm(v_[i]);
    nu_ = std::make_shared<const Measure>(Measure::reweighted(m_, nu_w));
  }

  const Measure& base() const { return m_; }
  const Measure& nu() const { return *nu_; }
  std::span<const cplx> coupling() const { return v_; }
  const Coupling& coupling_rule() const { return rule_; }
  double a1() const { return a1_; }

  /// ||v||^2 = sum_i w_i |v_i|^2, i.e. the total mass of nu.
  double coupling_norm_sq() const { return nu_->total_mass(); }

  bool refinable() const { return m_.refinable(); }
  int depth() const { return m_.depth(); }

  SpectralModel at_depth(int new_depth) const {
    if (!refinable()) return *this;
    RANKONE_THROW_UNLESS(rule_.survives_refinement(), ErrorCode::InvalidArgument,
                         "sampled couplings cannot be re-materialized at another depth");
    return SpectralModel(m_.at_depth(new_depth), rule_, a1_);
  }

  SpectralModel with_a1(double a1) const { return SpectralModel(m_, rule_, a1); }

 private:
  Measure m_;
  Coupling rule_;
  double a1_;
  std::vector<cplx> v_;
  std::shared_ptr<const Measure> nu_;
};

inline const Measure& nu_measure(const SpectralModel& model) { return model.nu(); }

struct Matrix2c {
  cplx m00, m01, m10, m11;
  cplx trace() const { return m00 + m11; }
};

namespace detail {
inline cplx secular_denominator(const SpectralModel& model, cplx z, cplx F) {
  const cplx den = (model.a1() - z) - F;
  RANKONE_THROW_UNLESS(std::abs(den) >= 1e-300, ErrorCode::DenominatorVanishes,
                       "a1 - z - F(z) vanished");
  return den;
}
}  // namespace detail

/// Herglotz function of the perturbed operator,
///   phi(z) = [1 + (a1 - z) F(z)] / [(a1 - z) - F(z)],  F = Borel transform of nu.
inline cplx phi(const SpectralModel& model, cplx z) {
  RANKONE_THROW_UNLESS(z.imag() != 0.0, ErrorCode::InvalidArgument, "phi: Im z must be nonzero");
  const cplx F = borel_transform(model.nu(), z);
  const cplx den = detail::secular_denominator(model, z, F);
  return (1.0 + (model.a1() - z) * F) / den;
}

/// Closed-form entries of diag(V,1)* (B - z)^{-1} diag(V,1).
inline Matrix2c m_matrix(const SpectralModel& model, cplx z) {
  RANKONE_THROW_UNLESS(z.imag() != 0.0, ErrorCode::InvalidArgument,
                       "m_matrix: Im z must be nonzero");
  const cplx F = borel_transform(model.nu(), z);
  const cplx den = detail::secular_denominator(model, z, F);
  const cplx a = model.a1() - z;
  Matrix2c M;
  M.m00 = a * F / den;
  M.m11 = 1.0 / den;
  M.m01 = -M.m00 / a;
  M.m10 = M.m01;
  return M;
}

}  // namespace rankone
