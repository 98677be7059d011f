#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rankone/classify.hpp"
#include "rankone/error.hpp"
#include "rankone/measure.hpp"
#include "rankone/oracle.hpp"
#include "rankone/spectral_model.hpp"

namespace rankone {

inline constexpr double kRiccatiTol = 1e-10;

/// The functional X_lambda f = <v, (A0 - lambda)^{-1} f>, i.e.
///   X f = sum_i w_i conj(v_i) f_i / (mu_i - lambda)
/// over the atoms of m. `coefficients` use function values f_i; `row` uses the
/// orthonormal coordinates x_i = sqrt(w_i) f_i of the arrowhead matrix.
struct RiccatiFunctional {
  double lambda = 0.0;
  std::vector<cplx> coefficients;
  std::vector<cplx> row;
  std::optional<std::size_t> singular_atom;  // atom at lambda with v != 0
  bool bounded = true;
  double norm_sq = 0.0;
  double norm = 0.0;
  bool synthetic = false;

  /// X x for x in orthonormal coordinates.
  cplx apply(std::span<const cplx> x) const {
    RANKONE_THROW_UNLESS(x.size() == row.size(), ErrorCode::InvalidArgument,
                         "functional apply: dimension mismatch");
    if (singular_atom && x[*singular_atom] != 0.0) {
      throw Error(ErrorCode::AtAtom, "test vector is not in the domain: lambda is an atom");
    }
    cplx s = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * x[i];
    return s;
  }

  /// Euclidean norm of the materialized row.
  double row_norm() const {
    double s = 0.0;
    for (const cplx& r : row) s += std::norm(r);
    return std::sqrt(s);
  }

  /// An arbitrary row functional, for controls and perturbation tests.
  static RiccatiFunctional from_row(double lambda, std::vector<cplx> row) {
    RiccatiFunctional X;
    X.lambda = lambda;
    X.row = std::move(row);
    X.norm = X.row_norm();
    X.norm_sq = X.norm * X.norm;
    X.synthetic = true;
    return X;
  }
};

inline RiccatiFunctional x_lambda(const SpectralModel& model, double lambda) {
  RANKONE_THROW_UNLESS(std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be finite");
  const Measure& m = model.base();
  const auto pts = m.points();
  const auto wts = m.weights();
  const auto v = model.coupling();
  RiccatiFunctional X;
  X.lambda = lambda;
  X.coefficients.resize(pts.size());
  X.row.resize(pts.size());
  const auto hit = m.atom_near(lambda);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (v[i] == 0.0) continue;
    if (hit && *hit == i) {
      X.singular_atom = i;
      continue;
    }
    X.coefficients[i] = std::conj(v[i]) / (pts[i] - lambda);
    X.row[i] = std::sqrt(wts[i]) * X.coefficients[i];
  }
  const G2Result g = g2(model.nu(), lambda);
  X.bounded = !g.divergent && !X.singular_atom;
  X.norm_sq = X.bounded ? g.value : std::numeric_limits<double>::infinity();
  X.norm = std::sqrt(X.norm_sq);
  return X;
}

/// X_lambda applied to f given by its values at the atoms of m.
inline cplx x_lambda_apply(const SpectralModel& model, double lambda, std::span<const cplx> f) {
  const Measure& m = model.base();
  RANKONE_THROW_UNLESS(f.size() == m.size(), ErrorCode::InvalidArgument,
                       "x_lambda_apply: vector length must equal the number of atoms");
  const auto pts = m.points();
  const auto wts = m.weights();
  const auto v = model.coupling();
  const auto hit = m.atom_near(lambda);
  cplx s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const cplx num = wts[i] * std::conj(v[i]) * f[i];
    if (num == 0.0) continue;
    if (hit && *hit == i) {
      throw Error(ErrorCode::AtAtom, "lambda = " + std::to_string(lambda) +
                                         " is an atom where v f does not vanish");
    }
    s += num / (pts[i] - lambda);
  }
  return s;
}

struct NormResult {
  bool bounded = false;
  double norm = std::numeric_limits<double>::infinity();
  G2Result g2;
};

/// sqrt(g2) when finite; otherwise unbounded with the g2 diagnostics.
inline NormResult x_lambda_norm(const SpectralModel& model, double lambda,
                                const RefinementLadder* ladder = nullptr) {
  NormResult r;
  r.g2 = ladder != nullptr ? g2_refined(*ladder, lambda) : g2(model.nu(), lambda);
  r.bounded = !r.g2.divergent;
  if (r.bounded) r.norm = std::sqrt(r.g2.value);
  return r;
}

// ---------------------------------------------------------------------------
// test vectors

struct TestVector {
  std::string label;
  std::optional<std::size_t> basis;  // standard basis vector e_j when set
  std::vector<cplx> dense;
};

inline constexpr std::size_t kFullBasisLimit = 4096;
inline constexpr std::size_t kSampledBasis = 512;
inline constexpr int kRandomTestVectors = 10;

/// Standard basis vectors (all of them up to kFullBasisLimit atoms, otherwise
/// an even stride plus the atoms closest to lambda), the coupling vector, and
/// seeded random unit vectors. Components at an atom sitting on lambda are
/// zeroed so every vector lies in the domain.
inline std::vector<TestVector> default_test_vectors(const ArrowheadMatrix& A, double lambda,
                                                    std::uint64_t seed = 0) {
  const std::size_t n = A.atoms();
  std::vector<std::size_t> idx;
  if (n <= kFullBasisLimit) {
    for (std::size_t j = 0; j < n; ++j) idx.push_back(j);
  } else {
    const std::size_t near = 32;
    const std::size_t stride = n / (kSampledBasis - near);
    for (std::size_t j = 0; j < n && idx.size() < kSampledBasis - near; j += stride) idx.push_back(j);
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(A.diag.begin(), A.diag.end(), lambda) - A.diag.begin());
    const std::size_t lo = pos > near / 2 ? pos - near / 2 : 0;
    for (std::size_t j = lo; j < std::min(n, lo + near); ++j) idx.push_back(j);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  }
  std::optional<std::size_t> skip;
  {
    const double tol = kMergeRelTol * (A.diag.back() - A.diag.front());
    auto it = std::lower_bound(A.diag.begin(), A.diag.end(), lambda - tol);
    if (it != A.diag.end() && *it <= lambda + tol) skip = static_cast<std::size_t>(it - A.diag.begin());
  }
  std::vector<TestVector> out;
  for (std::size_t j : idx) {
    if (skip && *skip == j && A.c[j] != 0.0) continue;
    out.push_back({"e" + std::to_string(j), j, {}});
  }
  TestVector tv{"v", std::nullopt, A.c};
  if (skip) tv.dense[*skip] = 0.0;
  out.push_back(std::move(tv));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < kRandomTestVectors; ++k) {
    std::vector<cplx> x(n);
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = {gauss(rng), gauss(rng)};
      if (skip && *skip == i) x[i] = 0.0;
      nrm += std::norm(x[i]);
    }
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
      for (cplx& xi : x) xi /= nrm;
    out.push_back({"random" + std::to_string(k), std::nullopt, std::move(x)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// residual and graph invariance

enum class Verdict { Solution, NotSolution, NotACandidate };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Solution: return "solution";
    case Verdict::NotSolution: return "not a solution";
    case Verdict::NotACandidate: return "not a candidate";
  }
  return "unknown";
}

struct VectorResidual {
  std::string label;
  double absolute = 0.0;  // |a1 Xx - X(A0 x) - X(c) Xx + <c, x>|
  double relative = 0.0;  // absolute / (||x|| (|a1| ||X|| + ||X|| ||A0|| + ||X||^2 ||c|| + ||c||))
  double defect = 0.0;    // distance of B(x + Xx) from the graph, relative to ||B(x + Xx)||
};

struct GraphCertificate {
  double lambda = 0.0;
  std::optional<PointTag> tag;
  double tol = kRiccatiTol;
  std::vector<VectorResidual> per_vector;
  double max_residual = 0.0;      // largest relative residual
  double max_abs_residual = 0.0;
  double invariance_defect = 0.0; // largest defect
  bool domain_invariant = true;   // Ran(A0 + VX) stays in Dom(X)
  Verdict verdict = Verdict::NotSolution;
  Verdict defect_verdict = Verdict::NotSolution;
};

namespace detail {
struct Action {
  cplx Xx, XA0x, cx;  // X x, X(A0 x), <c, x>
  double x_norm = 0.0;
  double Bu_norm = 0.0;
};

inline Action act(const ArrowheadMatrix& A, const RiccatiFunctional& X, const TestVector& tv,
                  double c_norm2) {
  Action a;
  if (tv.basis) {
    const std::size_t j = *tv.basis;
    const cplx rj = X.row[j];
    a.Xx = rj;
    a.XA0x = rj * A.diag[j];
    a.cx = std::conj(A.c[j]);
    a.x_norm = 1.0;
    // B(e_j + r_j) = (mu_j e_j + c r_j) (+) (conj(c_j) + a1 r_j)
    const cplx top_j = A.diag[j] + A.c[j] * rj;
    const double top2 = c_norm2 * std::norm(rj) - std::norm(A.c[j] * rj) + std::norm(top_j);
    a.Bu_norm = std::sqrt(std::max(0.0, top2) + std::norm(a.cx + A.a1 * rj));
  } else {
    const auto& x = tv.dense;
    a.Xx = X.apply(x);
    std::vector<cplx> A0x(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) A0x[i] = A.diag[i] * x[i];
    a.XA0x = X.apply(A0x);
    cplx cx = 0.0;
    double xn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      cx += std::conj(A.c[i]) * x[i];
      xn += std::norm(x[i]);
    }
    a.cx = cx;
    a.x_norm = std::sqrt(xn);
    std::vector<cplx> u(x.begin(), x.end());
    u.push_back(a.Xx);
    const auto Bu = A.apply(u);
    double bn = 0.0;
    for (const cplx& b : Bu) bn += std::norm(b);
    a.Bu_norm = std::sqrt(bn);
  }
  return a;
}
}  // namespace detail

/// Residual of A1 X - X A0 - X V X + V^* = 0 and the graph-invariance defect
/// of G(H0, X) for an arbitrary row functional X.
inline GraphCertificate verify_functional(const ArrowheadMatrix& A, const RiccatiFunctional& X,
                                          std::span<const TestVector> tests,
                                          double tol = kRiccatiTol) {
  RANKONE_THROW_UNLESS(X.row.size() == A.atoms(), ErrorCode::InvalidArgument,
                       "functional and matrix dimensions differ");
  GraphCertificate cert;
  cert.lambda = X.lambda;
  cert.tol = tol;
  cert.domain_invariant = !X.singular_atom.has_value();
  cplx Xc = 0.0;
  double c_norm2 = 0.0, a0_norm = 0.0;
  for (std::size_t i = 0; i < A.atoms(); ++i) {
    Xc += X.row[i] * A.c[i];
    c_norm2 += std::norm(A.c[i]);
    a0_norm = std::max(a0_norm, std::abs(A.diag[i]));
  }
  const double c_norm = std::sqrt(c_norm2);
  const double xn = X.row_norm();
  const double scale = std::abs(A.a1) * xn + xn * a0_norm + xn * xn * c_norm + c_norm;
  for (const auto& tv : tests) {
    const auto a = detail::act(A, X, tv, c_norm2);
    const cplx r = A.a1 * a.Xx - a.XA0x - Xc * a.Xx + a.cx;
    VectorResidual vr;
    vr.label = tv.label;
    vr.absolute = std::abs(r);
    const double denom = a.x_norm * scale;
    vr.relative = denom > 0.0 ? vr.absolute / denom : vr.absolute;
    // last(Bu) - X(first(Bu)) equals r; divide by the distance scale of the
    // graph hyperplane and by |Bu|.
    const double dn = std::sqrt(1.0 + xn * xn) * a.Bu_norm;
    vr.defect = dn > 0.0 ? vr.absolute / dn : vr.absolute;
    cert.max_residual = std::max(cert.max_residual, vr.relative);
    cert.max_abs_residual = std::max(cert.max_abs_residual, vr.absolute);
    cert.invariance_defect = std::max(cert.invariance_defect, vr.defect);
    cert.per_vector.push_back(std::move(vr));
  }
  cert.verdict = cert.max_residual <= tol ? Verdict::Solution : Verdict::NotSolution;
  cert.defect_verdict = cert.invariance_defect <= tol ? Verdict::Solution : Verdict::NotSolution;
  return cert;
}

/// Classifies lambda, builds X_lambda and verifies it. Points outside the
/// singular-support test get verdict NotACandidate, residuals still reported.
inline GraphCertificate riccati_residual(const SpectralModel& model, double lambda,
                                         std::span<const TestVector> tests,
                                         double tol = kRiccatiTol,
                                         const ClassifyOptions& copts = {}) {
  const auto pc = classify_point(model, lambda, copts);
  const auto A = build_arrowhead(model);
  auto cert = verify_functional(A, x_lambda(model, lambda), tests, tol);
  cert.tag = pc.tag;
  if (pc.tag != PointTag::PurePoint && pc.tag != PointTag::SingularContinuousCandidate) {
    cert.verdict = Verdict::NotACandidate;
    cert.defect_verdict = Verdict::NotACandidate;
  }
  return cert;
}

inline GraphCertificate riccati_residual(const SpectralModel& model, double lambda,
                                         double tol = kRiccatiTol,
                                         const ClassifyOptions& copts = {},
                                         std::uint64_t seed = 0) {
  const auto tests = default_test_vectors(build_arrowhead(model), lambda, seed);
  return riccati_residual(model, lambda, tests, tol, copts);
}

/// X_lambda + delta ||X_lambda|| <c/||c||, .>: a relative perturbation that
/// leaves the solution set.
inline RiccatiFunctional perturbed_functional(const ArrowheadMatrix& A,
                                              const RiccatiFunctional& X, double delta) {
  double cn = 0.0;
  for (const cplx& ci : A.c) cn += std::norm(ci);
  cn = std::sqrt(cn);
  std::vector<cplx> row = X.row;
  const double s = delta * std::max(X.row_norm(), 1.0) / cn;
  for (std::size_t i = 0; i < row.size(); ++i) row[i] += s * std::conj(A.c[i]);
  return RiccatiFunctional::from_row(X.lambda, std::move(row));
}

// ---------------------------------------------------------------------------
// complementary eigenvector

struct ComplementaryEigenvector {
  double lambda = 0.0;
  std::vector<cplx> u;           // orthonormal coordinates, H1 component 1
  double eigen_residual = 0.0;   // ||B u - lambda u|| / ||u||
  double orthogonality = 0.0;    // max_j |<u, e_j (+) X e_j>| / ||u||
  bool passed = false;
};

inline constexpr double kEigenvectorTol = 1e-10;

/// u = (-X^* 1) (+) 1, spanning the orthogonal complement of G(H0, X_lambda).
/// Throws NotPurePoint unless lambda classifies as PurePoint.
inline ComplementaryEigenvector complementary_eigenvector(const SpectralModel& model, double lambda,
                                                          const ClassifyOptions& copts = {}) {
  const auto pc = classify_point(model, lambda, copts);
  if (pc.tag != PointTag::PurePoint) {
    throw Error(ErrorCode::NotPurePoint, "lambda = " + std::to_string(lambda) + " classifies as " +
                                             std::string(to_string(pc.tag)));
  }
  const auto A = build_arrowhead(model);
  const auto X = x_lambda(model, lambda);
  ComplementaryEigenvector ce;
  ce.lambda = lambda;
  const std::size_t n = A.atoms();
  ce.u.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) ce.u[i] = -std::conj(X.row[i]);
  ce.u[n] = 1.0;
  double un = 0.0;
  for (const cplx& x : ce.u) un += std::norm(x);
  un = std::sqrt(un);
  const auto Bu = A.apply(ce.u);
  double r = 0.0;
  for (std::size_t i = 0; i <= n; ++i) r += std::norm(Bu[i] - lambda * ce.u[i]);
  ce.eigen_residual = std::sqrt(r) / un;
  for (std::size_t j = 0; j < n; ++j)
    ce.orthogonality = std::max(ce.orthogonality, std::abs(std::conj(ce.u[j]) + X.row[j]) / un);
  ce.passed = ce.eigen_residual <= kEigenvectorTol && ce.orthogonality <= 1e-12;
  return ce;
}

// ---------------------------------------------------------------------------
// norm bound for separated spectra

struct NormBound {
  bool applicable = false;
  double d = 0.0;
  double v_norm = 0.0;
  double c_pi = 0.0;
  double delta_V = 0.0;
  double bound = 0.0;  // bound on ||X|| / sqrt(1 + ||X||^2)
  bool below_one = false;

  void require_applicable() const {
    if (!applicable) {
      throw Error(ErrorCode::NotApplicable, "||v|| = " + std::to_string(v_norm) +
                                                " is not below c_pi d = " + std::to_string(c_pi * d));
    }
  }
};

inline double norm_bound_constant() {
  const double pi = std::numbers::pi;
  return (3.0 * pi - std::sqrt(pi * pi + 32.0)) / (pi * pi - 4.0);
}

inline NormBound kmm_bound(double d, double v_norm) {
  RANKONE_THROW_UNLESS(d > 0.0 && std::isfinite(d), ErrorCode::InvalidArgument,
                       "kmm_bound: d must be positive");
  RANKONE_THROW_UNLESS(v_norm >= 0.0 && std::isfinite(v_norm), ErrorCode::InvalidArgument,
                       "kmm_bound: ||v|| must be nonnegative");
  NormBound k;
  k.d = d;
  k.v_norm = v_norm;
  k.c_pi = norm_bound_constant();
  k.applicable = v_norm < k.c_pi * d;
  k.delta_V = v_norm * std::tan(0.5 * std::atan(2.0 * v_norm / d));
  k.bound = d > k.delta_V ? 0.5 * std::numbers::pi * v_norm / (d - k.delta_V)
                          : std::numeric_limits<double>::infinity();
  k.below_one = k.bound < 1.0;
  return k;
}

// ---------------------------------------------------------------------------
// refinement

struct BlowupReport {
  double lambda = 0.0;
  std::vector<int> depths;
  std::vector<double> norms;               // ||X_lambda|| per depth (inf on an atom)
  std::vector<double> secular_residuals;   // |h(lambda)| per depth
  std::string verdict;  // "non-closable-indication", "stable", "inconclusive"
};

inline constexpr double kBlowupFactor = 1.2;
inline constexpr double kStableRelChange = 1e-6;

/// ||X_lambda|| along a refinement ladder. Growth by kBlowupFactor at each of
/// the last two steps is reported as an indication of non-closability; a
/// relative change below kStableRelChange at the last step as stable.
inline BlowupReport refinement_blowup(const RefinementLadder& ladder, double lambda) {
  BlowupReport rep;
  rep.lambda = lambda;
  rep.depths = ladder.depths();
  for (const auto& m : ladder.models()) {
    const auto g = g2(m.nu(), lambda);
    rep.norms.push_back(g.atom_hit ? std::numeric_limits<double>::infinity() : std::sqrt(g.value));
    rep.secular_residuals.push_back(g.atom_hit ? std::numeric_limits<double>::infinity()
                                               : std::abs(secular_function(m, lambda)));
  }
  const auto& s = rep.norms;
  const std::size_t n = s.size();
  rep.verdict = "inconclusive";
  if (std::any_of(s.begin(), s.end(), [](double x) { return std::isinf(x); })) {
    rep.verdict = "non-closable-indication";
  } else if (n >= 3 && s[n - 1] >= kBlowupFactor * s[n - 2] && s[n - 2] >= kBlowupFactor * s[n - 3]) {
    rep.verdict = "non-closable-indication";
  } else if (n == 1 || (n >= 2 && std::abs(s[n - 1] - s[n - 2]) <= kStableRelChange * s[n - 1])) {
    rep.verdict = "stable";
  }
  return rep;
}

inline BlowupReport refinement_blowup(const SpectralModel& model, double lambda,
                                      std::vector<int> depths) {
  if (!model.refinable()) depths = {0};
  return refinement_blowup(RefinementLadder(model, std::move(depths)), lambda);
}

// ---------------------------------------------------------------------------
// distinguishability of graph subspaces

struct PsiSeparation {
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
  bool distinguishable = false;
};

/// Entrywise comparison of the coefficient rows of two functionals; they are
/// distinguishable when some entry differs by more than a few ulps.
inline PsiSeparation psi_separation(const RiccatiFunctional& a, const RiccatiFunctional& b) {
  RANKONE_THROW_UNLESS(a.row.size() == b.row.size(), ErrorCode::InvalidArgument,
                       "psi_separation: dimension mismatch");
  PsiSeparation s;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i < a.row.size(); ++i) {
    const double diff = std::abs(a.row[i] - b.row[i]);
    const double mag = std::max(std::abs(a.row[i]), std::abs(b.row[i]));
    s.max_abs_diff = std::max(s.max_abs_diff, diff);
    if (mag > 0.0) {
      s.max_rel_diff = std::max(s.max_rel_diff, diff / mag);
      if (diff > 8.0 * eps * mag) s.distinguishable = true;
    }
  }
  return s;
}

/// Distance from X_lambda to the nearest other bounded solution X_mu, mu
/// ranging over `eigenvalues` (all codimension-one invariant graphs of a
/// finite model).
inline double isolation_distance(const SpectralModel& model, double lambda,
                                 std::span<const double> eigenvalues) {
  const auto X = x_lambda(model, lambda);
  double best = std::numeric_limits<double>::infinity();
  for (double mu : eigenvalues) {
    if (mu == lambda) continue;
    const auto Y = x_lambda(model, mu);
    if (Y.singular_atom) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < X.row.size(); ++i) s += std::norm(X.row[i] - Y.row[i]);
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

}  // namespace rankone
