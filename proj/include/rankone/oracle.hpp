#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "rankone/error.hpp"
#include "rankone/measure.hpp"
#include "rankone/spectral_model.hpp"

namespace rankone {

/// Largest number of atoms the dense oracle accepts.
inline constexpr std::size_t kOracleMaxAtoms = 5000;

/// B = [[diag(mu), c], [c^*, a1]] in the orthonormal basis e_i / sqrt(w_i) of
/// L^2(m) followed by the H1 unit vector; c_i = sqrt(w_i) v_i. The atoms,
/// weights and coupling samples are kept so the model can be re-extracted
/// bit for bit.
struct ArrowheadMatrix {
  std::vector<double> diag;
  std::vector<double> weights;
  std::vector<cplx> v;
  std::vector<cplx> c;
  double a1 = 0.0;

  std::size_t atoms() const { return diag.size(); }
  std::size_t dim() const { return diag.size() + 1; }

  Eigen::MatrixXcd dense() const {
    const Eigen::Index n = static_cast<Eigen::Index>(diag.size());
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      B(i, i) = diag[i];
      B(i, n) = c[i];
      B(n, i) = std::conj(c[i]);
    }
    B(n, n) = a1;
    return B;
  }

  /// y = B x in O(n).
  std::vector<cplx> apply(std::span<const cplx> x) const {
    RANKONE_THROW_UNLESS(x.size() == dim(), ErrorCode::InvalidArgument,
                         "arrowhead apply: dimension mismatch");
    const std::size_t n = diag.size();
    std::vector<cplx> y(n + 1);
    cplx last = a1 * x[n];
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = diag[i] * x[i] + c[i] * x[n];
      last += std::conj(c[i]) * x[i];
    }
    y[n] = last;
    return y;
  }

  /// Upper bound on the operator norm: max|mu| + |a1| + ||c||.
  double norm_bound() const {
    double m = 0.0, cc = 0.0;
    for (double d : diag) m = std::max(m, std::abs(d));
    for (const cplx& ci : c) cc += std::norm(ci);
    return m + std::abs(a1) + std::sqrt(cc);
  }
};

inline ArrowheadMatrix build_arrowhead(const SpectralModel& model) {
  const Measure& m = model.base();
  RANKONE_THROW_UNLESS(m.size() > 0, ErrorCode::EmptyModel, "model has no atoms");
  ArrowheadMatrix A;
  A.diag.assign(m.points().begin(), m.points().end());
  A.weights.assign(m.weights().begin(), m.weights().end());
  A.v.assign(model.coupling().begin(), model.coupling().end());
  A.c.resize(A.v.size());
  for (std::size_t i = 0; i < A.v.size(); ++i) A.c[i] = std::sqrt(A.weights[i]) * A.v[i];
  A.a1 = model.a1();
  return A;
}

/// The model (m, v, a1) the matrix was built from.
inline SpectralModel extract_model(const ArrowheadMatrix& A) {
  return SpectralModel(Measure::atomic(A.diag, A.weights), Coupling::samples(A.v), A.a1);
}

struct EigenSystem {
  std::vector<double> values;   // ascending
  Eigen::MatrixXcd vectors;     // column k belongs to values[k]
  std::vector<double> residuals;
  double unitarity_defect = 0.0;
  double matrix_norm = 0.0;     // Frobenius norm of B
};

namespace detail {
inline void fix_phase(Eigen::MatrixXcd& U) {
  const Eigen::Index last = U.rows() - 1;
  for (Eigen::Index k = 0; k < U.cols(); ++k) {
    Eigen::Index anchor = last;
    if (std::abs(U(last, k)) < 1e-14) U.col(k).cwiseAbs().maxCoeff(&anchor);
    const cplx a = U(anchor, k);
    if (std::abs(a) > 0.0) U.col(k) *= std::conj(a) / std::abs(a);
    U(anchor, k) = std::abs(U(anchor, k));
  }
}
}  // namespace detail

/// Full Hermitian eigensystem. Eigenvectors are phase-fixed so that the last
/// component is real and nonnegative (or, when it vanishes, the largest one).
inline EigenSystem dense_eig(const Eigen::MatrixXcd& B) {
  RANKONE_THROW_UNLESS(B.rows() == B.cols() && B.rows() > 0, ErrorCode::InvalidArgument,
                       "dense_eig: matrix must be square and nonempty");
  RANKONE_THROW_UNLESS(static_cast<std::size_t>(B.rows()) <= kOracleMaxAtoms + 1,
                       ErrorCode::InvalidArgument, "dense_eig: matrix exceeds the oracle cap");
  const double herm = (B - B.adjoint()).cwiseAbs().maxCoeff();
  RANKONE_THROW_UNLESS(herm <= 1e-14 * (1.0 + B.cwiseAbs().maxCoeff()), ErrorCode::InvalidArgument,
                       "dense_eig: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(B);
  RANKONE_THROW_UNLESS(es.info() == Eigen::Success, ErrorCode::NumericalFailure,
                       "dense_eig: eigensolver did not converge");
  EigenSystem sys;
  sys.vectors = es.eigenvectors();
  detail::fix_phase(sys.vectors);
  sys.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  sys.matrix_norm = B.norm();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < B.cols(); ++k) {
    const double r = (B * sys.vectors.col(k) - sys.values[k] * sys.vectors.col(k)).norm();
    sys.residuals.push_back(r);
    worst = std::max(worst, r);
  }
  sys.unitarity_defect =
      (sys.vectors.adjoint() * sys.vectors - Eigen::MatrixXcd::Identity(B.rows(), B.cols()))
          .cwiseAbs()
          .maxCoeff();
  RANKONE_THROW_UNLESS(worst <= 1e-10 * (1.0 + sys.matrix_norm) && sys.unitarity_defect <= 1e-10,
                       ErrorCode::NumericalFailure,
                       "dense_eig: eigenpair residual or unitarity check failed");
  return sys;
}

inline EigenSystem dense_eig(const ArrowheadMatrix& A) {
  RANKONE_THROW_UNLESS(A.atoms() <= kOracleMaxAtoms, ErrorCode::InvalidArgument,
                       "dense oracle is capped at 5000 atoms");
  return dense_eig(A.dense());
}

struct SpectralAtom {
  double location = 0.0;
  double mass = 0.0;
};

/// Atoms of omega = tr Omega: mass_k = |<u_k, v (+) 0>|^2 + |<u_k, 0 (+) 1>|^2.
inline std::vector<SpectralAtom> oracle_spectral_measure(const ArrowheadMatrix& A,
                                                         const EigenSystem& sys) {
  const Eigen::Index n = static_cast<Eigen::Index>(A.atoms());
  std::vector<SpectralAtom> out;
  out.reserve(sys.values.size());
  for (Eigen::Index k = 0; k <= n; ++k) {
    cplx ov = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ov += std::conj(sys.vectors(i, k)) * A.c[i];
    out.push_back({sys.values[k], std::norm(ov) + std::norm(sys.vectors(n, k))});
  }
  return out;
}

inline std::vector<SpectralAtom> oracle_spectral_measure(const SpectralModel& model) {
  const auto A = build_arrowhead(model);
  return oracle_spectral_measure(A, dense_eig(A));
}

/// diag(V, 1)^* (B - z)^{-1} diag(V, 1) by a dense LU solve.
inline Matrix2c oracle_m_matrix(const ArrowheadMatrix& A, cplx z) {
  RANKONE_THROW_UNLESS(z.imag() != 0.0, ErrorCode::InvalidArgument,
                       "oracle_m_matrix: Im z must be nonzero");
  const Eigen::Index n = static_cast<Eigen::Index>(A.atoms());
  Eigen::MatrixXcd Bz = A.dense();
  Bz.diagonal().array() -= z;
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(n + 1, 2);
  for (Eigen::Index i = 0; i < n; ++i) rhs(i, 0) = A.c[i];
  rhs(n, 1) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Bz);
  const Eigen::MatrixXcd sol = lu.solve(rhs);
  RANKONE_THROW_UNLESS(sol.allFinite(), ErrorCode::NumericalFailure,
                       "oracle_m_matrix: resolvent solve failed");
  const double back = (Bz * sol - rhs).norm();
  RANKONE_THROW_UNLESS(back <= 1e-8 * (1.0 + rhs.norm()) * (1.0 + Bz.norm() * sol.norm()),
                       ErrorCode::NumericalFailure, "oracle_m_matrix: resolvent residual too large");
  const Eigen::MatrixXcd M = rhs.adjoint() * sol;
  return {M(0, 0), M(0, 1), M(1, 0), M(1, 1)};
}

inline Matrix2c oracle_m_matrix(const SpectralModel& model, cplx z) {
  return oracle_m_matrix(build_arrowhead(model), z);
}

struct CyclicityEvidence {
  bool cyclic = false;
  double min_eigenvalue_gap = 0.0;
  double min_h1_overlap = 0.0;  // min_k |<u_k, 0 (+) 1>|
  int krylov_rank = 0;
};

/// Rank of the Krylov space of B generated by the H1 unit vector: Lanczos
/// with full reorthogonalization, stopped when the new direction drops below
/// tol relative to ||B||.
inline int krylov_rank(const ArrowheadMatrix& A, double tol = 1e-10) {
  const std::size_t N = A.dim();
  const double scale = std::max(1.0, A.norm_bound());
  std::vector<std::vector<cplx>> Q;
  std::vector<cplx> q(N, 0.0);
  q[N - 1] = 1.0;
  Q.push_back(q);
  while (Q.size() < N) {
    std::vector<cplx> w = A.apply(Q.back());
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : Q) {
        cplx dot = 0.0;
        for (std::size_t i = 0; i < N; ++i) dot += std::conj(b[i]) * w[i];
        for (std::size_t i = 0; i < N; ++i) w[i] -= dot * b[i];
      }
    }
    double nrm = 0.0;
    for (const cplx& x : w) nrm += std::norm(x);
    nrm = std::sqrt(nrm);
    if (nrm <= tol * scale) break;
    for (cplx& x : w) x /= nrm;
    Q.push_back(std::move(w));
  }
  return static_cast<int>(Q.size());
}

/// The H1 vector is cyclic iff every eigenvalue is simple and every
/// eigenvector has a nonzero H1 component (threshold `overlap_tol`).
inline CyclicityEvidence cyclicity_check(const ArrowheadMatrix& A, const EigenSystem& sys,
                                         double overlap_tol = 1e-12) {
  CyclicityEvidence ev;
  const Eigen::Index last = static_cast<Eigen::Index>(A.atoms());
  ev.min_h1_overlap = INFINITY;
  for (Eigen::Index k = 0; k <= last; ++k)
    ev.min_h1_overlap = std::min(ev.min_h1_overlap, std::abs(sys.vectors(last, k)));
  ev.min_eigenvalue_gap = INFINITY;
  for (std::size_t k = 1; k < sys.values.size(); ++k)
    ev.min_eigenvalue_gap = std::min(ev.min_eigenvalue_gap, sys.values[k] - sys.values[k - 1]);
  const double gap_tol = 1e-12 * std::max(1.0, sys.matrix_norm);
  ev.cyclic = ev.min_h1_overlap > overlap_tol && ev.min_eigenvalue_gap > gap_tol;
  ev.krylov_rank = krylov_rank(A);
  return ev;
}

inline CyclicityEvidence cyclicity_check(const SpectralModel& model) {
  const auto A = build_arrowhead(model);
  return cyclicity_check(A, dense_eig(A));
}

}  // namespace rankone
