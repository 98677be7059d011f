#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rankone/oracle.hpp"
#include "rankone/spectral_model.hpp"
#include "support/generators.hpp"

namespace rankone {
namespace {

using testing::random_atomic;
using testing::random_upper;

SpectralModel single_atom(cplx v = 1.0) {
  return SpectralModel(Measure::atomic({0.0}, {1.0}), Coupling::constant(v), 0.0);
}

SpectralModel two_atom(double t = 1.0) {
  return SpectralModel(Measure::atomic({-1.0, 1.0}, {0.5, 0.5}), Coupling::constant(t), 0.0);
}

TEST(BuildArrowhead, SingleAtom) {
  const auto B = build_arrowhead(single_atom()).dense();
  ASSERT_EQ(B.rows(), 2);
  EXPECT_EQ(B(0, 0), cplx(0.0));
  EXPECT_EQ(B(0, 1), cplx(1.0));
  EXPECT_EQ(B(1, 0), cplx(1.0));
  EXPECT_EQ(B(1, 1), cplx(0.0));
}

TEST(BuildArrowhead, TwoAtom) {
  const auto B = build_arrowhead(two_atom()).dense();
  ASSERT_EQ(B.rows(), 3);
  const double s = std::sqrt(0.5);
  EXPECT_EQ(B(0, 0), cplx(-1.0));
  EXPECT_EQ(B(1, 1), cplx(1.0));
  EXPECT_EQ(B(0, 1), cplx(0.0));
  EXPECT_NEAR(std::abs(B(0, 2) - s), 0.0, 1e-16);
  EXPECT_NEAR(std::abs(B(2, 1) - s), 0.0, 1e-16);
}

TEST(BuildArrowhead, ComplexCouplingIsHermitian) {
  const auto B = build_arrowhead(single_atom({0.0, 1.0})).dense();
  EXPECT_EQ(B(0, 1), cplx(0.0, 1.0));
  EXPECT_EQ(B(1, 0), cplx(0.0, -1.0));
  EXPECT_EQ((B - B.adjoint()).norm(), 0.0);
}

TEST(BuildArrowhead, RoundTripIsExact) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const auto model = random_atomic(rng, testing::uniform_int(rng, 1, 100)).model();
    const auto A = build_arrowhead(model);
    const auto back = extract_model(A);
    ASSERT_EQ(back.base().size(), model.base().size());
    for (std::size_t i = 0; i < model.base().size(); ++i) {
      EXPECT_EQ(back.base().points()[i], model.base().points()[i]);
      EXPECT_EQ(back.base().weights()[i], model.base().weights()[i]);
      EXPECT_EQ(back.coupling()[i], model.coupling()[i]);
      EXPECT_EQ(back.nu().weights()[i], model.nu().weights()[i]);
      // |c_i|^2 reproduces the nu weight up to rounding
      EXPECT_NEAR(std::norm(A.c[i]), model.nu().weights()[i], 2e-15 * model.nu().weights()[i]);
    }
    EXPECT_EQ(back.a1(), model.a1());
  }
}

TEST(BuildArrowhead, ApplyMatchesDense) {
  std::mt19937_64 rng(9);
  const auto A = build_arrowhead(random_atomic(rng, 30).model());
  std::vector<cplx> x(A.dim());
  Eigen::VectorXcd xe(A.dim());
  for (std::size_t i = 0; i < A.dim(); ++i) {
    x[i] = {testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1)};
    xe(i) = x[i];
  }
  const auto y = A.apply(x);
  const Eigen::VectorXcd ye = A.dense() * xe;
  for (std::size_t i = 0; i < A.dim(); ++i) EXPECT_LE(std::abs(y[i] - ye(i)), 1e-14);
}

TEST(DenseEig, Examples) {
  const auto s1 = dense_eig(build_arrowhead(single_atom()));
  EXPECT_NEAR(s1.values[0], -1.0, 1e-15);
  EXPECT_NEAR(s1.values[1], 1.0, 1e-15);

  const auto s2 = dense_eig(build_arrowhead(two_atom()));
  EXPECT_NEAR(s2.values[0], -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(s2.values[1], 0.0, 1e-14);
  EXPECT_NEAR(s2.values[2], std::sqrt(2.0), 1e-14);

  // decoupled fixture: coupling forced to zero, bypassing model validation
  ArrowheadMatrix D;
  D.diag = {-0.5, 0.25, 2.0};
  D.weights = {1.0, 1.0, 1.0};
  D.v = {0.0, 0.0, 0.0};
  D.c = {0.0, 0.0, 0.0};
  D.a1 = 1.0;
  const auto s3 = dense_eig(D);
  const std::vector<double> expect{-0.5, 0.25, 1.0, 2.0};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(s3.values[k], expect[k], 1e-15);
}

TEST(DenseEig, ResidualsAndUnitarity) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto A = build_arrowhead(random_atomic(rng, testing::uniform_int(rng, 1, 150)).model());
    const auto sys = dense_eig(A);
    for (double r : sys.residuals) EXPECT_LE(r, 1e-12 * sys.matrix_norm);
    EXPECT_LE(sys.unitarity_defect, 1e-12);
    EXPECT_TRUE(std::is_sorted(sys.values.begin(), sys.values.end()));
    const Eigen::Index last = sys.vectors.rows() - 1;
    for (Eigen::Index k = 0; k < sys.vectors.cols(); ++k) {
      EXPECT_EQ(sys.vectors(last, k).imag(), 0.0);
      EXPECT_GE(sys.vectors(last, k).real(), 0.0);
    }
  }
}

TEST(DenseEig, RejectsNonHermitianAndOversize) {
  Eigen::MatrixXcd M(2, 2);
  M << 0.0, 1.0, 2.0, 0.0;
  EXPECT_THROW(dense_eig(M), Error);
  ArrowheadMatrix big;
  big.diag.assign(kOracleMaxAtoms + 1, 0.0);
  EXPECT_THROW(dense_eig(big), Error);
}

TEST(OracleMeasure, SingleAtom) {
  const auto atoms = oracle_spectral_measure(single_atom());
  ASSERT_EQ(atoms.size(), 2u);
  EXPECT_NEAR(atoms[0].location, -1.0, 1e-15);
  EXPECT_NEAR(atoms[0].mass, 1.0, 1e-14);
  EXPECT_NEAR(atoms[1].location, 1.0, 1e-15);
  EXPECT_NEAR(atoms[1].mass, 1.0, 1e-14);
}

TEST(OracleMeasure, TwoAtomAndScaling) {
  const auto atoms = oracle_spectral_measure(two_atom());
  double total = 0.0;
  for (const auto& a : atoms) {
    EXPECT_GE(a.mass, 0.0);
    total += a.mass;
  }
  EXPECT_NEAR(total, 2.0, 1e-12);
  for (double t : {0.1, 0.5, 3.0}) {
    double tot = 0.0;
    for (const auto& a : oracle_spectral_measure(two_atom(t))) tot += a.mass;
    EXPECT_NEAR(tot, t * t + 1.0, 1e-12 * (t * t + 1.0));
  }
}

TEST(OracleMeasure, StieltjesTransformMatchesPhi) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 30; ++t) {
    const auto model = random_atomic(rng, testing::uniform_int(rng, 1, 80)).model();
    const auto atoms = oracle_spectral_measure(model);
    double total = 0.0;
    for (const auto& a : atoms) total += a.mass;
    EXPECT_NEAR(total, model.coupling_norm_sq() + 1.0, 1e-12 * (model.coupling_norm_sq() + 1.0));
    for (int s = 0; s < 5; ++s) {
      const cplx z = random_upper(rng);
      cplx st = 0.0;
      for (const auto& a : atoms) st += a.mass / (a.location - z);
      EXPECT_LE(testing::rel_err(st, phi(model, z)), 1e-10);
    }
  }
}

TEST(OracleMeasure, EmptyWindowsCarryNoMass) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    const auto model = random_atomic(rng, testing::uniform_int(rng, 2, 60)).model();
    const auto A = build_arrowhead(model);
    const auto sys = dense_eig(A);
    const auto atoms = oracle_spectral_measure(A, sys);
    const Eigen::Index last = static_cast<Eigen::Index>(A.atoms());
    // window strictly between consecutive eigenvalues
    for (std::size_t k = 0; k + 1 < atoms.size(); ++k) {
      const double lo = atoms[k].location, hi = atoms[k + 1].location;
      const double a = lo + 0.25 * (hi - lo), b = lo + 0.75 * (hi - lo);
      double omega = 0.0, e11 = 0.0;
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (atoms[j].location < a || atoms[j].location > b) continue;
        omega += atoms[j].mass;
        e11 += std::norm(sys.vectors(last, static_cast<Eigen::Index>(j)));
      }
      EXPECT_EQ(omega, 0.0);
      EXPECT_EQ(e11, 0.0);
    }
  }
}

TEST(OracleMMatrix, SingleAtomAtI) {
  const auto O = oracle_m_matrix(single_atom(), {0.0, 1.0});
  const auto M = m_matrix(single_atom(), {0.0, 1.0});
  EXPECT_LE(std::abs(O.m00 - M.m00), 1e-14);
  EXPECT_LE(std::abs(O.m01 - M.m01), 1e-14);
  EXPECT_LE(std::abs(O.m10 - M.m10), 1e-14);
  EXPECT_LE(std::abs(O.m11 - M.m11), 1e-14);
}

TEST(OracleMMatrix, HermitianSymmetry) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    const auto model = random_atomic(rng, testing::uniform_int(rng, 1, 50)).model();
    const cplx z = random_upper(rng);
    const auto M = oracle_m_matrix(model, z);
    const auto Mc = oracle_m_matrix(model, std::conj(z));
    EXPECT_LE(std::abs(Mc.m00 - std::conj(M.m00)), 1e-12 * (1 + std::abs(M.m00)));
    EXPECT_LE(std::abs(Mc.m01 - std::conj(M.m10)), 1e-12 * (1 + std::abs(M.m10)));
    EXPECT_LE(std::abs(Mc.m10 - std::conj(M.m01)), 1e-12 * (1 + std::abs(M.m01)));
    EXPECT_LE(std::abs(Mc.m11 - std::conj(M.m11)), 1e-12 * (1 + std::abs(M.m11)));
    EXPECT_LE(std::abs(M.trace() - phi(model, z)), 1e-12 * (1 + std::abs(M.trace())));
  }
}

TEST(OracleMMatrix, ResolventViaEigensystem) {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 10; ++t) {
    const auto A = build_arrowhead(random_atomic(rng, testing::uniform_int(rng, 1, 60)).model());
    const auto sys = dense_eig(A);
    const cplx z = random_upper(rng);
    Eigen::MatrixXcd Bz = A.dense();
    Bz.diagonal().array() -= z;
    const Eigen::MatrixXcd direct = Bz.inverse();
    Eigen::VectorXcd inv(sys.values.size());
    for (std::size_t k = 0; k < sys.values.size(); ++k) inv(k) = 1.0 / (sys.values[k] - z);
    const Eigen::MatrixXcd spectral = sys.vectors * inv.asDiagonal() * sys.vectors.adjoint();
    EXPECT_LE((direct - spectral).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Cyclicity, Examples) {
  const auto c1 = cyclicity_check(single_atom());
  EXPECT_TRUE(c1.cyclic);
  EXPECT_NEAR(c1.min_h1_overlap, 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(c1.krylov_rank, 2);

  const SpectralModel decoupled(Measure::atomic({-1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}),
                                Coupling::samples({1.0, 0.0, 1.0}), 0.3);
  const auto c2 = cyclicity_check(decoupled);
  EXPECT_FALSE(c2.cyclic);
  EXPECT_EQ(c2.krylov_rank, 3);

  const auto c3 = cyclicity_check(two_atom());
  EXPECT_TRUE(c3.cyclic);
  EXPECT_EQ(c3.krylov_rank, 3);
}

TEST(Cyclicity, KrylovAgreesOnRandomModels) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const int n = testing::uniform_int(rng, 1, 8);
    auto d = random_atomic(rng, n);
    if (t % 2) d.v[testing::uniform_int(rng, 0, n - 1)] = 0.0;
    if (n == 1 && t % 2) continue;
    const auto ev = cyclicity_check(d.model());
    EXPECT_EQ(ev.cyclic, ev.krylov_rank == n + 1) << "n=" << n;
  }
}

}  // namespace
}  // namespace rankone
