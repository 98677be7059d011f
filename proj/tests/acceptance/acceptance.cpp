// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rankone/model_io.hpp"
#include "rankone/rankone.hpp"
#include "support/generators.hpp"

namespace {

using namespace rankone;
namespace gen = rankone::testing;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

std::string models_dir() { return RANKONE_MODELS_DIR; }

// ---------------------------------------------------------------------------

void ac1(Outcome& o) {
  const double c = norm_bound_constant();
  o.require(std::floor(c * 1e6) == 503288.0, "c_pi digits");
  o.detail.precision(10);
  o.detail << "c_pi = " << c;
}

void ac2(Outcome& o) {
  const SpectralModel m(Measure::atomic({0.0}, {1.0}), Coupling::constant(1.0), 0.0);
  const auto [lo, hi] = eigenvalue_bracket(m);
  const auto eigs = find_eigenvalues(m, lo, hi);
  const auto sys = dense_eig(build_arrowhead(m));
  o.require(eigs.size() == 2 && sys.values.size() == 2, "two eigenvalues");
  if (!o.pass) return;
  double delta = 0.0;
  for (int k = 0; k < 2; ++k) delta = std::max(delta, std::abs(eigs[k] - sys.values[k]));
  o.require(std::abs(eigs[0] + 1.0) <= 1e-12 && std::abs(eigs[1] - 1.0) <= 1e-12, "eigenvalues -1, 1");
  o.require(delta <= 1e-12, "delta vs dense");
  const std::vector<cplx> one{1.0};
  o.require(x_lambda_apply(m, 1.0, one) == cplx(-1.0), "X_1 = -1");
  o.require(x_lambda_apply(m, -1.0, one) == cplx(1.0), "X_-1 = 1");
  double res = 0.0, defect = 0.0;
  for (double lambda : eigs) {
    const auto cert = riccati_residual(m, lambda);
    res = std::max(res, cert.max_residual);
    defect = std::max(defect, cert.invariance_defect);
  }
  o.require(res <= 1e-14, "Riccati residual");
  o.require(defect <= 1e-14, "invariance defect");
  const auto up = complementary_eigenvector(m, eigs[1]);
  const auto dn = complementary_eigenvector(m, eigs[0]);
  // proportional to (1, 1) and (-1, 1)
  o.require(std::abs(up.u[0] - up.u[1]) <= 1e-14 * std::abs(up.u[1]) && up.passed, "u(1) ~ (1, 1)");
  o.require(std::abs(dn.u[0] + dn.u[1]) <= 1e-14 * std::abs(dn.u[1]) && dn.passed, "u(-1) ~ (-1, 1)");
  o.detail << "max |delta| = " << delta << ", residual = " << res << ", defect = " << defect;
}

void ac3(Outcome& o) {
  const SpectralModel m(Measure::atomic({-1.0, 1.0}, {0.5, 0.5}), Coupling::constant(1.0), 0.0);
  const auto [lo, hi] = eigenvalue_bracket(m);
  const auto eigs = find_eigenvalues(m, lo, hi);
  const std::vector<double> expect{-std::sqrt(2.0), 0.0, std::sqrt(2.0)};
  o.require(eigs.size() == 3, "three eigenvalues");
  if (!o.pass) return;
  double err = 0.0;
  for (int k = 0; k < 3; ++k) err = std::max(err, std::abs(eigs[k] - expect[k]));
  o.require(err <= 1e-10, "eigenvalues -sqrt2, 0, sqrt2");
  double mass = 0.0;
  for (const auto& a : oracle_spectral_measure(m)) mass += a.mass;
  o.require(std::abs(mass - 2.0) <= 1e-12, "omega mass 2");
  o.detail << "eigenvalue error = " << err << ", omega mass - 2 = " << mass - 2.0;
}

void ac4(Outcome& o) {
  std::mt19937_64 rng(20240401);
  double worst = 0.0, worst_res = 0.0, worst_def = 0.0;
  std::size_t eig_total = 0, pairs = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = gen::uniform_int(rng, 1, 200);
    auto draw = gen::random_atomic(rng, n, t % 2 == 0);
    // wider spread of a1 and weights than the unit-test generator
    draw.a1 = gen::uniform(rng, -3.0, 3.0);
    for (auto& w : draw.weights) w *= gen::uniform(rng, 0.1, 10.0);
    const auto model = draw.model();
    const auto A = build_arrowhead(model);
    const auto sys = dense_eig(A);
    const auto [lo, hi] = eigenvalue_bracket(model);
    const auto eigs = find_eigenvalues(model, lo, hi);
    const std::string tag = "model " + std::to_string(t);
    o.require(eigs.size() == sys.values.size(), tag + ": eigenvalue count");
    if (eigs.size() != sys.values.size()) continue;
    const double spread = sys.values.back() - sys.values.front();
    for (std::size_t k = 0; k < eigs.size(); ++k) {
      const double d = std::abs(eigs[k] - sys.values[k]) / spread;
      worst = std::max(worst, d);
    }
    std::vector<RiccatiFunctional> xs;
    for (double lambda : eigs) {
      const auto pc = classify_point(model, lambda);
      o.require(pc.tag == PointTag::PurePoint, tag + ": eigenvalue not PurePoint");
      const auto cert = riccati_residual(model, lambda, default_test_vectors(A, lambda, t));
      o.require(cert.verdict == Verdict::Solution, tag + ": residual test");
      o.require(cert.defect_verdict == Verdict::Solution, tag + ": invariance test");
      worst_res = std::max(worst_res, cert.max_residual);
      worst_def = std::max(worst_def, cert.invariance_defect);
      xs.push_back(x_lambda(model, lambda));
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = i + 1; j < xs.size(); ++j, ++pairs)
        o.require(psi_separation(xs[i], xs[j]).distinguishable, tag + ": Psi injectivity");
    eig_total += eigs.size();
  }
  o.require(worst <= 1e-9, "eigenvalue agreement");
  o.detail << eig_total << " eigenvalues, " << pairs << " pairs; max |dlambda|/width = " << worst
           << ", max residual = " << worst_res << ", max defect = " << worst_def;
}

double max_entry(const Matrix2c& M) {
  return std::max({std::abs(M.m00), std::abs(M.m01), std::abs(M.m10), std::abs(M.m11)});
}

void ac5(Outcome& o) {
  std::mt19937_64 rng(20240402);
  double worst_trace = 0.0, worst_m = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto model = gen::random_atomic(rng, gen::uniform_int(rng, 1, 100)).model();
    const cplx z = gen::random_upper(rng, 0.01, 3.0);
    const auto M = m_matrix(model, z);
    const auto O = oracle_m_matrix(model, z);
    const cplx ph = phi(model, z);
    worst_trace = std::max(worst_trace, std::abs(ph - M.trace()) / std::abs(ph));
    const Matrix2c D{M.m00 - O.m00, M.m01 - O.m01, M.m10 - O.m10, M.m11 - O.m11};
    worst_m = std::max(worst_m, max_entry(D) / max_entry(O));
  }
  o.require(worst_trace <= 1e-10, "phi = tr M");
  o.require(worst_m <= 1e-10, "M = oracle M");
  int herglotz_fail = 0, symmetry_fail = 0;
  for (int t = 0; t < 500; ++t) {
    const auto model = gen::random_atomic(rng, gen::uniform_int(rng, 1, 60)).model();
    const cplx z = gen::random_upper(rng, 1e-3, 5.0);
    const auto M = m_matrix(model, z);
    const auto Mc = m_matrix(model, std::conj(z));
    // Im M = (M - M^*) / 2i must be positive semidefinite; Im phi > 0
    const double a = M.m00.imag(), d = M.m11.imag();
    const cplx b = (M.m01 - std::conj(M.m10)) / cplx(0.0, 2.0);
    const double scale = std::max(1.0, max_entry(M));
    const bool psd = a >= -1e-12 * scale && d >= -1e-12 * scale && a * d - std::norm(b) >= -1e-12 * scale * scale;
    if (!(phi(model, z).imag() > 0.0) || !psd) ++herglotz_fail;
    const double sym = std::max({std::abs(Mc.m00 - std::conj(M.m00)), std::abs(Mc.m01 - std::conj(M.m10)),
                                 std::abs(Mc.m10 - std::conj(M.m01)), std::abs(Mc.m11 - std::conj(M.m11))});
    if (sym > 1e-12 * scale) ++symmetry_fail;
  }
  o.require(herglotz_fail == 0, "Herglotz positivity");
  o.require(symmetry_fail == 0, "conjugate symmetry");
  o.detail << "trace rel err = " << worst_trace << ", M rel err = " << worst_m
           << ", Herglotz failures = " << herglotz_fail << ", symmetry failures = " << symmetry_fail;
}

void ac6(Outcome& o) {
  std::mt19937_64 rng(20240403);
  double worst_atom = 0.0, worst_total = 0.0;
  for (int t = 0; t < 40; ++t) {
    const auto model = gen::random_atomic(rng, gen::uniform_int(rng, 1, 50)).model();
    const auto atoms = oracle_spectral_measure(model);
    const auto [lo, hi] = eigenvalue_bracket(model);
    const auto res = stieltjes_invert(model, lo, hi, 1e-6);
    o.require(res.atom_locations.size() == atoms.size(), "model " + std::to_string(t) + ": atom count");
    if (res.atom_locations.size() != atoms.size()) continue;
    for (std::size_t k = 0; k < atoms.size(); ++k)
      worst_atom = std::max(worst_atom, std::abs(res.atom_masses[k] - atoms[k].mass));
    worst_total = std::max(worst_total, std::abs(res.total_mass() - (model.coupling_norm_sq() + 1.0)));
  }
  o.require(worst_atom <= 1e-4, "atom masses");
  o.require(worst_total <= 1e-4, "total mass");
  o.detail << "max atom mass error = " << worst_atom << ", max total mass error = " << worst_total;
}

void ac7(Outcome& o) {
  std::mt19937_64 rng(20240404);
  const double c_pi = norm_bound_constant();
  int violations = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double d = gen::uniform(rng, 0.05, 0.9);
    const int n = gen::uniform_int(rng, 2, 60);
    std::vector<double> pts, wts;
    std::vector<cplx> v;
    for (int i = 0; i < n; ++i) {
      const double x = gen::uniform(rng, d, 1.0);
      pts.push_back(i % 2 ? x : -x);
      wts.push_back(gen::uniform(rng, 0.5, 1.5));
      v.push_back(gen::random_coupling(rng, true));
    }
    // dist(spec A0, a1) = d exactly, on one or both sides
    pts[0] = -d;
    if (t % 2 == 0) pts[1] = d;
    double vn2 = 0.0;
    for (int i = 0; i < n; ++i) vn2 += wts[i] * std::norm(v[i]);
    const double s = gen::uniform(rng, 0.01, 0.999) * c_pi * d / std::sqrt(vn2);
    for (auto& x : v) x *= s;
    const SpectralModel model(Measure::atomic(pts, wts), Coupling::samples(v), 0.0);
    const auto k = kmm_bound(d, std::sqrt(model.coupling_norm_sq()));
    o.require(k.applicable && k.below_one, "model " + std::to_string(t) + ": bound applicable");
    // every eigenvector with a nonzero H1 component gives a bounded solution,
    // ||X|| / sqrt(1 + ||X||^2) = ||u0|| for a unit eigenvector u = u0 (+) u1
    const auto sys = dense_eig(build_arrowhead(model));
    const Eigen::Index last = sys.vectors.rows() - 1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sys.vectors.cols(); ++j) {
      const double u1 = std::abs(sys.vectors(last, j));
      if (u1 <= 1e-14) continue;
      best = std::min(best, std::sqrt(std::max(0.0, 1.0 - u1 * u1)));
    }
    if (!(best <= k.bound)) ++violations;
    worst_ratio = std::max(worst_ratio, best / k.bound);
  }
  o.require(violations == 0, "bound violated");
  o.detail << "violations = " << violations << ", max (min ratio) / bound = " << worst_ratio;
}

// Gaps of the middle-thirds set on [0, 1] of length >= 3^-levels.
std::vector<std::pair<double, double>> cantor_gaps(int levels) {
  std::vector<std::pair<double, double>> gaps, cells{{0.0, 1.0}};
  for (int l = 0; l < levels; ++l) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : cells) {
      const double len = (b - a) / 3.0;
      gaps.emplace_back(a + len, b - len);
      next.emplace_back(a, a + len);
      next.emplace_back(b - len, b);
    }
    cells = std::move(next);
  }
  std::sort(gaps.begin(), gaps.end());
  return gaps;
}

void ac8(Outcome& o) {
  const auto gap_model = load_model(models_dir() + "/cantor_gap.json").model;
  const auto m15 = gap_model.at_depth(15);
  const auto m16 = gap_model.at_depth(16);
  int gap_eigs = 0;
  double drift = 0.0;
  for (auto [a, b] : cantor_gaps(4)) {
    const auto e15 = find_eigenvalues(m15, a, b);
    const auto e16 = find_eigenvalues(m16, a, b);
    o.require(e15.size() == e16.size(), "gap eigenvalue count changes under refinement");
    for (std::size_t k = 0; k < std::min(e15.size(), e16.size()); ++k) {
      drift = std::max(drift, std::abs(e16[k] - e15[k]) / std::abs(e16[k]));
      ++gap_eigs;
    }
  }
  o.require(gap_eigs > 0, "no gap eigenvalues");
  o.require(drift < 1e-6, "gap eigenvalue drift");

  // candidates: Cantor endpoints made roots of the depth-16 secular equation
  std::vector<int> depths;
  for (int d = 8; d <= 16; ++d) depths.push_back(d);
  const Measure base16 = Measure::cantor({0.0, 1.0, 1.0 / 3.0, 0.5, 16});
  int candidates = 0;
  for (double lambda : {2.0 / 3.0, 2.0 / 9.0, 20.0 / 27.0}) {
    const SpectralModel model(base16, Coupling::constant(1.0),
                              lambda + real_axis_transform(base16, lambda));
    const RefinementLadder ladder(model, {14, 15, 16});
    ClassifyOptions opts;
    opts.ladder = &ladder;
    const auto pc = classify_point(model, lambda, opts);
    const std::string tag = "lambda " + std::to_string(lambda);
    o.require(pc.tag == PointTag::SingularContinuousCandidate && pc.evidence.g2.divergent,
              tag + ": not a g2-divergent candidate");
    const auto rep = refinement_blowup(model, lambda, depths);
    const auto& s = rep.norms;
    const std::size_t n = s.size();
    o.require(n >= 3 && s[n - 3] < s[n - 2] && s[n - 2] < s[n - 1], tag + ": norms not increasing");
    o.require(rep.verdict == "non-closable-indication", tag + ": verdict " + rep.verdict);
    ++candidates;
  }
  o.detail << gap_eigs << " gap eigenvalues, max relative drift 15->16 = " << drift << "; "
           << candidates << " candidates with norm growth (indication only)";
}

// ---------------------------------------------------------------------------
// CLI contract, through the built executable

struct Proc {
  int code = -1;
  std::string out;
};

Proc sh(const std::string& args, bool want_stderr = false) {
  const std::string cmd = std::string(RANKONE_CLI_PATH) + " " + args +
                          (want_stderr ? " 2>&1 >/dev/null" : " 2>/dev/null");
  Proc p;
  FILE* f = popen(cmd.c_str(), "r");
  if (f == nullptr) return p;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
  const int st = pclose(f);
  p.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return p;
}

void ac9(Outcome& o) {
  const std::string M = models_dir() + "/";
  int calls = 0;
  auto same = [&](const std::string& a, const std::string& b, const std::string& what) {
    const auto x = sh(a), y = sh(b);
    calls += 2;
    o.require(x.code == 0 && !x.out.empty() && x.out == y.out, "determinism: " + what);
  };
  same("--model " + M + "complex_coupling.json --cmd verify --seed 5",
       "--model " + M + "complex_coupling.json --cmd verify --seed 5", "verify");
  same("--model " + M + "two_atom.json --cmd scan --grid -2:2:81 --threads 1",
       "--model " + M + "two_atom.json --cmd scan --grid -2:2:81 --threads 8", "scan across threads");
  same("--model " + M + "uniform.json --cmd classify --grid 0:1:21 --format csv",
       "--model " + M + "uniform.json --cmd classify --grid 0:1:21 --format csv", "csv classify");

  struct Expect {
    std::string args;
    int code;
  };
  const std::vector<Expect> codes{
      {"--model " + M + "single_atom.json --cmd verify", 0},
      {"--model " + M + "two_atom.json --cmd eigs", 0},
      {"--model " + M + "single_atom.json --cmd classify --grid 0:1:0", 0},
      {"--model " + M + "single_atom.json --cmd verify --inject-fault 0.001", 1},
      {"--model " + M + "malformed_bad_point.json --cmd classify --lambda 1", 2},
      {"--model " + M + "malformed_missing_a1.json --cmd eigs", 2},
      {"--model " + M + "single_atom.json --cmd classify --grid 1:0:5", 2},
      {"--model " + M + "single_atom.json --cmd nope", 2},
      {"--cmd eigs", 2},
  };
  for (const auto& e : codes) {
    const auto p = sh(e.args);
    ++calls;
    o.require(p.code == e.code, "exit code for: " + e.args);
  }
  const auto bad = sh("--model " + M + "malformed_bad_point.json --cmd classify --lambda 1", true);
  const auto missing = sh("--model " + M + "malformed_missing_a1.json --cmd classify --lambda 1", true);
  calls += 2;
  o.require(bad.out.find("measure.points[2]") != std::string::npos, "field path measure.points[2]");
  o.require(missing.out.find("a1:") != std::string::npos, "field path a1");
  o.detail << calls << " CLI invocations";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"AC1 constant c_pi", ac1},
      {"AC2 single-atom model", ac2},
      {"AC3 two-atom model", ac3},
      {"AC4 randomized oracle equivalence", ac4},
      {"AC5 trace and transform identities", ac5},
      {"AC6 Stieltjes inversion", ac6},
      {"AC7 norm bound on separated models", ac7},
      {"AC8 refinement behavior", ac8},
      {"AC9 CLI contract", ac9},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %-40s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
