#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rankone/classify.hpp"
#include "rankone/error.hpp"
#include "rankone/model_io.hpp"
#include "rankone/oracle.hpp"
#include "rankone/riccati.hpp"

namespace rankone::cli {

enum ExitCode : int { kPass = 0, kVerificationFailed = 1, kInputError = 2 };

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;

  std::vector<double> points() const {
    std::vector<double> out;
    if (count == 1) out.push_back(start);
    for (int k = 0; count > 1 && k < count; ++k)
      out.push_back(k == count - 1 ? stop : start + (stop - start) * k / (count - 1));
    return out;
  }
};

struct RunConfig {
  std::string model_path;
  std::string command;
  std::optional<double> lambda;
  std::optional<GridSpec> grid;
  std::optional<std::pair<double, double>> interval;
  std::optional<std::pair<int, int>> eps_range;
  std::optional<double> tol;
  std::optional<std::pair<int, int>> depths;
  std::string format = "json";
  std::uint64_t seed = 0;
  std::string probe = "nu";
  std::optional<double> inject_fault;
  unsigned threads = 0;
};

namespace detail {

using json = nlohmann::ordered_json;

[[noreturn]] inline void bad(const std::string& flag, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, flag + ": " + what);
}

inline std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + sep.size();
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(x)) bad(flag, "not a finite number: \"" + s + "\"");
    return x;
  } catch (const std::logic_error&) {
    bad(flag, "not a number: \"" + s + "\"");
  }
}

inline int to_int(const std::string& s, const std::string& flag) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(s, &used);
    if (used != s.size()) bad(flag, "not an integer: \"" + s + "\"");
    return x;
  } catch (const std::logic_error&) {
    bad(flag, "not an integer: \"" + s + "\"");
  }
}

inline GridSpec parse_grid(const std::string& s) {
  const auto parts = split(s, ":");
  if (parts.size() != 3) bad("--grid", "expected start:stop:count");
  GridSpec g{to_double(parts[0], "--grid"), to_double(parts[1], "--grid"), to_int(parts[2], "--grid")};
  if (g.count < 0) bad("--grid", "count must be >= 0");
  if (g.count > 1 && !(g.start < g.stop)) bad("--grid", "need start < stop");
  if (g.count == 1 && g.start > g.stop) bad("--grid", "need start <= stop");
  return g;
}

inline std::pair<double, double> parse_interval(const std::string& s) {
  const auto parts = split(s, ":");
  if (parts.size() != 2) bad("--interval", "expected lo:hi");
  const double lo = to_double(parts[0], "--interval");
  const double hi = to_double(parts[1], "--interval");
  if (!(lo < hi)) bad("--interval", "need lo < hi");
  return {lo, hi};
}

inline std::pair<int, int> parse_eps(const std::string& s) {
  const auto parts = split(s, ":");
  if (parts.size() != 2) bad("--eps", "expected k0:k1");
  const int k0 = to_int(parts[0], "--eps");
  const int k1 = to_int(parts[1], "--eps");
  if (k0 < 0 || k1 - k0 < 2 || k1 > 60) bad("--eps", "need 0 <= k0, k0 + 2 <= k1 <= 60");
  return {k0, k1};
}

inline std::pair<int, int> parse_depths(const std::string& s) {
  const auto parts = split(s, "..");
  if (parts.size() != 2) bad("--depths", "expected d0..d1");
  const int d0 = to_int(parts[0], "--depths");
  const int d1 = to_int(parts[1], "--depths");
  if (d0 < 0 || d1 < d0 || d1 > kMaxCantorDepth) bad("--depths", "need 0 <= d0 <= d1 <= 26");
  return {d0, d1};
}

// Shortest round-trip formatting shared by both output formats.
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return json(x).dump();
}

inline json jnum(double x) {
  if (std::isfinite(x)) return json(x);
  return json(num(x));
}

class Emitter {
 public:
  Emitter(std::ostream& out, std::string format, std::vector<std::string> columns)
      : out_(out), csv_(format == "csv"), columns_(std::move(columns)) {
    if (csv_) {
      for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
      out_ << '\n';
    }
  }

  void emit(const json& rec) {
    if (!csv_) {
      out_ << rec.dump() << '\n';
      return;
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out_ << ',';
      auto it = rec.find(columns_[i]);
      if (it == rec.end() || it->is_null()) continue;
      if (it->is_string()) {
        out_ << it->get<std::string>();
      } else {
        out_ << it->dump();
      }
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  bool csv_;
  std::vector<std::string> columns_;
};

// Work items are independent; results land in their own slot.
template <typename Result, typename Fn>
std::vector<Result> parallel_map(std::size_t n, unsigned threads, Fn fn) {
  std::vector<Result> out(n);
  unsigned t = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  t = static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(n, 1)));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(t);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct Context {
  RunConfig cfg;
  ModelFile file;
  SpectralModel model;
  std::optional<RefinementLadder> ladder;
  std::vector<double> schedule;
  double tol = 0.0;

  explicit Context(RunConfig c, ModelFile f)
      : cfg(std::move(c)), file(std::move(f)), model(file.model) {
    if (model.refinable() && model.coupling_rule().survives_refinement()) {
      std::vector<int> depths;
      if (cfg.depths) {
        for (int d = cfg.depths->first; d <= cfg.depths->second; ++d) depths.push_back(d);
      } else {
        depths = default_depths(model);
      }
      ladder.emplace(model, depths);
      model = ladder->finest();
    } else if (cfg.depths && model.refinable()) {
      bad("--depths", "sampled couplings cannot be re-materialized");
    }
    const auto [k0, k1] = cfg.eps_range.value_or(std::pair{kDefaultScheduleFirst, kDefaultScheduleLast});
    schedule = default_schedule(model.nu(), k0, k1);
    tol = cfg.tol.value_or(default_tolerance(model));
  }

  ClassifyOptions classify_options() const {
    ClassifyOptions o;
    o.tol = tol;
    o.schedule = schedule;
    o.ladder = ladder ? &*ladder : nullptr;
    return o;
  }

  std::vector<double> lambdas() const {
    if (cfg.grid) return cfg.grid->points();
    if (cfg.lambda) return {*cfg.lambda};
    bad("--grid", "classify and scan need --grid or --lambda");
  }

  std::pair<double, double> interval() const {
    return cfg.interval.value_or(eigenvalue_bracket(model));
  }
};

inline json point_record(const Context& ctx, double lambda) {
  json rec;
  rec["lambda"] = lambda;
  try {
    const auto pc = classify_point(ctx.model, lambda, ctx.classify_options());
    const auto& ev = pc.evidence;
    rec["class"] = std::string(to_string(pc.tag));
    rec["re_F"] = jnum(ev.boundary.estimate.real());
    rec["im_F"] = jnum(ev.boundary.estimate.imag());
    rec["g2"] = ev.g2.divergent ? json("divergent") : jnum(ev.g2.value);
    rec["residual"] = jnum(ev.residual);
    if (ev.boundary.divergence_exponent) rec["exponent"] = *ev.boundary.divergence_exponent;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AtomAtLambda) throw;
    const auto bv = boundary_value(ctx.model.nu(), lambda, ctx.schedule, ctx.tol);
    rec["class"] = "AtomAtLambda";
    rec["re_F"] = nullptr;
    rec["im_F"] = nullptr;
    rec["g2"] = "divergent";
    rec["residual"] = nullptr;
    if (bv.divergence_exponent) rec["exponent"] = *bv.divergence_exponent;
  }
  return rec;
}

inline const std::vector<std::string> kPointColumns = {"lambda", "class", "re_F", "im_F",
                                                       "g2", "residual", "exponent"};

inline int cmd_classify(const Context& ctx, std::ostream& out, std::ostream& err) {
  const auto lams = ctx.lambdas();
  auto recs = parallel_map<json>(lams.size(), ctx.cfg.threads,
                                 [&](std::size_t i) { return point_record(ctx, lams[i]); });
  Emitter em(out, ctx.cfg.format, kPointColumns);
  for (const auto& r : recs) {
    if (r["class"] == "AtomAtLambda")
      err << "warning: lambda = " << num(r["lambda"].get<double>()) << " is an atom of nu\n";
    em.emit(r);
  }
  return kPass;
}

inline int cmd_scan(const Context& ctx, std::ostream& out, std::ostream& err) {
  const auto lams = ctx.lambdas();
  const ProbeTarget target = ctx.cfg.probe == "omega" ? ProbeTarget::Omega : ProbeTarget::Nu;
  const auto [k0, k1] = ctx.cfg.eps_range.value_or(std::pair{kDefaultScheduleFirst, kDefaultScheduleLast});
  const auto probe_sched = probe_schedule(ctx.model.nu(), k0, k1);
  auto recs = parallel_map<json>(lams.size(), ctx.cfg.threads, [&](std::size_t i) {
    json rec = point_record(ctx, lams[i]);
    rec.erase("exponent");
    if (rec["class"] != "AtomAtLambda") {
      const auto rep = sc_probe(ctx.model, lams[i], probe_sched, target);
      rec["exponent"] = jnum(rep.exponent);
    }
    return rec;
  });
  err << "note: scan exponents are heuristic scaling fits, not spectral certificates\n";
  Emitter em(out, ctx.cfg.format, kPointColumns);
  for (const auto& r : recs) em.emit(r);
  return kPass;
}

// Oracle eigenvalues coupled to H1 (decoupled atoms are not roots of h).
inline std::optional<std::vector<double>> oracle_eigenvalues(const SpectralModel& model) {
  if (model.base().size() > kOracleMaxAtoms) return std::nullopt;
  const auto A = build_arrowhead(model);
  const auto sys = dense_eig(A);
  std::vector<double> out;
  const Eigen::Index last = static_cast<Eigen::Index>(A.atoms());
  for (std::size_t k = 0; k < sys.values.size(); ++k)
    if (std::abs(sys.vectors(last, static_cast<Eigen::Index>(k))) > 1e-12) out.push_back(sys.values[k]);
  return out;
}

inline int cmd_eigs(const Context& ctx, std::ostream& out, std::ostream& err) {
  const auto [lo, hi] = ctx.interval();
  const auto eigs = find_eigenvalues(ctx.model, lo, hi);
  std::optional<std::vector<double>> oracle = oracle_eigenvalues(ctx.model);
  if (oracle) {
    std::erase_if(*oracle, [lo, hi](double x) { return x < lo || x > hi; });
  } else {
    err << "warning: model exceeds the oracle cap; no dense comparison\n";
  }
  const auto [a, b] = ctx.model.nu().hull();
  const double match_tol = 1e-10 * std::max(1.0, b - a);
  bool ok = true;
  if (oracle && oracle->size() != eigs.size()) {
    ok = false;
    err << "eigenvalue count " << eigs.size() << " differs from oracle count " << oracle->size()
        << '\n';
  }
  Emitter em(out, ctx.cfg.format, {"lambda", "oracle", "delta"});
  for (std::size_t k = 0; k < eigs.size(); ++k) {
    json rec;
    rec["lambda"] = eigs[k];
    if (oracle && oracle->size() == eigs.size()) {
      const double d = std::abs(eigs[k] - (*oracle)[k]);
      rec["oracle"] = (*oracle)[k];
      rec["delta"] = d;
      if (d > match_tol) ok = false;
    } else {
      rec["oracle"] = nullptr;
      rec["delta"] = nullptr;
    }
    em.emit(rec);
  }
  return ok ? kPass : kVerificationFailed;
}

inline constexpr std::size_t kIsolationMaxAtoms = 512;

inline int cmd_verify(const Context& ctx, std::ostream& out, std::ostream& err) {
  const SpectralModel& model = ctx.model;
  json cert;
  cert["model"] = ctx.file.name;
  cert["tol"] = kRiccatiTol;
  json warnings = json::array();
  bool pass = true;

  std::vector<double> lams;
  if (ctx.cfg.lambda) {
    lams = {*ctx.cfg.lambda};
  } else {
    if (model.base().size() > kOracleMaxAtoms && !ctx.cfg.interval)
      bad("--lambda", "models above 5000 atoms need --lambda or --interval for verify");
    const auto [lo, hi] = ctx.interval();
    lams = find_eigenvalues(model, lo, hi);
  }

  const auto A = build_arrowhead(model);
  const auto copts = ctx.classify_options();
  // distance to the nearest other bounded solution, small models only (O(n^2) per point)
  std::vector<double> spectrum;
  if (model.base().size() <= kIsolationMaxAtoms) {
    const auto [blo, bhi] = eigenvalue_bracket(model);
    spectrum = find_eigenvalues(model, blo, bhi);
  }
  json points = json::array();
  for (double lam : lams) {
    json rec;
    rec["lambda"] = lam;
    PointTag tag;
    try {
      tag = classify_point(model, lam, copts).tag;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AtomAtLambda) throw;
      rec["class"] = "AtomAtLambda";
      rec["verdict"] = "not a candidate";
      pass = false;
      points.push_back(rec);
      continue;
    }
    rec["class"] = std::string(to_string(tag));
    const auto norm = x_lambda_norm(model, lam, ctx.ladder ? &*ctx.ladder : nullptr);
    rec["norm_or_unbounded"] = norm.bounded ? json(norm.norm) : json("unbounded");

    auto X = x_lambda(model, lam);
    if (ctx.cfg.inject_fault) X = perturbed_functional(A, X, *ctx.cfg.inject_fault);
    const auto tests = default_test_vectors(A, lam, ctx.cfg.seed);
    auto gc = verify_functional(A, X, tests, kRiccatiTol);
    const bool candidate = tag == PointTag::PurePoint || tag == PointTag::SingularContinuousCandidate;
    rec["max_residual"] = jnum(gc.max_residual);
    rec["max_abs_residual"] = jnum(gc.max_abs_residual);
    rec["invariance_defect"] = jnum(gc.invariance_defect);
    bool ok = candidate && gc.verdict == Verdict::Solution && gc.defect_verdict == Verdict::Solution;
    if (tag == PointTag::PurePoint) {
      const auto ce = complementary_eigenvector(model, lam, copts);
      rec["eigvec_check"] = {{"residual", jnum(ce.eigen_residual)},
                             {"orthogonality", jnum(ce.orthogonality)},
                             {"passed", ce.passed}};
      ok = ok && ce.passed;
      if (!spectrum.empty()) rec["isolation_distance"] = jnum(isolation_distance(model, lam, spectrum));
    }
    if (tag == PointTag::SingularContinuousCandidate && ctx.ladder) {
      const auto rep = refinement_blowup(*ctx.ladder, lam);
      json depths = json::array(), norms = json::array(), hres = json::array();
      for (std::size_t k = 0; k < rep.depths.size(); ++k) {
        depths.push_back(rep.depths[k]);
        norms.push_back(jnum(rep.norms[k]));
        hres.push_back(jnum(rep.secular_residuals[k]));
      }
      rec["refinement"] = {{"depths", depths}, {"norms", norms},
                           {"secular_residuals", hres}, {"verdict", rep.verdict}};
      if (rep.verdict == "non-closable-indication") {
        warnings.push_back("lambda " + num(lam) +
                           ": norm growth under refinement indicates a non-closable functional; "
                           "finite-depth evidence only, not a certificate");
      }
    }
    if (!candidate) {
      rec["verdict"] = std::string(to_string(Verdict::NotACandidate));
    } else {
      rec["verdict"] = ok ? "pass" : "fail";
    }
    pass = pass && ok;
    points.push_back(rec);
  }
  cert["points"] = points;

  if (ctx.file.gap) {
    const double d = *ctx.file.gap;
    double actual = INFINITY;
    for (double mu : model.base().points()) actual = std::min(actual, std::abs(mu - model.a1()));
    if (d > actual * (1.0 + 1e-12)) {
      bad("gap", "declared gap " + num(d) + " exceeds dist(supp m, a1) = " + num(actual));
    }
    const double vnorm = std::sqrt(model.coupling_norm_sq());
    const auto k = kmm_bound(d, vnorm);
    json kj = {{"d", d}, {"v_norm", vnorm}, {"c_pi", k.c_pi}, {"applicable", k.applicable},
               {"delta_V", jnum(k.delta_V)}, {"bound", jnum(k.bound)}};
    if (k.applicable) {
      const auto all = find_eigenvalues(model, eigenvalue_bracket(model).first,
                                        eigenvalue_bracket(model).second);
      double best = INFINITY;
      for (double lam : all) {
        const double g = inverse_square_sum(model.nu(), lam);
        best = std::min(best, std::sqrt(g / (1.0 + g)));
      }
      kj["min_graph_angle"] = jnum(best);
      kj["passed"] = best <= k.bound;
      pass = pass && best <= k.bound;
    }
    cert["norm_bound"] = kj;
  }
  cert["warnings"] = warnings;
  cert["verdict"] = pass ? "pass" : "fail";
  out << cert.dump() << '\n';
  for (const auto& w : warnings) err << "warning: " << w.get<std::string>() << '\n';
  return pass ? kPass : kVerificationFailed;
}

}  // namespace detail

/// Entry point shared by the tool and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank-one off-diagonal perturbations: classification and Riccati verification"};
  RunConfig cfg;
  std::string grid, eps, depths, interval;
  std::optional<double> lambda, tol, fault;
  app.add_option("--model", cfg.model_path, "model file (JSON)")->required();
  app.add_option("--cmd", cfg.command, "classify | eigs | verify | scan")
      ->required()
      ->check(CLI::IsMember({"classify", "eigs", "verify", "scan"}));
  app.add_option("--lambda", lambda, "single spectral parameter");
  app.add_option("--grid", grid, "start:stop:count");
  app.add_option("--interval", interval, "lo:hi for eigs and verify");
  app.add_option("--eps", eps, "k0:k1, eps_k = width * 2^-k");
  app.add_option("--tol", tol, "classification tolerance");
  app.add_option("--depths", depths, "d0..d1 refinement depths");
  app.add_option("--format", cfg.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", cfg.seed, "seed for random test vectors");
  app.add_option("--probe", cfg.probe, "scan probe target: nu | omega")
      ->check(CLI::IsMember({"nu", "omega"}));
  app.add_option("--inject-fault", fault, "verify a perturbed functional (control)");
  app.add_option("--threads", cfg.threads, "worker threads for grid commands (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    cfg.lambda = lambda;
    cfg.tol = tol;
    cfg.inject_fault = fault;
    if (lambda && !std::isfinite(*lambda)) detail::bad("--lambda", "must be finite");
    if (tol && !(*tol > 0.0)) detail::bad("--tol", "must be > 0");
    if (fault && !(*fault > 0.0)) detail::bad("--inject-fault", "must be > 0");
    if (!grid.empty()) cfg.grid = detail::parse_grid(grid);
    if (!eps.empty()) cfg.eps_range = detail::parse_eps(eps);
    if (!depths.empty()) cfg.depths = detail::parse_depths(depths);
    if (!interval.empty()) cfg.interval = detail::parse_interval(interval);

    detail::Context ctx(cfg, load_model(cfg.model_path));
    if (cfg.command == "classify") return detail::cmd_classify(ctx, out, err);
    if (cfg.command == "scan") return detail::cmd_scan(ctx, out, err);
    if (cfg.command == "eigs") return detail::cmd_eigs(ctx, out, err);
    return detail::cmd_verify(ctx, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool input = e.code() == ErrorCode::ParseError || e.code() == ErrorCode::InvalidArgument;
    return input ? kInputError : kVerificationFailed;
  }
}

}  // namespace rankone::cli
