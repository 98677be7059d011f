#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankone/error.hpp"
#include "rankone/measure.hpp"
#include "rankone/spectral_model.hpp"

// Model file format (JSON):
//
//   {
//     "a1": <number>,
//     "measure": <measure>,
//     "v": {"type": "constant", "value": <complex>}
//        | {"type": "samples", "values": [<complex>, ...]},   one per atom
//     "gap": <number>           optional, declared dist(spec A0, a1) > 0
//     "name": <string>          optional
//   }
//
//   <measure> = {"type": "atomic", "points": [...], "weights": [...]}
//             | {"type": "density", "interval": [lo, hi], "density": <density>,
//                "panels": 64, "nodes_per_panel": 64}
//             | {"type": "cantor", "interval": [0, 1], "ratio": 1/3, "p": 0.5, "depth": 16}
//             | {"type": "mixture", "components": [{"coefficient": c, "measure": <measure>}, ...]}
//
//   <density> = "uniform"     (normalized, 1/(hi - lo))
//             | "semicircle"  (normalized Wigner semicircle on [lo, hi])
//             | {"polynomial": [c0, c1, ...]}   sum_k c_k x^k, must be >= 0
//
//   <complex> = number | [re, im] | {"re": x, "im": y}
//
// Every parse error names the offending field, e.g. "measure.points[2]".

namespace rankone {

struct ModelFile {
  SpectralModel model;
  std::optional<double> gap;
  std::string name;
};

namespace io {

using json = nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, path + ": " + what);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline const json& field(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing required field");
  return *it;
}

inline void allow_keys(const json& obj, const std::string& path, std::set<std::string> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!keys.contains(it.key())) fail(join(path, it.key()), "unknown field");
  }
}

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], index(path, i)));
  return out;
}

inline cplx complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (j.is_array()) {
    if (j.size() != 2) fail(path, "complex as array needs exactly [re, im]");
    return {number(j[0], index(path, 0)), number(j[1], index(path, 1))};
  }
  if (j.is_object()) {
    allow_keys(j, path, {"re", "im"});
    const double re = j.contains("re") ? number(j["re"], join(path, "re")) : 0.0;
    const double im = j.contains("im") ? number(j["im"], join(path, "im")) : 0.0;
    return {re, im};
  }
  fail(path, "expected a number, [re, im] or {\"re\", \"im\"}");
}

inline std::pair<double, double> interval(const json& obj, const std::string& path,
                                          std::pair<double, double> fallback,
                                          bool required) {
  if (!obj.contains("interval")) {
    if (required) fail(join(path, "interval"), "missing required field");
    return fallback;
  }
  const std::string p = join(path, "interval");
  const auto v = numbers(obj["interval"], p);
  if (v.size() != 2) fail(p, "expected [lo, hi]");
  if (!(v[0] < v[1])) fail(p, "need lo < hi");
  return {v[0], v[1]};
}

inline Measure parse_measure(const json& j, const std::string& path);

inline std::function<double(double)> parse_density(const json& j, const std::string& path,
                                                   double lo, double hi, std::string& label) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "uniform") {
      label = "uniform";
      const double inv = 1.0 / (hi - lo);
      return [inv](double) { return inv; };
    }
    if (name == "semicircle") {
      label = "semicircle";
      const double c = 0.5 * (lo + hi);
      const double r = 0.5 * (hi - lo);
      const double k = 2.0 / (std::numbers::pi * r * r);
      return [c, r, k](double x) {
        const double t = r * r - (x - c) * (x - c);
        return t > 0.0 ? k * std::sqrt(t) : 0.0;
      };
    }
    fail(path, "unknown density \"" + name + "\" (expected uniform, semicircle or {polynomial})");
  }
  if (j.is_object()) {
    allow_keys(j, path, {"polynomial"});
    const auto coef = numbers(field(j, path, "polynomial"), join(path, "polynomial"));
    if (coef.empty()) fail(join(path, "polynomial"), "needs at least one coefficient");
    label = "polynomial";
    return [coef](double x) {
      double s = 0.0;
      for (auto it = coef.rbegin(); it != coef.rend(); ++it) s = s * x + *it;
      return s;
    };
  }
  fail(path, "expected a density name or {\"polynomial\": [...]}");
}

inline Measure parse_measure(const json& j, const std::string& path) {
  expect_object(j, path);
  const json& type_j = field(j, path, "type");
  if (!type_j.is_string()) fail(join(path, "type"), "expected a string");
  const std::string type = type_j.get<std::string>();
  try {
    if (type == "atomic") {
      allow_keys(j, path, {"type", "points", "weights"});
      auto pts = numbers(field(j, path, "points"), join(path, "points"));
      auto wts = numbers(field(j, path, "weights"), join(path, "weights"));
      if (pts.empty()) fail(join(path, "points"), "needs at least one point");
      if (pts.size() != wts.size())
        fail(join(path, "weights"), "expected " + std::to_string(pts.size()) + " weights");
      for (std::size_t i = 0; i < wts.size(); ++i)
        if (!(wts[i] > 0.0)) fail(index(join(path, "weights"), i), "must be > 0");
      return Measure::atomic(std::move(pts), std::move(wts));
    }
    if (type == "density") {
      allow_keys(j, path, {"type", "interval", "density", "panels", "nodes_per_panel"});
      const auto [lo, hi] = interval(j, path, {0.0, 1.0}, true);
      DensitySpec spec;
      spec.lo = lo;
      spec.hi = hi;
      spec.density = parse_density(field(j, path, "density"), join(path, "density"), lo, hi, spec.label);
      if (j.contains("panels")) {
        spec.panels = integer(j["panels"], join(path, "panels"));
        if (spec.panels < 1 || spec.panels > (1 << 24)) fail(join(path, "panels"), "out of range");
      }
      if (j.contains("nodes_per_panel")) {
        spec.nodes_per_panel = integer(j["nodes_per_panel"], join(path, "nodes_per_panel"));
        if (spec.nodes_per_panel < 1 || spec.nodes_per_panel > 1024)
          fail(join(path, "nodes_per_panel"), "out of range");
      }
      return Measure::density(std::move(spec));
    }
    if (type == "cantor") {
      allow_keys(j, path, {"type", "interval", "ratio", "p", "depth"});
      const auto [lo, hi] = interval(j, path, {0.0, 1.0}, false);
      CantorSpec spec;
      spec.lo = lo;
      spec.hi = hi;
      if (j.contains("ratio")) {
        spec.ratio = number(j["ratio"], join(path, "ratio"));
        if (!(spec.ratio > 0.0 && spec.ratio < 0.5)) fail(join(path, "ratio"), "must lie in (0, 1/2)");
      }
      if (j.contains("p")) {
        spec.p = number(j["p"], join(path, "p"));
        if (!(spec.p > 0.0 && spec.p < 1.0)) fail(join(path, "p"), "must lie in (0, 1)");
      }
      if (j.contains("depth")) {
        spec.depth = integer(j["depth"], join(path, "depth"));
        if (spec.depth < 0 || spec.depth > kMaxCantorDepth)
          fail(join(path, "depth"), "must lie in [0, " + std::to_string(kMaxCantorDepth) + "]");
      }
      return Measure::cantor(spec);
    }
    if (type == "mixture") {
      allow_keys(j, path, {"type", "components"});
      const std::string cp = join(path, "components");
      const json& comps = field(j, path, "components");
      if (!comps.is_array() || comps.empty()) fail(cp, "expected a nonempty array");
      std::vector<std::pair<double, Measure>> terms;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string ip = index(cp, i);
        expect_object(comps[i], ip);
        allow_keys(comps[i], ip, {"coefficient", "measure"});
        const double c = number(field(comps[i], ip, "coefficient"), join(ip, "coefficient"));
        if (!(c > 0.0)) fail(join(ip, "coefficient"), "must be > 0");
        terms.emplace_back(c, parse_measure(field(comps[i], ip, "measure"), join(ip, "measure")));
      }
      return Measure::mixture(std::move(terms));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    fail(path, e.what());
  }
  fail(join(path, "type"), "unknown measure type \"" + type + "\"");
}

inline Coupling parse_coupling(const json& j, const std::string& path) {
  expect_object(j, path);
  const json& type_j = field(j, path, "type");
  if (!type_j.is_string()) fail(join(path, "type"), "expected a string");
  const std::string type = type_j.get<std::string>();
  if (type == "constant") {
    allow_keys(j, path, {"type", "value"});
    return Coupling::constant(complex_value(field(j, path, "value"), join(path, "value")));
  }
  if (type == "samples") {
    allow_keys(j, path, {"type", "values"});
    const std::string vp = join(path, "values");
    const json& vals = field(j, path, "values");
    if (!vals.is_array()) fail(vp, "expected an array");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < vals.size(); ++i) out.push_back(complex_value(vals[i], index(vp, i)));
    return Coupling::samples(std::move(out));
  }
  fail(join(path, "type"), "unknown coupling type \"" + type + "\" (expected constant or samples)");
}

}  // namespace io

inline ModelFile parse_model(const nlohmann::json& root) {
  using namespace io;
  expect_object(root, "");
  allow_keys(root, "", {"a1", "measure", "v", "gap", "name"});
  const double a1 = number(field(root, "", "a1"), "a1");
  Measure m = parse_measure(field(root, "", "measure"), "measure");
  Coupling v = parse_coupling(field(root, "", "v"), "v");
  std::optional<double> gap;
  if (root.contains("gap")) {
    gap = number(root["gap"], "gap");
    if (!(*gap > 0.0)) fail("gap", "must be > 0");
  }
  std::string name;
  if (root.contains("name")) {
    if (!root["name"].is_string()) fail("name", "expected a string");
    name = root["name"].get<std::string>();
  }
  try {
    return {SpectralModel(std::move(m), std::move(v), a1), gap, name};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::AllWeightsZero) fail("v", "coupling vanishes on every atom");
    fail("v", e.what());
  }
}

inline ModelFile parse_model_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    io::fail("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_model(root);
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open model file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_text(ss.str());
}

}  // namespace rankone
