#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "rankone/error.hpp"

namespace rankone {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1]. Newton iteration on P_n from the
// Tricomi initial guess; nodes are returned in ascending order.
inline QuadratureRule gauss_legendre(int n) {
  RANKONE_THROW_UNLESS(n >= 1, ErrorCode::InvalidArgument,
                       "gauss_legendre: node count must be >= 1");
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Composite Gauss-Legendre rule: `panels` equal panels on [lo, hi], each
/// carrying an n-point rule.
inline QuadratureRule composite_gauss_legendre(double lo, double hi, int panels,
                                               int nodes_per_panel) {
  RANKONE_THROW_UNLESS(hi > lo, ErrorCode::InvalidArgument,
                       "composite_gauss_legendre: empty interval");
  RANKONE_THROW_UNLESS(panels >= 1, ErrorCode::InvalidArgument,
                       "composite_gauss_legendre: panels must be >= 1");
  const QuadratureRule base = gauss_legendre(nodes_per_panel);
  QuadratureRule out;
  out.nodes.reserve(static_cast<std::size_t>(panels) * nodes_per_panel);
  out.weights.reserve(out.nodes.capacity());
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * h;
    const double mid = a + 0.5 * h;
    for (int i = 0; i < nodes_per_panel; ++i) {
      out.nodes.push_back(mid + 0.5 * h * base.nodes[i]);
      out.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return out;
}

}  // namespace rankone
