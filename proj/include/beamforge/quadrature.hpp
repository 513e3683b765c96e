#pragma once

// Gauss rules from the three-term recurrence (Golub-Welsch). The Jacobi
// matrix is diagonalised with implicit-shift QL, tracking only the first
// row of the eigenvector matrix, which is all the weights need.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "beamforge/core_model.hpp"

namespace beamforge::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * f(nodes[k]);
    return acc;
  }
};

namespace detail {

// diag: n entries, off: n-1 sub-diagonal entries. Returns nodes ascending and
// weights normalised to sum to one.
inline Rule golub_welsch(std::vector<double> d, std::vector<double> off) {
  const std::size_t n = d.size();
  std::vector<double> e(n, 0.0);
  std::copy(off.begin(), off.end(), e.begin());
  std::vector<double> z(n, 0.0);
  z[0] = 1.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > 200) throw NumericError("golub_welsch: QL iteration did not converge");

      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool deflated = false;
      for (std::size_t ii = m; ii-- > l;) {
        const double f = s * e[ii];
        const double b = c * e[ii];
        r = std::hypot(f, g);
        e[ii + 1] = r;
        if (r == 0.0) {
          d[ii + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[ii + 1] - p;
        r = (d[ii] - g) * s + 2.0 * c * b;
        p = s * r;
        d[ii + 1] = g + p;
        g = c * r - b;
        const double zf = z[ii + 1];
        z[ii + 1] = s * z[ii] + c * zf;
        z[ii] = c * z[ii] - s * zf;
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (true);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
  Rule rule;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  for (auto k : order) {
    rule.nodes.push_back(d[k]);
    rule.weights.push_back(z[k] * z[k]);
  }
  return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [a, b]; weights sum to b - a.
inline Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw UsageError("gauss_legendre: n must be >= 1");
  std::vector<double> diag(n, 0.0), off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Rule r = detail::golub_welsch(std::move(diag), std::move(off));
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    r.nodes[k] = mid + half * r.nodes[k];
    r.weights[k] *= (b - a);
  }
  return r;
}

/// n-point generalized Gauss-Laguerre rule for the probability measure
/// t^alpha e^-t / Gamma(alpha + 1) on [0, inf). Normalising the weights to
/// one removes Gamma(alpha + 1), so large alpha cannot overflow.
inline Rule gauss_laguerre(int n, double alpha) {
  if (n < 1) throw UsageError("gauss_laguerre: n must be >= 1");
  if (!(alpha > -1.0)) throw UsageError("gauss_laguerre: alpha must be > -1");
  std::vector<double> diag(n), off(n - 1);
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k * (k + alpha));
  return detail::golub_welsch(std::move(diag), std::move(off));
}

}  // namespace beamforge::quadrature
