#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace cvf::testing {

/// Relative difference with a small absolute floor so that gradients that are
/// zero up to rounding do not dominate.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of f with respect to x[i].
inline double central_difference(const std::function<double()>& f, double& x, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double fp = f();
  x = saved - h;
  const double fm = f();
  x = saved;
  return (fp - fm) / (2.0 * h);
}

/// Taylor series expm with scaling and squaring, for square row-major matrices.
inline std::vector<double> expm_taylor(const std::vector<double>& a, std::size_t n, double t) {
  double norm = 0.0;
  for (double v : a) norm = std::max(norm, std::abs(v * t));
  int squarings = 0;
  while (norm > 0.125) {
    norm *= 0.5;
    ++squarings;
  }
  const double scale = t / std::ldexp(1.0, squarings);
  auto mul = [n](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) z[i * n + j] += x[i * n + k] * y[k * n + j];
    return z;
  };
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n * n; ++i) m[i] = a[i] * scale;
  std::vector<double> result(n * n, 0.0), term(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) result[i * n + i] = term[i * n + i] = 1.0;
  for (int k = 1; k <= 30; ++k) {
    term = mul(term, m);
    for (double& v : term) v /= k;
    for (std::size_t i = 0; i < n * n; ++i) result[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s) result = mul(result, result);
  return result;
}

}  // namespace cvf::testing
