#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "exwkb/errors.hpp"

namespace exwkb {

using cplx = std::complex<double>;

namespace detail {

inline cplx horner(const std::vector<cplx>& c, cplx x) {
  cplx acc{};
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

inline cplx horner_derivative(const std::vector<cplx>& c, cplx x) {
  cplx acc{};
  for (std::size_t k = c.size(); k-- > 1;) acc = acc * x + c[k] * static_cast<double>(k);
  return acc;
}

inline std::vector<cplx> trimmed(std::vector<cplx> c) {
  while (!c.empty() && c.back() == cplx{}) c.pop_back();
  return c;
}

}  // namespace detail

/// Aberth-Ehrlich refinement of all roots from the given guesses.
inline std::vector<cplx> polish_roots(const std::vector<cplx>& coeffs, std::vector<cplx> z,
                                      int max_iter = 60) {
  const auto c = detail::trimmed(coeffs);
  const std::size_t n = z.size();
  for (int it = 0; it < max_iter; ++it) {
    double max_step = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const cplx p = detail::horner(c, z[k]);
      const cplx dp = detail::horner_derivative(c, z[k]);
      if (p == cplx{}) continue;
      const cplx ratio = p / dp;
      cplx sum{};
      for (std::size_t j = 0; j < n; ++j)
        if (j != k && z[k] != z[j]) sum += 1.0 / (z[k] - z[j]);
      const cplx step = ratio / (1.0 - ratio * sum);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step));
      scale = std::max(scale, std::abs(z[k]));
    }
    if (max_step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale)) break;
  }
  return z;
}

/// All complex roots of sum_k c_k x^k (coefficients low-to-high), via the
/// companion matrix followed by simultaneous polishing.
inline std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs) {
  const auto c = detail::trimmed(coeffs);
  if (c.empty()) throw numeric_error("polynomial_roots: zero polynomial");
  const std::size_t n = c.size() - 1;
  if (n == 0) return {};
  if (n == 1) return {-c[0] / c[1]};
  if (n == 2) {
    const cplx a = c[2], b = c[1], cc = c[0];
    const cplx disc = std::sqrt(b * b - 4.0 * a * cc);
    const cplx q = -0.5 * (b + (std::real(std::conj(b) * disc) >= 0.0 ? disc : -disc));
    if (q == cplx{}) return {cplx{}, cplx{}};
    return {q / a, cc / q};
  }
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  for (std::size_t i = 0; i < n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -c[i] / c[n];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  std::vector<cplx> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
  return polish_roots(c, std::move(z), 8);
}

/// Minimal pairwise distance among the points (inf for fewer than two).
inline double min_separation(const std::vector<cplx>& z) {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) s = std::min(s, std::abs(z[i] - z[j]));
  return s;
}

}  // namespace exwkb
