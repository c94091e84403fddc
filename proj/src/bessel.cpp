// bessel.cpp
#include "qisac/bessel.hpp"

#include <algorithm>
#include <cmath>

namespace qisac {
namespace {

// Power series J_n(x) = sum_m (-1)^m / (m! (m+n)!) (x/2)^(2m+n).
// Safe in double precision only while the largest term stays moderate,
// so it is used for |x| <= 12 (max term ~1e3 there).
double series_jn(int n, double x) {
  const double half = 0.5 * x;
  double term = 1.0;
  for (int i = 1; i <= n; ++i) term *= half / static_cast<double>(i);
  double sum = term;
  const double x2 = -half * half;
  for (int m = 1; m < 80; ++m) {
    term *= x2 / (static_cast<double>(m) * static_cast<double>(m + n));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-30)) break;
  }
  return sum;
}

// Miller's algorithm: run J_{k-1} = (2k/x) J_k - J_{k+1} downward from an
// index well above both n and x, then fix the arbitrary scale with the
// identity J_0(x) + 2 * sum_{m>=1} J_{2m}(x) = 1.
double miller_jn(int n, double x) {
  int start = static_cast<int>(x + 1.5 * std::sqrt(40.0 * x)) + 20;
  start = std::max(start, n + 20);
  if (start % 2) ++start;

  double above = 0.0;    // unnormalized J_{k+1}
  double cur = 1e-301;   // unnormalized J_k, k = start
  double jn = (start == n) ? cur : 0.0;
  double even_sum = cur; // accumulates sum of J_{2m}, m >= 1 (start is even)
  for (int k = start; k >= 1; --k) {
    const double below = (2.0 * k / x) * cur - above; // J_{k-1}
    above = cur;
    cur = below;
    const int idx = k - 1;
    if (idx == n) jn = cur;
    if (idx >= 2 && idx % 2 == 0) even_sum += cur;
    if (std::abs(cur) > 1e250) { // rescale; only ratios matter
      above *= 1e-250;
      cur *= 1e-250;
      even_sum *= 1e-250;
      jn *= 1e-250;
    }
  }
  const double norm = cur + 2.0 * even_sum; // cur holds unnormalized J_0
  return jn / norm;
}

}  // namespace

double bessel_j(int order, double x) {
  if (x < 0.0) {
    const double v = bessel_j(order, -x);
    return (order % 2 == 0) ? v : -v;
  }
  if (x == 0.0) return order == 0 ? 1.0 : 0.0;
  if (x <= 12.0) return series_jn(order, x);
  return miller_jn(order, x);
}

}  // namespace qisac
