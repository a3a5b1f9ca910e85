#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ar2max::detail {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_m.
// Convergence criterion: node update below 1e-14 (values good to ~1e-15;
// bit-exact reproducibility across platforms is not promised).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int m) {
  if (m < 1) throw std::invalid_argument("gauss_legendre: m >= 1 required");
  std::vector<double> t(m), w(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= m; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = m * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-14) break;
    }
    t[i] = -z;
    t[m - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[m - 1 - i] = w[i];
  }
  if (m % 2 == 1) t[m / 2] = 0.0;
  return {std::move(t), std::move(w)};
}

}  // namespace ar2max::detail
