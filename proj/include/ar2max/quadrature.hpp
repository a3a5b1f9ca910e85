#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ar2max/detail/gauss.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/model.hpp"

namespace ar2max {

struct Box {
  double lo0, hi0, lo1, hi1;
  double area() const { return (hi0 - lo0) * (hi1 - lo1); }
};

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule mapped to [a,b]; exact for polynomials of degree <= 2m-1.
inline Rule1D gauss_legendre_1d(int m, double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidInterval("gauss_legendre_1d: need finite a < b");
  auto unit = detail::gauss_legendre_unit(m);
  Rule1D r;
  r.nodes.resize(m);
  r.weights.resize(m);
  const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
  for (int i = 0; i < m; ++i) {
    r.nodes[i] = mid + hw * unit.first[i];
    r.weights[i] = hw * unit.second[i];
  }
  return r;
}

/// Composite axis rule: Gauss-Legendre panels [a,split] and [split,b] with node
/// counts proportional to panel length (at least 4 each). Functions in this
/// problem have a derivative kink at the threshold; putting a panel edge there
/// keeps the tensor rule spectrally accurate. Falls back to one panel when the
/// split lies outside (a,b).
inline Rule1D composite_axis(int m, double a, double b, double split) {
  if (!(split > a && split < b) || m < 8) return gauss_legendre_1d(m, a, b);
  int mlo = static_cast<int>(std::lround(m * (split - a) / (b - a)));
  mlo = std::max(4, std::min(m - 4, mlo));
  Rule1D lo = gauss_legendre_1d(mlo, a, split);
  Rule1D hi = gauss_legendre_1d(m - mlo, split, b);
  lo.nodes.insert(lo.nodes.end(), hi.nodes.begin(), hi.nodes.end());
  lo.weights.insert(lo.weights.end(), hi.weights.begin(), hi.weights.end());
  return lo;
}

/// Truncation box for integrals over R^2: [-c*sd_X, max(x, c*sd_X)]^2 where c
/// is the standardized innovation (1-eps)-quantile (equals the stationary
/// marginal quantile for gaussian innovations, conservative otherwise).
/// Neglected stationary mass outside the box is <= 4*eps.
inline Box truncation_box(const InnovationModel& innovation, const ARParams& params, double x,
                          double eps) {
  if (!(eps > 0.0 && eps < 1e-2))
    throw std::invalid_argument("truncation_box: eps in (0, 1e-2) required");
  const double sd_x = std::sqrt(stationary_moments(params).var_x);
  const double c = innovation.tail_quantile(1.0 - eps) / innovation.sd;
  const double a = -c * sd_x;
  const double b = std::max(x, c * sd_x);
  return Box{a, b, a, b};
}

// ---------------------------------------------------------------------------
// Tensor-product grid over a box
// ---------------------------------------------------------------------------

/// m^2 nodes (row-major: index i = i0*m + i1, axis-0 major) with product
/// weights. Weights sum to the box area.
struct QuadratureGrid {
  int m = 0;
  Box box{};
  Rule1D axis0, axis1;
  std::vector<Point> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

inline constexpr int default_grid_cap = 10000;

/// Optional `split` places a panel edge at an interior threshold on both axes.
inline QuadratureGrid tensor_grid(int m, const Box& box, double split = std::nan(""),
                                  int cap = default_grid_cap) {
  if (m < 2) throw std::invalid_argument("tensor_grid: m >= 2 required");
  if (static_cast<long long>(m) * m > cap)
    throw GridTooLarge("tensor_grid: m^2 exceeds node cap");
  QuadratureGrid g;
  g.m = m;
  g.box = box;
  const bool use_split = std::isfinite(split);
  g.axis0 = use_split ? composite_axis(m, box.lo0, box.hi0, split)
                      : gauss_legendre_1d(m, box.lo0, box.hi0);
  g.axis1 = use_split ? composite_axis(m, box.lo1, box.hi1, split)
                      : gauss_legendre_1d(m, box.lo1, box.hi1);
  g.nodes.resize(static_cast<std::size_t>(m) * m);
  g.weights.resize(g.nodes.size());
  for (int i0 = 0; i0 < m; ++i0)
    for (int i1 = 0; i1 < m; ++i1) {
      const std::size_t k = static_cast<std::size_t>(i0) * m + i1;
      g.nodes[k] = Point{g.axis0.nodes[i0], g.axis1.nodes[i1]};
      g.weights[k] = g.axis0.weights[i0] * g.axis1.weights[i1];
    }
  return g;
}

inline double integrate(const QuadratureGrid& grid, const std::function<double(Point)>& fn) {
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) acc += grid.weights[k] * fn(grid.nodes[k]);
  return acc;
}

}  // namespace ar2max
