#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ar2max/detail/gauss.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/model.hpp"

namespace ar2max {

struct Threshold {
  double x;
};

/// Frozen evaluation context for the two-step transition kernel: process
/// parameters, innovation law, threshold, and the cached inner quadrature
/// rule. Immutable; kernel evaluation is pure and thread-safe.
struct KernelContext {
  ARParams params;
  InnovationModel innovation;
  double x;
  int inner_rule;
  double tail_eps;

  std::vector<double> unit_nodes, unit_weights;  // inner rule on [-1,1]
  double q_lo, q_hi;  // innovation eps-quantile cutoffs for the w0 integral

  KernelContext(const ARParams& p, InnovationModel inn, Threshold th, int inner = 32,
                double eps = 1e-8)
      : params(validate_params(p.r1, p.r2, p.sigma_e)),
        innovation(std::move(inn)),
        x(th.x),
        inner_rule(inner),
        tail_eps(eps) {
    if (!std::isfinite(x)) throw std::invalid_argument("KernelContext: threshold must be finite");
    if (inner_rule < 8) throw std::invalid_argument("KernelContext: inner_rule >= 8 required");
    if (!(tail_eps > 0.0 && tail_eps < 1e-2))
      throw std::invalid_argument("KernelContext: tail_eps in (0, 1e-2) required");
    auto rule = detail::gauss_legendre_unit(inner_rule);
    unit_nodes = std::move(rule.first);
    unit_weights = std::move(rule.second);
    q_lo = innovation.tail_quantile(tail_eps);
    q_hi = innovation.tail_quantile(1.0 - tail_eps);
  }
};

inline Point clip(const Point& y, double x) {
  return Point{std::min(y[0], x), std::min(y[1], x)};
}

// ---------------------------------------------------------------------------
// One-step-pair geometry
// ---------------------------------------------------------------------------

/// The two candidate bounds whose minimum drives the two-step recursion:
///   g1 = (y0x - e0 - r1*e1 - r1*r2*z1) / (r1^2 + r2)
///   g2 = (y1x - e1 - r2*z1) / r1
struct GBounds {
  double g1, g2;
  double min() const { return std::min(g1, g2); }
};

inline GBounds g_min(double z1, double e1, double e0, const Point& y, const KernelContext& ctx) {
  const double r1 = ctx.params.r1, r2 = ctx.params.r2;
  const Point yc = clip(y, ctx.x);
  return GBounds{(yc[0] - e0 - r1 * e1 - r1 * r2 * z1) / (r1 * r1 + r2),
                 (yc[1] - e1 - r2 * z1) / r1};
}

/// Scalar geometry entering the kernel:
///   delta  = y0x - r1*y1x - r2*z0            (w0 region boundary)
///   beta   = (y0x - r1*y1x - w0) / r2        (same boundary in z0 form)
///   c      = alpha1 = [y0x - (r1^2+r2)*z0 - r1*r2*z1 - w0] / r1
///   alpha2 = y1x - r1*z0 - r2*z1
///   h      = [(r1^2+r2)*y1x - r1*y0x + r1*e0 - r2^2*z1] / r2  (branch switch in e1, e0 = w0)
struct Geometry {
  double delta, beta, c, alpha1, alpha2, h;
};

inline Geometry geometry(const Point& y, const Point& z, double w0, const KernelContext& ctx) {
  const double r1 = ctx.params.r1, r2 = ctx.params.r2;
  if (r2 == 0.0) throw BetaUndefined("geometry: beta and h undefined at r2 = 0");
  const Point yc = clip(y, ctx.x);
  Geometry g;
  g.delta = yc[0] - r1 * yc[1] - r2 * z[0];
  g.beta = (yc[0] - r1 * yc[1] - w0) / r2;
  g.alpha1 = (yc[0] - (r1 * r1 + r2) * z[0] - r1 * r2 * z[1] - w0) / r1;
  g.c = g.alpha1;
  g.alpha2 = yc[1] - r1 * z[0] - r2 * z[1];
  g.h = ((r1 * r1 + r2) * yc[1] - r1 * yc[0] + r1 * w0 - r2 * r2 * z[1]) / r2;
  return g;
}

// ---------------------------------------------------------------------------
// gamma and the kernel K = -d(gamma)/d(z1)
// ---------------------------------------------------------------------------

namespace detail_kernel {

// Inner Gauss-Legendre sum of fn(alpha1(w0)) * f(w0) over w0 in
// (max(delta, q_lo), q_hi). The w0 region is the upper side of delta: solving
// the branch geometry for the first bound places its density mass there
// (uniformly in the sign of r2), and the change of variables confirms
// alpha1(delta) = alpha2. Empty region => 0.
template <typename F>
inline double inner_integral(const KernelContext& ctx, double delta, double base, const F& fn) {
  const double a = std::max(delta, ctx.q_lo);
  const double b = ctx.q_hi;
  if (!(b > a)) return 0.0;
  const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
  const double inv_r1 = 1.0 / ctx.params.r1;
  double acc = 0.0;
  for (int k = 0; k < ctx.inner_rule; ++k) {
    const double w0 = mid + hw * ctx.unit_nodes[k];
    acc += ctx.unit_weights[k] * fn((base - w0) * inv_r1) * ctx.innovation.pdf(w0);
  }
  return hw * acc;
}

}  // namespace detail_kernel

struct GammaParts {
  double gamma1, gamma2, value;
};

/// gamma_y(z) = (r1 + r2/r1) * int f(alpha1) f(w0) dw0  +  r1 * f(alpha2) F(delta).
/// K(y,z) below is exactly -d(gamma)/d(z1) (the inner rule and region match).
inline GammaParts gamma_parts(const Point& y, const Point& z, const KernelContext& ctx) {
  const double r1 = ctx.params.r1, r2 = ctx.params.r2;
  const Point yc = clip(y, ctx.x);
  const double delta = yc[0] - r1 * yc[1] - r2 * z[0];
  const double alpha2 = yc[1] - r1 * z[0] - r2 * z[1];
  const double base = yc[0] - (r1 * r1 + r2) * z[0] - r1 * r2 * z[1];
  GammaParts out;
  out.gamma1 = detail_kernel::inner_integral(ctx, delta, base,
                                             [&ctx](double t) { return ctx.innovation.pdf(t); });
  const double Fdelta = ctx.innovation.cdf(delta);
  out.gamma2 = (Fdelta > 0.0) ? ctx.innovation.pdf(alpha2) * Fdelta : 0.0;
  out.value = (r1 + r2 / r1) * out.gamma1 + r1 * out.gamma2;
  return out;
}

inline double gamma_value(const Point& y, const Point& z, const KernelContext& ctx) {
  return gamma_parts(y, z, ctx).value;
}

/// Fredholm kernel of the two-step operator.
inline double kernel_value(const Point& y, const Point& z, const KernelContext& ctx) {
  const double r1 = ctx.params.r1, r2 = ctx.params.r2;
  const Point yc = clip(y, ctx.x);
  const double delta = yc[0] - r1 * yc[1] - r2 * z[0];
  const double alpha2 = yc[1] - r1 * z[0] - r2 * z[1];
  const double base = yc[0] - (r1 * r1 + r2) * z[0] - r1 * r2 * z[1];
  const double t1 = detail_kernel::inner_integral(
      ctx, delta, base, [&ctx](double t) { return ctx.innovation.pdf_deriv(t); });
  const double Fdelta = ctx.innovation.cdf(delta);
  const double t2 = (Fdelta > 0.0) ? Fdelta * ctx.innovation.pdf_deriv(alpha2) : 0.0;
  return (r1 + r2 / r1) * r2 * t1 + r1 * r2 * t2;
}

/// K((x,x), z): the readout row, since clip((inf,inf), x) = (x,x).
inline double kernel_at_infinity(const Point& z, const KernelContext& ctx) {
  return kernel_value(Point{ctx.x, ctx.x}, z, ctx);
}

}  // namespace ar2max
