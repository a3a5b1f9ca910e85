#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ar2max/detail/gauss.hpp"
#include "ar2max/detail/normal.hpp"
#include "ar2max/detail/parallel.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/rng.hpp"

namespace ar2max {

using Point = std::array<double, 2>;

// ---------------------------------------------------------------------------
// Process parameters
// ---------------------------------------------------------------------------

/// Coefficients of  X_i = e_i + r1*X_{i-1} + r2*X_{i-2}  plus innovation scale.
/// Only constructible through validate_params.
struct ARParams {
  double r1;
  double r2;
  double sigma_e;
};

/// Checks the method's sign condition (r1 > 0, r1^2 + r2 > 0) and the
/// stationarity triangle (r1 + r2 < 1, r2 - r1 < 1, |r2| < 1).
inline ARParams validate_params(double r1, double r2, double sigma_e) {
  if (!std::isfinite(r1) || !std::isfinite(r2) || !std::isfinite(sigma_e) || sigma_e <= 0.0)
    throw std::invalid_argument("validate_params: inputs must be finite, sigma_e > 0");
  if (!(r1 > 0.0) || !(r1 * r1 + r2 > 0.0))
    throw SignConditionViolated(
        "sign condition violated: need r1 > 0 and r1^2 + r2 > 0 (method not applicable)");
  if (!(r1 + r2 < 1.0) || !(r2 - r1 < 1.0) || !(std::fabs(r2) < 1.0))
    throw NonStationary("non-stationary parameters: need r1+r2 < 1, r2-r1 < 1, |r2| < 1");
  return ARParams{r1, r2, sigma_e};
}

// ---------------------------------------------------------------------------
// Innovation law
// ---------------------------------------------------------------------------

/// A continuous innovation law: distribution function, density, density
/// derivative, quantile function, and a seeded sampler (inverse-CDF draw).
struct InnovationModel {
  std::string name;
  double sd;  // standard deviation of the law
  std::function<double(double)> cdf;
  std::function<double(double)> pdf;
  std::function<double(double)> pdf_deriv;
  std::function<double(double)> tail_quantile;

  double sample(SplitMix64& rng) const { return tail_quantile(rng.uniform01()); }
};

inline InnovationModel gaussian_innovation(double sigma_e) {
  if (!(sigma_e > 0.0) || !std::isfinite(sigma_e))
    throw std::invalid_argument("gaussian_innovation: sigma_e > 0 required");
  InnovationModel m;
  m.name = "gaussian";
  m.sd = sigma_e;
  m.cdf = [sigma_e](double t) { return detail::normal_cdf(t / sigma_e); };
  m.pdf = [sigma_e](double t) { return detail::normal_pdf(t / sigma_e) / sigma_e; };
  m.pdf_deriv = [sigma_e](double t) {
    return -t / (sigma_e * sigma_e) * detail::normal_pdf(t / sigma_e) / sigma_e;
  };
  m.tail_quantile = [sigma_e](double p) { return sigma_e * detail::normal_quantile(p); };
  return m;
}

/// Logistic law with scale parameter s (sd = s*pi/sqrt(3), pdf(0) = 1/(4s)).
inline InnovationModel logistic_innovation(double scale_s) {
  if (!(scale_s > 0.0) || !std::isfinite(scale_s))
    throw std::invalid_argument("logistic_innovation: scale_s > 0 required");
  InnovationModel m;
  m.name = "logistic";
  m.sd = scale_s * M_PI / std::sqrt(3.0);
  m.cdf = [scale_s](double t) { return 1.0 / (1.0 + std::exp(-t / scale_s)); };
  m.pdf = [scale_s](double t) {
    const double F = 1.0 / (1.0 + std::exp(-t / scale_s));
    return F * (1.0 - F) / scale_s;
  };
  m.pdf_deriv = [scale_s](double t) {
    const double F = 1.0 / (1.0 + std::exp(-t / scale_s));
    return F * (1.0 - F) * (1.0 - 2.0 * F) / (scale_s * scale_s);
  };
  m.tail_quantile = [scale_s](double p) { return scale_s * std::log(p / (1.0 - p)); };
  return m;
}

// ---------------------------------------------------------------------------
// Stationary moments (Yule-Walker)
// ---------------------------------------------------------------------------

struct StationaryMoments {
  double var_x;
  double rho1;
  double rho2;
};

inline StationaryMoments stationary_moments(const ARParams& p) {
  const double denom = (1.0 + p.r2) * ((1.0 - p.r2) * (1.0 - p.r2) - p.r1 * p.r1);
  const double var_x = p.sigma_e * p.sigma_e * (1.0 - p.r2) / denom;
  const double rho1 = p.r1 / (1.0 - p.r2);
  const double rho2 = p.r2 + p.r1 * rho1;
  return {var_x, rho1, rho2};
}

// ---------------------------------------------------------------------------
// Bivariate normal CDF by conditioning quadrature
// ---------------------------------------------------------------------------

/// P(U <= y0, V <= y1) for (U,V) centered bivariate normal, common sd, corr rho.
/// 64-point Gauss-Legendre over the conditioning variable, absolute error
/// target 1e-8 on the 8.5-sigma truncated range.
inline double binormal_cdf(double y0, double y1, double sd, double rho) {
  static const auto rule = detail::gauss_legendre_unit(64);
  const double lo = -8.5;
  const double hi = std::min(y1 / sd, 8.5);
  if (!(hi > lo)) return 0.0;
  if (y0 == -std::numeric_limits<double>::infinity()) return 0.0;
  const double cscale = std::sqrt(1.0 - rho * rho);
  const double mid = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double t = mid + hw * rule.first[k];
    const double cond = (y0 == std::numeric_limits<double>::infinity())
                            ? 1.0
                            : detail::normal_cdf((y0 / sd - rho * t) / cscale);
    acc += rule.second[k] * detail::normal_pdf(t) * cond;
  }
  return hw * acc;
}

// ---------------------------------------------------------------------------
// Empirical bivariate CDF
// ---------------------------------------------------------------------------

/// Plain (unsmoothed) empirical joint CDF of a point sample. Single queries
/// scan a prefix; batch queries use one Fenwick sweep, O((n+q) log n).
class EmpiricalCdf2D {
 public:
  explicit EmpiricalCdf2D(std::vector<Point> pts) : n_(pts.size()) {
    std::sort(pts.begin(), pts.end(),
              [](const Point& a, const Point& b) { return a[0] < b[0]; });
    s0_.resize(n_);
    s1_by_s0_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      s0_[i] = pts[i][0];
      s1_by_s0_[i] = pts[i][1];
    }
    s1_sorted_ = s1_by_s0_;
    std::sort(s1_sorted_.begin(), s1_sorted_.end());
    rank_.resize(n_);
    std::vector<std::size_t> order(n_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
      return s1_by_s0_[a] < s1_by_s0_[b];
    });
    for (std::size_t r = 0; r < n_; ++r) rank_[order[r]] = r;
  }

  std::size_t size() const { return n_; }

  double eval(double y0, double y1) const {
    const std::size_t p =
        std::upper_bound(s0_.begin(), s0_.end(), y0) - s0_.begin();
    std::size_t c = 0;
    for (std::size_t i = 0; i < p; ++i) c += (s1_by_s0_[i] <= y1);
    return static_cast<double>(c) / static_cast<double>(n_);
  }

  std::vector<double> eval_batch(const std::vector<Point>& queries) const {
    const std::size_t q = queries.size();
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&queries](std::size_t a, std::size_t b) {
      return queries[a][0] < queries[b][0];
    });
    std::vector<std::uint32_t> fen(n_ + 1, 0);
    auto fen_add = [&fen, this](std::size_t pos) {
      for (std::size_t i = pos + 1; i <= n_; i += i & (~i + 1)) ++fen[i];
    };
    auto fen_prefix = [&fen](std::size_t cnt) {
      std::uint64_t s = 0;
      for (std::size_t i = cnt; i > 0; i -= i & (~i + 1)) s += fen[i];
      return s;
    };
    std::vector<double> out(q);
    std::size_t inserted = 0;
    for (std::size_t oi = 0; oi < q; ++oi) {
      const Point& qp = queries[order[oi]];
      while (inserted < n_ && s0_[inserted] <= qp[0]) fen_add(rank_[inserted++]);
      const std::size_t ub =
          std::upper_bound(s1_sorted_.begin(), s1_sorted_.end(), qp[1]) - s1_sorted_.begin();
      out[order[oi]] = static_cast<double>(fen_prefix(ub)) / static_cast<double>(n_);
    }
    return out;
  }

 private:
  std::size_t n_;
  std::vector<double> s0_, s1_by_s0_, s1_sorted_;
  std::vector<std::size_t> rank_;
};

// ---------------------------------------------------------------------------
// Initial state law H(y0, y1) = P(X_0 <= y0, X_{-1} <= y1)
// ---------------------------------------------------------------------------

enum class InitMode { GaussianStationary, EmpiricalBurnin };

inline const char* to_string(InitMode m) {
  return m == InitMode::GaussianStationary ? "gaussian-stationary" : "empirical-burnin";
}

struct InitialLaw {
  InitMode mode;
  double var_x;  // stationary variance (Yule-Walker)
  double rho1;   // lag-1 correlation
  std::function<double(double, double)> joint_cdf;
  std::shared_ptr<const EmpiricalCdf2D> empirical;  // null in gaussian mode

  std::vector<double> joint_cdf_batch(const std::vector<Point>& q) const {
    if (empirical) return empirical->eval_batch(q);
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = joint_cdf(q[i][0], q[i][1]);
    return out;
  }
};

/// Simulates `reps` independent stationary pairs (X_0, X_{-1}), each from a
/// fresh chain burnt in from the zero state. Stream seeds derive per
/// replication, so the result is independent of worker count.
inline std::vector<Point> simulate_initial_pairs(const ARParams& params,
                                                 const InnovationModel& innovation,
                                                 long burnin_steps, long reps,
                                                 std::uint64_t seed) {
  std::vector<Point> pairs(static_cast<std::size_t>(reps));
  detail::parallel_chunks(
      static_cast<std::size_t>(reps),
      [&](std::size_t lo, std::size_t hi, unsigned) {
        for (std::size_t rep = lo; rep < hi; ++rep) {
          SplitMix64 rng(stream_seed(seed, rep));
          double xm1 = 0.0, xm2 = 0.0;
          for (long i = 0; i < burnin_steps; ++i) {
            const double xi = innovation.sample(rng) + params.r1 * xm1 + params.r2 * xm2;
            xm2 = xm1;
            xm1 = xi;
          }
          pairs[rep] = Point{xm1, xm2};  // (X_0, X_{-1})
        }
      });
  return pairs;
}

inline InitialLaw initial_law(const ARParams& params, const InnovationModel& innovation,
                              InitMode mode, long burnin_steps = 1000, long reps = 200000,
                              std::uint64_t seed = 1) {
  const StationaryMoments mom = stationary_moments(params);
  InitialLaw law;
  law.mode = mode;
  law.var_x = mom.var_x;
  law.rho1 = mom.rho1;
  if (mode == InitMode::GaussianStationary) {
    if (innovation.name != "gaussian")
      throw ModeMismatch("gaussian-stationary initial law requires gaussian innovations");
    const double sd = std::sqrt(mom.var_x);
    const double rho = mom.rho1;
    law.joint_cdf = [sd, rho](double y0, double y1) { return binormal_cdf(y0, y1, sd, rho); };
  } else {
    if (reps < 1) throw std::invalid_argument("initial_law: reps >= 1 required");
    auto emp = std::make_shared<EmpiricalCdf2D>(
        simulate_initial_pairs(params, innovation, burnin_steps, reps, seed));
    law.empirical = emp;
    law.joint_cdf = [emp](double y0, double y1) { return emp->eval(y0, y1); };
  }
  return law;
}

// ---------------------------------------------------------------------------
// Threshold-clipped starters  G1(y) = H(min(y0,x), y1),  G2 fully clipped
// ---------------------------------------------------------------------------

struct ClippedInitial {
  std::function<double(double, double)> g1;
  std::function<double(double, double)> g2;
};

inline ClippedInitial clipped_initial(const InitialLaw& law, double x) {
  auto H = law.joint_cdf;
  return ClippedInitial{
      [H, x](double y0, double y1) { return H(std::min(y0, x), y1); },
      [H, x](double y0, double y1) { return H(std::min(y0, x), std::min(y1, x)); }};
}

}  // namespace ar2max
