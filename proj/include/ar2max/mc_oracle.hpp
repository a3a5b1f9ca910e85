#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ar2max/detail/format.hpp"
#include "ar2max/detail/normal.hpp"
#include "ar2max/detail/parallel.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/maxdist.hpp"
#include "ar2max/model.hpp"
#include "ar2max/rng.hpp"

namespace ar2max {

struct McEstimate {
  long long n;
  double x;
  double p_hat;
  double se;
  long long reps;
  std::uint64_t seed;
};

/// Simulates `reps` stationary AR(2) paths and tallies M_n <= x for every
/// requested (n, x) in a single pass per replication (common random paths
/// across cells). Replication i draws from stream_seed(seed, i), so results
/// are bitwise reproducible regardless of worker count. Output rows are
/// ordered x-major, n ascending.
inline std::vector<McEstimate> simulate_max_cdf(const ARParams& params,
                                                const InnovationModel& innovation,
                                                InitMode law_mode,
                                                std::vector<long long> n_list,
                                                std::vector<double> x_list, long long reps,
                                                std::uint64_t seed, long burnin = 1000) {
  if (reps < 1000) throw std::invalid_argument("simulate_max_cdf: reps >= 1000 required");
  if (n_list.empty() || x_list.empty())
    throw std::invalid_argument("simulate_max_cdf: empty n or x list");
  if (law_mode == InitMode::GaussianStationary && innovation.name != "gaussian")
    throw ModeMismatch("gaussian-stationary initialization requires gaussian innovations");
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  if (n_list.front() < 1) throw std::invalid_argument("simulate_max_cdf: n >= 1 required");

  const StationaryMoments mom = stationary_moments(params);
  const double sd_x = std::sqrt(mom.var_x);
  const double rho = mom.rho1;
  const double cscale = std::sqrt(1.0 - rho * rho);
  const long long n_max = n_list.back();
  const std::size_t cells = n_list.size() * x_list.size();

  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::vector<std::uint64_t>> tallies(workers,
                                                  std::vector<std::uint64_t>(cells, 0));

  detail::parallel_chunks(
      static_cast<std::size_t>(reps),
      [&](std::size_t lo, std::size_t hi, unsigned w) {
        std::vector<std::uint64_t>& tally = tallies[w];
        for (std::size_t rep = lo; rep < hi; ++rep) {
          SplitMix64 rng(stream_seed(seed, rep));
          double xm1, xm2;  // X_0 and X_{-1}
          if (law_mode == InitMode::GaussianStationary) {
            const double z1 = detail::normal_quantile(rng.uniform01());
            const double z2 = detail::normal_quantile(rng.uniform01());
            xm2 = sd_x * z1;
            xm1 = sd_x * (rho * z1 + cscale * z2);
          } else {
            xm1 = xm2 = 0.0;
            for (long i = 0; i < burnin; ++i) {
              const double xi = innovation.sample(rng) + params.r1 * xm1 + params.r2 * xm2;
              xm2 = xm1;
              xm1 = xi;
            }
          }
          double runmax = -std::numeric_limits<double>::infinity();
          std::size_t ni = 0;
          for (long long i = 1; i <= n_max; ++i) {
            const double xi = innovation.sample(rng) + params.r1 * xm1 + params.r2 * xm2;
            runmax = std::max(runmax, xi);
            xm2 = xm1;
            xm1 = xi;
            if (i == n_list[ni]) {
              for (std::size_t xi_idx = 0; xi_idx < x_list.size(); ++xi_idx)
                tally[xi_idx * n_list.size() + ni] += (runmax <= x_list[xi_idx]);
              ++ni;
            }
          }
        }
      },
      workers);

  std::vector<McEstimate> out;
  out.reserve(cells);
  for (std::size_t xi_idx = 0; xi_idx < x_list.size(); ++xi_idx)
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      std::uint64_t c = 0;
      for (unsigned w = 0; w < workers; ++w) c += tallies[w][xi_idx * n_list.size() + ni];
      const double p = static_cast<double>(c) / static_cast<double>(reps);
      out.push_back(McEstimate{n_list[ni], x_list[xi_idx], p,
                               std::sqrt(p * (1.0 - p) / static_cast<double>(reps)), reps, seed});
    }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison against the spectral engine
// ---------------------------------------------------------------------------

struct CompareRow {
  long long n;
  double x;
  double u;       // expansion value (raw)
  double p_hat;
  double se;
  double z;       // (u - p_hat) / se; 0 when se = 0 and values agree exactly
  bool flagged;   // |z| > 4, or inexact agreement at se = 0
};

struct CompareReport {
  std::vector<CompareRow> rows;
  bool all_ok = true;
};

inline CompareReport compare(const MaxCdfExpansion& exp,
                             const std::vector<McEstimate>& estimates) {
  CompareReport rep;
  for (const auto& e : estimates) {
    if (e.x != exp.x)
      throw MismatchedThreshold("compare: estimate at x = " + detail::g17(e.x) +
                                " does not match expansion x = " + detail::g17(exp.x));
    CompareRow row;
    row.n = e.n;
    row.x = e.x;
    row.u = cdf_at(exp, e.n).raw;
    row.p_hat = e.p_hat;
    row.se = e.se;
    if (e.se == 0.0) {
      row.z = (row.u == e.p_hat) ? 0.0 : std::numeric_limits<double>::infinity();
      row.flagged = (row.u != e.p_hat);
    } else {
      row.z = (row.u - e.p_hat) / e.se;
      row.flagged = std::fabs(row.z) > 4.0;
    }
    rep.all_ok = rep.all_ok && !row.flagged;
    rep.rows.push_back(row);
  }
  return rep;
}

inline void write_csv(std::ostream& os, const std::vector<McEstimate>& estimates) {
  os << "n,x,p_hat,se,reps,seed\n";
  for (const auto& e : estimates)
    os << e.n << ',' << detail::g17(e.x) << ',' << detail::g17(e.p_hat) << ','
       << detail::g17(e.se) << ',' << e.reps << ',' << e.seed << '\n';
}

}  // namespace ar2max
