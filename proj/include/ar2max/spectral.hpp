#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ar2max/detail/format.hpp"
#include "ar2max/detail/parallel.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/kernel.hpp"
#include "ar2max/quadrature.hpp"

namespace ar2max {

/// Nystrom discretization of the two-step operator on a grid.
///
/// `matrix` holds the plain rule A[i][j] = w_j * K(z_i, z_j). `action` is the
/// operator actually applied: the kernel is a dipole field in z1 (its
/// z1-integral vanishes identically), with mass along a band that leaves the
/// truncation box, so the out-of-box mass is completed analytically onto the
/// boundary columns. The completion is exact on the operator's invariant
/// class (functions constant beyond the threshold in each coordinate):
///   - z1 > hi1 mass has the closed form gamma_y((z0_j, hi1)) and lands on
///     each z0-row's last z1 node;
///   - z0 > hi0 mass is a 1-D tail quadrature of K, landing on the last z0
///     node of each z1 column;
///   - the doubly-exterior corner integrates gamma along the z0 tail.
/// `readout` is the same completion of the weighted row at y = (x,x).
struct DiscreteOperator {
  QuadratureGrid grid;
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd action;
  Eigen::VectorXd row_at_inf;   // K((x,x), z_j), unweighted
  Eigen::VectorXd readout;      // weighted + tail-completed row at infinity
  Eigen::VectorXd node_weights;
  ARParams params{};
  double x = 0.0;
  std::string innovation_name;
  int inner_rule = 0;
  double eps = 0.0;

  Eigen::Index size() const { return action.rows(); }
};

namespace detail_spectral {

struct TailRule {
  std::vector<double> s;  // z0 tail nodes, s > hi0
  std::vector<double> w;
};

inline TailRule make_tail_rule(const KernelContext& ctx, const Box& box, int n = 64) {
  const double r1 = ctx.params.r1, r2 = ctx.params.r2;
  double len;
  if (r2 > 0.0)
    // delta(s) = y0x - r1*y1x - r2*s must pass below q_lo for every row
    len = std::max(1.0, (ctx.q_hi - (box.lo0 - r1 * box.hi1)) / r2 - box.hi0);
  else
    // alpha2 = y1x - r1*s - r2*z1 leaves the density support at rate r1
    len = std::max(1.0, ((ctx.x - box.lo0) + std::fabs(r2) * (box.hi1 - box.lo1) +
                         (ctx.q_hi - ctx.q_lo)) /
                            r1);
  auto rule = detail::gauss_legendre_unit(n);
  TailRule t;
  t.s.resize(n);
  t.w.resize(n);
  for (int k = 0; k < n; ++k) {
    t.s[k] = box.hi0 + 0.5 * len * (rule.first[k] + 1.0);
    t.w[k] = 0.5 * len * rule.second[k];
  }
  return t;
}

// One weighted, tail-completed operator row for source point y.
// `weighted` has grid.size() entries; `raw` (optional) receives K(y, z_j).
inline void fill_row(const KernelContext& ctx, const QuadratureGrid& grid, const TailRule& tail,
                     const Point& y, double* weighted, double* raw) {
  const int m = grid.m;
  const std::size_t r = grid.size();
  for (std::size_t j = 0; j < r; ++j) {
    const double k = kernel_value(y, grid.nodes[j], ctx);
    if (raw) raw[j] = k;
    weighted[j] = k * grid.weights[j];
  }
  const double hi1 = grid.box.hi1;
  for (int j0 = 0; j0 < m; ++j0) {
    const double mass = gamma_value(y, Point{grid.axis0.nodes[j0], hi1}, ctx);
    weighted[static_cast<std::size_t>(j0) * m + (m - 1)] += grid.axis0.weights[j0] * mass;
  }
  for (int j1 = 0; j1 < m; ++j1) {
    double mass = 0.0;
    for (std::size_t k = 0; k < tail.s.size(); ++k)
      mass += tail.w[k] * kernel_value(y, Point{tail.s[k], grid.axis1.nodes[j1]}, ctx);
    weighted[static_cast<std::size_t>(m - 1) * m + j1] += grid.axis1.weights[j1] * mass;
  }
  double corner = 0.0;
  for (std::size_t k = 0; k < tail.s.size(); ++k)
    corner += tail.w[k] * gamma_value(y, Point{tail.s[k], hi1}, ctx);
  weighted[static_cast<std::size_t>(m - 1) * m + (m - 1)] += corner;
}

}  // namespace detail_spectral

/// Assembles the discrete operator. Cost is O(r^2 * inner_rule) kernel
/// evaluations, parallel over rows. Set keep_plain_matrix = false to skip
/// storing the uncompleted matrix (halves memory for large grids).
inline DiscreteOperator build_operator(const KernelContext& ctx, const QuadratureGrid& grid,
                                       bool keep_plain_matrix = true) {
  const std::size_t r = grid.size();
  DiscreteOperator op;
  op.grid = grid;
  op.params = ctx.params;
  op.x = ctx.x;
  op.innovation_name = ctx.innovation.name;
  op.inner_rule = ctx.inner_rule;
  op.eps = ctx.tail_eps;
  op.node_weights = Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), r);
  op.action.resize(r, r);
  if (keep_plain_matrix) op.matrix.resize(r, r);
  const auto tail = detail_spectral::make_tail_rule(ctx, grid.box);

  detail::parallel_for(r, [&](std::size_t i) {
    std::vector<double> weighted(r), raw(keep_plain_matrix ? r : 0);
    detail_spectral::fill_row(ctx, grid, tail, grid.nodes[i], weighted.data(),
                              keep_plain_matrix ? raw.data() : nullptr);
    for (std::size_t j = 0; j < r; ++j) {
      op.action(i, j) = weighted[j];
      if (keep_plain_matrix) op.matrix(i, j) = raw[j] * grid.weights[j];
    }
  });
  if (!op.action.allFinite()) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        if (!std::isfinite(op.action(i, j)))
          throw NonFiniteEntry("build_operator: non-finite entry at (" + std::to_string(i) +
                               "," + std::to_string(j) + ")");
  }

  op.row_at_inf.resize(r);
  for (std::size_t j = 0; j < r; ++j) op.row_at_inf[j] = kernel_at_infinity(grid.nodes[j], ctx);
  std::vector<double> readout(r);
  detail_spectral::fill_row(ctx, grid, tail, Point{ctx.x, ctx.x}, readout.data(), nullptr);
  op.readout = Eigen::Map<const Eigen::VectorXd>(readout.data(), r);
  if (!op.readout.allFinite()) throw NonFiniteEntry("build_operator: non-finite readout row");
  return op;
}

/// Wraps an explicit matrix as an operator (unit weights); for small
/// closed-form cases and tests.
inline DiscreteOperator operator_from_matrix(Eigen::MatrixXd A) {
  DiscreteOperator op;
  op.node_weights = Eigen::VectorXd::Ones(A.rows());
  op.matrix = A;
  op.action = std::move(A);
  return op;
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

/// Retained eigenpairs of the discrete operator, sorted by descending |lambda|
/// (ties: descending real part, then positive imaginary first). Right and
/// left function values satisfy the weighted biorthonormality
///   sum_m w_m * right(m,j) * conj(left(m,k)) = delta_jk.
struct Spectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right_fns;  // r x J, column j = r_j(z_m)
  Eigen::MatrixXcd left_fns;   // r x J, column j = l_j(z_m)
  Eigen::VectorXd residuals;   // max of right/left residual per pair, scaled by ||A||
  double matrix_norm = 0.0;    // Frobenius norm of the applied operator
  double biorth_defect = 0.0;  // max off-diagonal weighted cross product
  double pair_condition = 0.0; // max_j 1/|l_j^H v_j| before normalization
  int requested = 0;

  int retained() const { return static_cast<int>(eigenvalues.size()); }
};

namespace detail_spectral {

inline bool eig_order(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

struct SortedEig {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  // unit-norm columns
};

inline SortedEig sorted_eig(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, true);
  if (es.info() != Eigen::Success)
    throw NumericalError("eig: dense eigensolver failed to converge");
  const Eigen::VectorXcd vals = es.eigenvalues();
  std::vector<Eigen::Index> idx(vals.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(),
            [&vals](Eigen::Index a, Eigen::Index b) { return eig_order(vals[a], vals[b]); });
  SortedEig out;
  out.values.resize(vals.size());
  out.vectors.resize(vals.size(), vals.size());
  const Eigen::MatrixXcd vecs = es.eigenvectors();
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    out.values[k] = vals[idx[k]];
    out.vectors.col(k) = vecs.col(idx[k]);
  }
  return out;
}

}  // namespace detail_spectral

/// Dense eigendecomposition (Hessenberg-QR via Eigen, backward stable).
/// Left eigenvectors come from the transposed operator; pairs are matched by
/// the shared eigenvalue ordering and normalized to l_j^H v_j = 1, which makes
/// the weighted biorthonormality hold pairwise-exactly.
///
/// Retention: the sorted prefix of at most J pairs that passes the quality
/// gates (residual <= 1e-8 ||A||, |lambda| above the noise floor, left/right
/// eigenvalue match, non-defective pairing), keeping conjugate pairs whole.
/// Throws DefectiveOrIllConditioned when even the leading pair fails (or a
/// retained pair's condition exceeds 1e10).
inline Spectrum eig(const DiscreteOperator& op, int J) {
  const Eigen::Index r = op.size();
  if (J < 1) throw std::invalid_argument("eig: J >= 1 required");
  J = static_cast<int>(std::min<Eigen::Index>(J, r));

  const auto right = detail_spectral::sorted_eig(op.action);
  const auto left = detail_spectral::sorted_eig(op.action.transpose());
  const double norm_a = op.action.norm();
  const double lam1 = std::abs(right.values[0]);
  const double floor_abs = std::max(1e-12, 1e-13 * lam1);
  const double match_tol = std::max(1e-9 * lam1, 1e-14);

  // candidate count: pairs above the noise floor, capped at J (whole pairs)
  int cand = 0;
  while (cand < J && std::abs(right.values[cand]) >= floor_abs) ++cand;
  if (cand > 0 && cand < r && right.values[cand - 1].imag() > 0.0 &&
      right.values[cand] == std::conj(right.values[cand - 1]))
    ++cand;

  // residuals of the candidate prefix, both sides (split re/im products: Eigen
  // does not mix real and complex operands)
  Eigen::MatrixXcd RV(r, cand), LV(r, cand);
  RV.real() = op.action * right.vectors.leftCols(cand).real();
  RV.imag() = op.action * right.vectors.leftCols(cand).imag();
  RV -= right.vectors.leftCols(cand) * right.values.head(cand).asDiagonal();
  LV.real() = op.action.transpose() * left.vectors.leftCols(cand).real();
  LV.imag() = op.action.transpose() * left.vectors.leftCols(cand).imag();
  LV -= left.vectors.leftCols(cand) * left.values.head(cand).asDiagonal();

  int keep = 0;
  double pair_cond = 0.0;
  std::vector<std::complex<double>> dots(cand);
  while (keep < cand) {
    const int j = keep;
    if (std::abs(right.values[j] - left.values[j]) > match_tol) break;
    const double resid =
        std::max(RV.col(j).norm(), LV.col(j).norm()) / std::max(norm_a, 1e-300);
    if (resid > 1e-8) break;
    // Eigen's dot conjugates the left operand: d = l_j^H v_j.
    const std::complex<double> d = left.vectors.col(j).dot(right.vectors.col(j));
    const double cond_j = 1.0 / std::max(std::abs(d), 1e-300);
    if (cond_j > 1e10) break;
    dots[j] = d;
    pair_cond = std::max(pair_cond, cond_j);
    ++keep;
  }
  // never split a conjugate pair
  if (keep > 0 && right.values[keep - 1].imag() != 0.0) {
    const bool partner_included =
        keep >= 2 && right.values[keep - 1] == std::conj(right.values[keep - 2]);
    if (!partner_included) --keep;
  }
  if (keep == 0)
    throw DefectiveOrIllConditioned(
        "eig: leading eigenpair fails quality gates (defective or ill-conditioned spectrum)");

  Spectrum s;
  s.requested = J;
  s.matrix_norm = norm_a;
  s.pair_condition = pair_cond;
  s.eigenvalues = right.values.head(keep);
  s.right_fns = right.vectors.leftCols(keep);
  s.left_fns.resize(r, keep);
  s.residuals.resize(keep);
  for (int j = 0; j < keep; ++j) {
    // scale left so that l_j^H v_j = 1
    const std::complex<double> c = std::conj(1.0 / dots[j]);
    s.left_fns.col(j) = left.vectors.col(j) * c;
    s.residuals[j] =
        std::max(RV.col(j).norm(), LV.col(j).norm()) / std::max(norm_a, 1e-300);
  }
  // store left function values in the weighted convention:
  // l_j(z_m) stored = l_j[m] / w_m, so sum_m w_m r_j conj(l_k) = l_k^H v_j.
  for (Eigen::Index mrow = 0; mrow < r; ++mrow)
    s.left_fns.row(mrow) /= op.node_weights[mrow];

  Eigen::MatrixXcd weighted_right = s.right_fns;
  for (Eigen::Index mrow = 0; mrow < r; ++mrow) weighted_right.row(mrow) *= op.node_weights[mrow];
  Eigen::MatrixXcd cross = s.left_fns.adjoint() * weighted_right;
  cross -= Eigen::MatrixXcd::Identity(keep, keep);
  s.biorth_defect = cross.cwiseAbs().maxCoeff();
  return s;
}

/// r_j(infinity) = lambda_j^{-1} * sum_k w_k K((x,x), z_k) r_j(z_k)
/// (tail-completed readout row).
inline std::complex<double> r_at_infinity(const Spectrum& s, const DiscreteOperator& op, int j) {
  if (j < 0 || j >= s.retained()) throw std::out_of_range("r_at_infinity: index");
  if (std::abs(s.eigenvalues[j]) <= 1e-12)
    throw EigenvalueNearZero("r_at_infinity: |lambda_j| <= 1e-12");
  const std::complex<double> acc = op.readout.cast<std::complex<double>>().dot(s.right_fns.col(j));
  // VectorXcd::dot conjugates the left operand; readout is real so no effect.
  return acc / s.eigenvalues[j];
}

/// B_j(G) = sum_k w_k G(z_k) conj(l_j(z_k)).
inline std::complex<double> weight_B(const Spectrum& s, const Eigen::VectorXd& weights,
                                     const Eigen::VectorXd& g_values, int j) {
  if (j < 0 || j >= s.retained()) throw std::out_of_range("weight_B: index");
  std::complex<double> acc = 0.0;
  for (Eigen::Index k = 0; k < g_values.size(); ++k)
    acc += weights[k] * g_values[k] * std::conj(s.left_fns(k, j));
  return acc;
}

inline std::complex<double> weight_B(const Spectrum& s, const QuadratureGrid& grid,
                                     const std::function<double(Point)>& G, int j) {
  Eigen::VectorXd g(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) g[k] = G(grid.nodes[k]);
  return weight_B(s, Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), grid.size()), g, j);
}

// ---------------------------------------------------------------------------
// Power iteration (independent dominant-eigenvalue route)
// ---------------------------------------------------------------------------

struct PowerResult {
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline PowerResult power_iteration(const Eigen::MatrixXd& A, int max_iter = 2000,
                                   double tol = 1e-13) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(A.rows(), 1.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * std::sin(0.7 * double(i));
  v.normalize();
  PowerResult out;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd av = A * v;
    const double lam = v.dot(av);
    v = av.normalized();
    out.iterations = it;
    out.lambda = lam;
    if (it > 3 && std::fabs(lam - prev) <= tol * std::max(1.0, std::fabs(lam))) {
      out.converged = true;
      break;
    }
    prev = lam;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text dumps
// ---------------------------------------------------------------------------

inline void write_eigen_csv(std::ostream& os, const Spectrum& s) {
  os << "re,im,residual\n";
  for (int j = 0; j < s.retained(); ++j)
    os << detail::g17(s.eigenvalues[j].real()) << ',' << detail::g17(s.eigenvalues[j].imag())
       << ',' << detail::g17(s.residuals[j]) << '\n';
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) os << ',';
      os << detail::g17(a(i, j));
    }
    os << '\n';
  }
}

}  // namespace ar2max
