#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ar2max/detail/format.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/model.hpp"
#include "ar2max/spectral.hpp"

namespace ar2max {

// ---------------------------------------------------------------------------
// Spectral expansion of u_n = P(M_n <= x)
// ---------------------------------------------------------------------------

struct ExpansionTerm {
  std::complex<double> lambda;
  std::complex<double> c_even;  // r_j(inf) * B_j(H)
  std::complex<double> c_odd;   // r_j(inf) * B_j(G1)
};

struct ExpansionDiagnostics {
  double biorth_defect = 0.0;
  double max_residual = 0.0;
  double pair_condition = 0.0;
  double truncation_gap = 0.0;  // |sum c_even*lambda - direct a_1|
  bool truncation_warning = false;
  int retained = 0;
  std::string innovation;
  std::string init_mode;
  int inner_rule = 0;
  double eps = 0.0;
};

/// Per-threshold expansion: u_0 = 1 and u_1 = b0 exactly; for k >= 1
///   u_{2k}   = Re sum_j c_even_j lambda_j^k
///   u_{2k+1} = Re sum_j c_odd_j  lambda_j^k.
/// The odd chain starts at b0 = H(x,inf): the recursion gives G_{2k+1} after k
/// operator applications of the once-clipped starter, so the first spectral
/// power serves n = 3.
struct MaxCdfExpansion {
  ARParams params{};
  double x = 0.0;
  std::vector<ExpansionTerm> terms;
  double b0 = 0.0;
  int multiplicity = 0;             // eigenvalues within 1e-8 of |lambda_1|
  std::complex<double> B_H{};       // cluster sum of c_even
  std::complex<double> B_G1{};      // cluster sum of c_odd
  int grid_m = 0;
  Box box{};
  ExpansionDiagnostics diagnostics;
};

struct UValue {
  double raw;
  double clamped;
};

namespace detail_maxdist {

inline Eigen::VectorXd law_values_at_nodes(const InitialLaw& law, const QuadratureGrid& grid,
                                           bool clip_first, double x) {
  std::vector<Point> q(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    q[k] = grid.nodes[k];
    if (clip_first) q[k][0] = std::min(q[k][0], x);
  }
  const std::vector<double> vals = law.joint_cdf_batch(q);
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
}

inline std::complex<double> term_sum(const std::vector<ExpansionTerm>& terms, bool even, int k) {
  std::complex<double> acc = 0.0;
  for (const auto& t : terms) acc += (even ? t.c_even : t.c_odd) * std::pow(t.lambda, k);
  return acc;
}

}  // namespace detail_maxdist

/// Assembles the full pipeline for one threshold x:
/// truncation box -> split tensor grid -> operator -> eigenpairs -> weights.
/// J = 0 selects the smallest J (whole pairs, capped at 50) whose tail changes
/// u_2 by less than 1e-10.
inline MaxCdfExpansion build_expansion(const ARParams& params, const InnovationModel& innovation,
                                       const InitialLaw& law, double x, int m = 40, int J = 0,
                                       double eps = 1e-8, int inner_rule = 32) {
  if (!std::isfinite(x)) throw std::invalid_argument("build_expansion: x must be finite");
  const Box box = truncation_box(innovation, params, x, eps);
  const QuadratureGrid grid = tensor_grid(m, box, x);
  const KernelContext ctx(params, innovation, Threshold{x}, inner_rule, eps);
  const DiscreteOperator op = build_operator(ctx, grid, /*keep_plain_matrix=*/false);

  const Eigen::VectorXd h = detail_maxdist::law_values_at_nodes(law, grid, false, x);
  const Eigen::VectorXd g1 = detail_maxdist::law_values_at_nodes(law, grid, true, x);

  const bool auto_j = (J <= 0);
  const int j_request = auto_j ? std::min<int>(50, static_cast<int>(grid.size())) : J;
  const Spectrum spec = eig(op, j_request);

  MaxCdfExpansion exp;
  exp.params = params;
  exp.x = x;
  exp.b0 = law.joint_cdf(x, std::numeric_limits<double>::infinity());
  exp.grid_m = m;
  exp.box = box;

  const int retained = spec.retained();
  exp.terms.resize(retained);
  for (int j = 0; j < retained; ++j) {
    const std::complex<double> r_inf = r_at_infinity(spec, op, j);
    exp.terms[j].lambda = spec.eigenvalues[j];
    exp.terms[j].c_even = r_inf * weight_B(spec, op.node_weights, h, j);
    exp.terms[j].c_odd = r_inf * weight_B(spec, op.node_weights, g1, j);
  }

  if (auto_j && retained > 2) {
    // shrink to the smallest whole-pair prefix leaving u_2 within 1e-10
    const std::complex<double> full = detail_maxdist::term_sum(exp.terms, true, 1);
    int j_min = retained;
    std::complex<double> acc = 0.0;
    for (int j = 0; j < retained; ++j) {
      acc += exp.terms[j].c_even * exp.terms[j].lambda;
      const bool pair_split = exp.terms[j].lambda.imag() > 0.0;
      if (!pair_split && std::abs(acc - full) < 1e-10) {
        j_min = j + 1;
        break;
      }
    }
    exp.terms.resize(j_min);
  }

  const double a1_direct = op.readout.dot(h);
  const double a1_spectral = detail_maxdist::term_sum(exp.terms, true, 1).real();
  exp.diagnostics.truncation_gap = std::fabs(a1_spectral - a1_direct);
  exp.diagnostics.truncation_warning = exp.diagnostics.truncation_gap > 1e-6;

  const double lam1 = exp.terms.empty() ? 0.0 : std::abs(exp.terms[0].lambda);
  exp.multiplicity = 0;
  for (const auto& t : exp.terms)
    if (std::abs(t.lambda) >= (1.0 - 1e-8) * lam1) ++exp.multiplicity;
  for (int j = 0; j < exp.multiplicity; ++j) {
    exp.B_H += exp.terms[j].c_even;
    exp.B_G1 += exp.terms[j].c_odd;
  }

  exp.diagnostics.biorth_defect = spec.biorth_defect;
  exp.diagnostics.max_residual = spec.residuals.size() ? spec.residuals.maxCoeff() : 0.0;
  exp.diagnostics.pair_condition = spec.pair_condition;
  exp.diagnostics.retained = retained;
  exp.diagnostics.innovation = innovation.name;
  exp.diagnostics.init_mode = to_string(law.mode);
  exp.diagnostics.inner_rule = inner_rule;
  exp.diagnostics.eps = eps;
  return exp;
}

/// u_n from the expansion. Raw value is authoritative; the clamped companion
/// is for downstream consumers. Conjugate terms cancel exactly, but any
/// imaginary residue above 1e-10 signals an inconsistent spectrum.
inline UValue cdf_at(const MaxCdfExpansion& exp, long long n) {
  if (n < 0) throw std::invalid_argument("cdf_at: n >= 0 required");
  double raw;
  if (n == 0) {
    raw = 1.0;
  } else if (n == 1) {
    raw = exp.b0;
  } else {
    const bool even = (n % 2 == 0);
    const int k = static_cast<int>(even ? n / 2 : (n - 1) / 2);
    const std::complex<double> s = detail_maxdist::term_sum(exp.terms, even, k);
    if (std::fabs(s.imag()) >= 1e-10)
      throw ImaginaryResidueTooLarge("cdf_at: imaginary residue " +
                                     detail::g17(std::fabs(s.imag())) + " at n = " +
                                     std::to_string(n));
    raw = s.real();
  }
  return UValue{raw, std::clamp(raw, 0.0, 1.0)};
}

// ---------------------------------------------------------------------------
// Direct operator-iteration evaluation (independent of the eigendecomposition)
// ---------------------------------------------------------------------------

/// u_n for all n = 0..n_max by iterating the discrete operator on the H and
/// G1 chains; one pass, no spectral information.
inline std::vector<double> cdf_direct_range(const DiscreteOperator& op, const InitialLaw& law,
                                            long long n_max) {
  const Eigen::VectorXd h = detail_maxdist::law_values_at_nodes(law, op.grid, false, op.x);
  const Eigen::VectorXd g1 = detail_maxdist::law_values_at_nodes(law, op.grid, true, op.x);
  std::vector<double> u(static_cast<std::size_t>(n_max) + 1);
  u[0] = 1.0;
  if (n_max >= 1) u[1] = law.joint_cdf(op.x, std::numeric_limits<double>::infinity());
  Eigen::VectorXd ve = h, vo = g1;
  for (long long k = 1; 2 * k <= n_max || 2 * k + 1 <= n_max; ++k) {
    if (2 * k <= n_max) u[static_cast<std::size_t>(2 * k)] = op.readout.dot(ve);
    if (2 * k + 1 <= n_max) u[static_cast<std::size_t>(2 * k + 1)] = op.readout.dot(vo);
    ve = op.action * ve;
    vo = op.action * vo;
  }
  return u;
}

/// Single-n convenience with the spec's call shape; builds the operator.
inline double cdf_direct(const ARParams& params, const InnovationModel& innovation,
                         const InitialLaw& law, double x, long long n,
                         const QuadratureGrid& grid, int inner_rule = 32, double eps = 1e-8) {
  const KernelContext ctx(params, innovation, Threshold{x}, inner_rule, eps);
  const DiscreteOperator op = build_operator(ctx, grid, false);
  return cdf_direct_range(op, law, n)[static_cast<std::size_t>(n)];
}

// ---------------------------------------------------------------------------
// Leading-term decay law
// ---------------------------------------------------------------------------

struct DecayLaw {
  double lambda1;
  double B_H;
  double B_G1;
  int multiplicity;
};

inline DecayLaw decay_law(const MaxCdfExpansion& exp) {
  if (exp.terms.empty()) throw NumericalError("decay_law: empty expansion");
  const std::complex<double> lam1 = exp.terms[0].lambda;
  if (std::fabs(lam1.imag()) > 1e-10)
    throw ComplexLeadingEigenvalue("decay_law: leading eigenvalue has imaginary part " +
                                   detail::g17(lam1.imag()) +
                                   "; geometric form does not apply, report the pair");
  return DecayLaw{lam1.real(), exp.B_H.real(), exp.B_G1.real(), exp.multiplicity};
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json expansion_to_json(const MaxCdfExpansion& exp) {
  nlohmann::ordered_json j;
  j["x"] = exp.x;
  auto pairs = [](const std::vector<ExpansionTerm>& terms, auto pick) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& t : terms) {
      nlohmann::ordered_json e;
      e["re"] = pick(t).real();
      e["im"] = pick(t).imag();
      arr.push_back(e);
    }
    return arr;
  };
  j["lambda"] = pairs(exp.terms, [](const ExpansionTerm& t) { return t.lambda; });
  j["c_even"] = pairs(exp.terms, [](const ExpansionTerm& t) { return t.c_even; });
  j["c_odd"] = pairs(exp.terms, [](const ExpansionTerm& t) { return t.c_odd; });
  j["b0"] = exp.b0;
  j["grid"] = {{"m", exp.grid_m},
               {"box", {exp.box.lo0, exp.box.hi0, exp.box.lo1, exp.box.hi1}}};
  j["diagnostics"] = {{"multiplicity", exp.multiplicity},
                      {"B_H", exp.B_H.real()},
                      {"B_G1", exp.B_G1.real()},
                      {"biorth_defect", exp.diagnostics.biorth_defect},
                      {"max_residual", exp.diagnostics.max_residual},
                      {"pair_condition", exp.diagnostics.pair_condition},
                      {"truncation_gap", exp.diagnostics.truncation_gap},
                      {"truncation_warning", exp.diagnostics.truncation_warning},
                      {"retained", exp.diagnostics.retained},
                      {"innovation", exp.diagnostics.innovation},
                      {"init_mode", exp.diagnostics.init_mode},
                      {"inner_rule", exp.diagnostics.inner_rule},
                      {"eps", exp.diagnostics.eps},
                      {"r1", exp.params.r1},
                      {"r2", exp.params.r2},
                      {"sigma_e", exp.params.sigma_e}};
  return j;
}

}  // namespace ar2max
