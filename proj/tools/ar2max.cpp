// ar2max: distribution of the running maximum of a stationary AR(2) process.
//
// Subcommands:
//   spectrum  eigenvalues of the discretized two-step operator
//   cdf       u_n = P(M_n <= x) tables / expansion dumps
//   validate  internal consistency checks + Monte Carlo cross-validation
//   tail      leading-eigenvalue decay law
//
// Exit codes: 0 ok, 1 validation-suite failure, 2 bad input, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ar2max/detail/format.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/kernel.hpp"
#include "ar2max/maxdist.hpp"
#include "ar2max/mc_oracle.hpp"
#include "ar2max/model.hpp"
#include "ar2max/quadrature.hpp"
#include "ar2max/rng.hpp"
#include "ar2max/run_config.hpp"
#include "ar2max/spectral.hpp"
#include "ar2max/version.hpp"

namespace {

using namespace ar2max;
using detail::g17;

void add_common_options(CLI::App* sub, RunConfig& cfg, std::string& dump_operator) {
  sub->add_option("--r1", cfg.r1, "AR coefficient r1");
  sub->add_option("--r2", cfg.r2, "AR coefficient r2");
  sub->add_option("--sigma-e,--sigma_e", cfg.sigma_e, "innovation scale (standard deviation)");
  sub->add_option("--innovation", cfg.innovation, "innovation law: gaussian|logistic");
  sub->add_option("--init-mode,--init_mode", cfg.init_mode,
                  "initial law: auto|gaussian-stationary|empirical-burnin");
  sub->add_option("--burnin", cfg.burnin, "burn-in steps for the empirical initial law");
  sub->add_option("--x", cfg.x_list, "threshold(s), comma separated")->delimiter(',');
  sub->add_option("--n", cfg.n_list, "horizon(s) n, comma separated")->delimiter(',');
  sub->add_option("--m", cfg.m, "quadrature nodes per axis (grid has m^2 points)");
  sub->add_option("--spectrum-count,--spectrum_count", cfg.spectrum_count,
                  "eigenpairs to retain (0 = automatic)");
  sub->add_option("--eps", cfg.eps, "tail mass for domain truncation");
  sub->add_option("--reps", cfg.reps, "Monte Carlo replications (0 skips MC checks)");
  sub->add_option("--seed", cfg.seed, "base RNG seed (splitmix64 streams)");
  sub->add_option("--out", cfg.out, "output file path");
  sub->add_option("--format", cfg.format, "output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--dump-operator", dump_operator, "write the Nystrom matrix to a CSV file");
  sub->set_config("--config", "", "key=value config file (flags override)");
}

struct Pipeline {
  ARParams params;
  InnovationModel innovation;
  InitialLaw law;
  Box box;
  QuadratureGrid grid;
  KernelContext ctx;
  DiscreteOperator op;
};

Pipeline build_pipeline(const RunConfig& cfg, double x, bool keep_matrix) {
  ARParams params = cfg.make_params();
  InnovationModel innovation = cfg.make_innovation();
  InitialLaw law = cfg.make_law();
  Box box = truncation_box(innovation, params, x, cfg.eps);
  QuadratureGrid grid = tensor_grid(cfg.m, box, x);
  KernelContext ctx(params, innovation, Threshold{x}, 32, cfg.eps);
  DiscreteOperator op = build_operator(ctx, grid, keep_matrix);
  return Pipeline{std::move(params), std::move(innovation), std::move(law), box,
                  std::move(grid),  std::move(ctx),         std::move(op)};
}

int clip_spectrum_count(const RunConfig& cfg, std::size_t r) {
  int j = cfg.spectrum_count;
  if (j > static_cast<int>(r)) {
    std::cerr << "warning: spectrum count " << j << " exceeds grid size " << r
              << "; clipped\n";
    j = static_cast<int>(r);
  }
  return j;
}

int cmd_spectrum(const RunConfig& cfg, const std::string& dump_operator) {
  const double x = cfg.x_list.empty() ? 3.0 : cfg.x_list.front();
  Pipeline p = build_pipeline(cfg, x, !dump_operator.empty());
  const int j_req = clip_spectrum_count(cfg, p.grid.size());
  Spectrum spec = eig(p.op, j_req <= 0 ? std::min<int>(50, p.grid.size()) : j_req);

  int mult = 0;
  const double lam1 = std::abs(spec.eigenvalues[0]);
  for (int j = 0; j < spec.retained(); ++j)
    if (std::abs(spec.eigenvalues[j]) >= (1.0 - 1e-8) * lam1) ++mult;

  cfg.echo_csv(std::cout);
  std::cout << "# retained=" << spec.retained() << " multiplicity=" << mult
            << " biorth_defect=" << g17(spec.biorth_defect)
            << " pair_condition=" << g17(spec.pair_condition) << '\n';
  std::printf("%4s %24s %24s %14s %12s\n", "j", "re", "im", "|lambda|", "residual");
  for (int j = 0; j < spec.retained(); ++j)
    std::printf("%4d %24.16g %24.16g %14.8g %12.4g\n", j + 1, spec.eigenvalues[j].real(),
                spec.eigenvalues[j].imag(), std::abs(spec.eigenvalues[j]), spec.residuals[j]);

  if (!cfg.out.empty()) {
    std::ofstream os(cfg.out);
    if (!os) throw ValidationError("cannot open output file " + cfg.out);
    cfg.echo_csv(os);
    write_eigen_csv(os, spec);
  }
  if (!dump_operator.empty()) {
    std::ofstream os(dump_operator);
    if (!os) throw ValidationError("cannot open output file " + dump_operator);
    write_matrix_csv(os, p.op.matrix);
  }
  return 0;
}

int cmd_cdf(const RunConfig& cfg) {
  std::vector<long long> ns = cfg.n_list;
  if (ns.empty())
    for (long long n = 0; n <= 50; ++n) ns.push_back(n);

  ARParams params = cfg.make_params();
  InnovationModel innovation = cfg.make_innovation();
  InitialLaw law = cfg.make_law();

  std::vector<MaxCdfExpansion> expansions;
  for (double x : cfg.x_list)
    expansions.push_back(
        build_expansion(params, innovation, law, x, cfg.m, cfg.spectrum_count, cfg.eps));

  cfg.echo_csv(std::cout);
  std::printf("%8s %12s %22s %22s\n", "n", "x", "u_raw", "u_clamped");
  for (const auto& exp : expansions)
    for (long long n : ns) {
      const UValue u = cdf_at(exp, n);
      std::printf("%8lld %12g %22.15g %22.15g\n", n, exp.x, u.raw, u.clamped);
    }

  if (!cfg.out.empty()) {
    std::ofstream os(cfg.out);
    if (!os) throw ValidationError("cannot open output file " + cfg.out);
    if (cfg.format == "json") {
      nlohmann::ordered_json root;
      root["config"] = cfg.echo_json();
      root["expansions"] = nlohmann::ordered_json::array();
      for (const auto& exp : expansions) {
        nlohmann::ordered_json e = expansion_to_json(exp);
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (long long n : ns) {
          const UValue u = cdf_at(exp, n);
          vals.push_back({{"n", n}, {"u_raw", u.raw}, {"u_clamped", u.clamped}});
        }
        e["values"] = std::move(vals);
        root["expansions"].push_back(std::move(e));
      }
      os << root.dump(2) << '\n';
    } else {
      cfg.echo_csv(os);
      os << "n,x,u_raw,u_clamped\n";
      for (const auto& exp : expansions)
        for (long long n : ns) {
          const UValue u = cdf_at(exp, n);
          os << n << ',' << g17(exp.x) << ',' << g17(u.raw) << ',' << g17(u.clamped) << '\n';
        }
    }
  }
  return 0;
}

struct CheckRow {
  std::string name;
  std::string status;  // pass | fail | skipped
  double measured;
  double threshold;
};

int cmd_validate(const RunConfig& cfg) {
  const double x = cfg.x_list.empty() ? 3.0 : cfg.x_list.front();
  Pipeline p = build_pipeline(cfg, x, false);
  std::vector<CheckRow> rows;

  {  // kernel vs -d(gamma)/dz1 by central differences
    SplitMix64 rng(cfg.seed ^ 0x7189ull);
    const double h = 1e-4;
    double worst = 0.0;
    for (int t = 0; t < 60; ++t) {
      auto unif = [&rng, &p](double lo, double hi) {
        return lo + (hi - lo) * rng.uniform01();
      };
      const Point y{unif(p.box.lo0, p.box.hi0), unif(p.box.lo1, p.box.hi1)};
      const Point z{unif(p.box.lo0, p.box.hi0), unif(p.box.lo1, p.box.hi1)};
      const double k = kernel_value(y, z, p.ctx);
      const double fd = (gamma_value(y, Point{z[0], z[1] - h}, p.ctx) -
                         gamma_value(y, Point{z[0], z[1] + h}, p.ctx)) /
                        (2.0 * h);
      worst = std::max(worst, std::fabs(k - fd) / (1.0 + std::fabs(k)));
    }
    rows.push_back({"kernel_gamma_fd", worst <= 1e-5 ? "pass" : "fail", worst, 1e-5});
  }

  MaxCdfExpansion exp = build_expansion(p.params, p.innovation, p.law, x, cfg.m,
                                        static_cast<int>(p.grid.size()), cfg.eps);
  {  // spectral vs direct chains
    const std::vector<double> ud = cdf_direct_range(p.op, p.law, 20);
    double worst = 0.0;
    for (long long n = 0; n <= 20; ++n)
      worst = std::max(worst, std::fabs(cdf_at(exp, n).raw - ud[static_cast<std::size_t>(n)]));
    rows.push_back({"spectral_direct", worst <= 1e-8 ? "pass" : "fail", worst, 1e-8});
  }
  rows.push_back({"biorthonormality",
                  exp.diagnostics.biorth_defect <= 1e-8 ? "pass" : "fail",
                  exp.diagnostics.biorth_defect, 1e-8});
  {  // imaginary residue and monotonicity over n <= 200
    double worst_im = 0.0, worst_mono = 0.0;
    double prev = cdf_at(exp, 0).raw;
    for (long long n = 1; n <= 200; ++n) {
      const bool even = (n % 2 == 0);
      const int k = static_cast<int>(even ? n / 2 : (n - 1) / 2);
      if (n >= 2) {
        std::complex<double> s = 0.0;
        for (const auto& t : exp.terms)
          s += (even ? t.c_even : t.c_odd) * std::pow(t.lambda, k);
        worst_im = std::max(worst_im, std::fabs(s.imag()));
      }
      const double u = cdf_at(exp, n).raw;
      worst_mono = std::max(worst_mono, u - prev);
      prev = u;
    }
    rows.push_back({"imag_residue", worst_im < 1e-10 ? "pass" : "fail", worst_im, 1e-10});
    rows.push_back({"monotone_n", worst_mono <= 1e-9 ? "pass" : "fail", worst_mono, 1e-9});
  }
  if (cfg.reps > 0) {
    const auto est = simulate_max_cdf(p.params, p.innovation, cfg.resolve_init_mode(),
                                      {1, 2, 5, 10, 25, 50}, {x}, cfg.reps, cfg.seed,
                                      cfg.burnin);
    const CompareReport rep = compare(exp, est);
    double worst = 0.0;
    for (const auto& r : rep.rows) worst = std::max(worst, std::fabs(r.z));
    rows.push_back({"mc_agreement", rep.all_ok ? "pass" : "fail", worst, 4.0});
  } else {
    rows.push_back({"mc_agreement", "skipped", 0.0, 4.0});
  }

  bool ok = true;
  cfg.echo_csv(std::cout);
  std::printf("%-20s %-8s %14s %14s\n", "check", "status", "measured", "threshold");
  for (const auto& r : rows) {
    ok = ok && r.status != "fail";
    std::printf("%-20s %-8s %14.6g %14.6g\n", r.name.c_str(), r.status.c_str(), r.measured,
                r.threshold);
  }
  if (!cfg.out.empty()) {
    std::ofstream os(cfg.out);
    if (!os) throw ValidationError("cannot open output file " + cfg.out);
    if (cfg.format == "json") {
      nlohmann::ordered_json root;
      root["config"] = cfg.echo_json();
      root["checks"] = nlohmann::ordered_json::array();
      for (const auto& r : rows)
        root["checks"].push_back({{"check", r.name},
                                  {"status", r.status},
                                  {"measured", r.measured},
                                  {"threshold", r.threshold}});
      os << root.dump(2) << '\n';
    } else {
      cfg.echo_csv(os);
      os << "check,status,measured,threshold\n";
      for (const auto& r : rows)
        os << r.name << ',' << r.status << ',' << g17(r.measured) << ',' << g17(r.threshold)
           << '\n';
    }
  }
  return ok ? 0 : 1;
}

int cmd_tail(const RunConfig& cfg) {
  const double x = cfg.x_list.empty() ? 3.0 : cfg.x_list.front();
  ARParams params = cfg.make_params();
  InnovationModel innovation = cfg.make_innovation();
  InitialLaw law = cfg.make_law();
  MaxCdfExpansion exp =
      build_expansion(params, innovation, law, x, cfg.m, cfg.spectrum_count, cfg.eps);
  const DecayLaw d = decay_law(exp);

  long long n_at = -1;
  for (int k = 1; k <= 400; ++k) {
    const double uk = cdf_at(exp, 2 * k).raw;
    const double uk1 = cdf_at(exp, 2 * (k + 1)).raw;
    if (uk > 0.0 && std::fabs(uk1 / uk - d.lambda1) < 1e-3) {
      n_at = 2 * k;
      break;
    }
  }

  cfg.echo_csv(std::cout);
  std::printf("lambda1        %.15g\n", d.lambda1);
  std::printf("multiplicity   %d\n", d.multiplicity);
  std::printf("B_H            %.15g\n", d.B_H);
  std::printf("B_G1           %.15g\n", d.B_G1);
  std::printf("ratio_n        %lld\n", n_at);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact distribution of the maximum of a stationary AR(2) process"};
  app.set_version_flag("--version", ar2max::version_string);
  app.require_subcommand(1);

  ar2max::RunConfig cfg;
  std::string dump_operator;
  CLI::App* sp = app.add_subcommand("spectrum", "eigenvalues of the discretized operator");
  CLI::App* cd = app.add_subcommand("cdf", "P(M_n <= x) tables and expansion dumps");
  CLI::App* va = app.add_subcommand("validate", "consistency checks and MC cross-validation");
  CLI::App* ta = app.add_subcommand("tail", "leading-eigenvalue decay law");
  for (CLI::App* sub : {sp, cd, va, ta}) add_common_options(sub, cfg, dump_operator);

  try {
    app.parse(argc, argv);
    if (sp->parsed()) return cmd_spectrum(cfg, dump_operator);
    if (cd->parsed()) return cmd_cdf(cfg);
    if (va->parsed()) return cmd_validate(cfg);
    if (ta->parsed()) return cmd_tail(cfg);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ar2max::ValidationError& e) {
    std::cerr << "error (validation): " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (bad input): " << e.what() << '\n';
    return 2;
  } catch (const ar2max::NumericalError& e) {
    std::cerr << "error (numerical): " << e.what() << '\n';
    return 3;
  }
}
