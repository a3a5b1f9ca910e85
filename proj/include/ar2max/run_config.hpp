#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ar2max/detail/format.hpp"
#include "ar2max/errors.hpp"
#include "ar2max/model.hpp"
#include "ar2max/rng.hpp"
#include "ar2max/version.hpp"

namespace ar2max {

/// Resolved run parameters shared by every CLI subcommand. Flags override the
/// config file; the full resolved set is echoed into every output artifact.
struct RunConfig {
  double r1 = 0.5;
  double r2 = 0.3;
  double sigma_e = 1.0;
  std::string innovation = "gaussian";   // gaussian | logistic
  std::string init_mode = "auto";        // auto | gaussian-stationary | empirical-burnin
  long burnin = 1000;
  std::vector<double> x_list{3.0};
  std::vector<long long> n_list{};
  int m = 40;
  int spectrum_count = 0;                // 0 = automatic
  double eps = 1e-8;
  long long reps = 1000000;
  std::uint64_t seed = 20240801;
  std::string out;
  std::string format = "csv";            // csv | json

  ARParams make_params() const { return validate_params(r1, r2, sigma_e); }

  /// Innovation law with sd tied to sigma_e (logistic scale = sigma_e*sqrt(3)/pi),
  /// so the Yule-Walker variance formula applies to every law.
  InnovationModel make_innovation() const {
    if (innovation == "gaussian") return gaussian_innovation(sigma_e);
    if (innovation == "logistic") return logistic_innovation(sigma_e * std::sqrt(3.0) / M_PI);
    throw ValidationError("unknown innovation '" + innovation + "' (gaussian|logistic)");
  }

  InitMode resolve_init_mode() const {
    if (init_mode == "gaussian-stationary") return InitMode::GaussianStationary;
    if (init_mode == "empirical-burnin") return InitMode::EmpiricalBurnin;
    if (init_mode == "auto")
      return innovation == "gaussian" ? InitMode::GaussianStationary
                                      : InitMode::EmpiricalBurnin;
    throw ValidationError("unknown init_mode '" + init_mode +
                          "' (auto|gaussian-stationary|empirical-burnin)");
  }

  /// Sample count for the empirical initial law (when used).
  long long law_reps() const { return std::max<long long>(reps, 100000); }

  InitialLaw make_law() const {
    return initial_law(make_params(), make_innovation(), resolve_init_mode(), burnin,
                       law_reps(), seed ^ 0x5bf03635ULL);
  }

  std::vector<std::pair<std::string, std::string>> provenance() const {
    auto join_d = [](const std::vector<double>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + detail::g17(v[i]);
      return s;
    };
    auto join_n = [](const std::vector<long long>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    return {{"version", version_string},
            {"generator", generator_name()},
            {"r1", detail::g17(r1)},
            {"r2", detail::g17(r2)},
            {"sigma_e", detail::g17(sigma_e)},
            {"innovation", innovation},
            {"init_mode", init_mode},
            {"burnin", std::to_string(burnin)},
            {"x", join_d(x_list)},
            {"n", join_n(n_list)},
            {"m", std::to_string(m)},
            {"spectrum_count", std::to_string(spectrum_count)},
            {"eps", detail::g17(eps)},
            {"reps", std::to_string(reps)},
            {"seed", std::to_string(seed)},
            {"format", format}};
  }

  /// Leading '#' comment block carrying the resolved config (CSV artifacts).
  void echo_csv(std::ostream& os) const {
    for (const auto& [k, v] : provenance()) os << "# " << k << '=' << v << '\n';
  }

  nlohmann::ordered_json echo_json() const {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : provenance()) j[k] = v;
    return j;
  }
};

}  // namespace ar2max
