// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_DGM_HPP
#define SIMHARNESS_DGM_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simharness/dataset.hpp"
#include "simharness/rng.hpp"

namespace simharness::dgm {

/// Two-arm proportional-hazards Weibull mechanism:
/// h(t | X) = lambda * gamma * t^(gamma-1) * exp(X * theta), with
/// administrative censoring at censor_time (absent = no censoring).
struct SurvivalDgmSpec {
  std::size_t n_obs = 0;
  double lambda = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double allocation_p = 0.5;
  std::optional<double> censor_time;  // nullopt = "none"

  void validate() const;
};

struct NormalDgmSpec {
  std::size_t n_obs = 0;
  double mu = 0.0;
  double sigma = 0.0;

  void validate() const;
};

enum class GridDesign { full_factorial, one_at_a_time, explicit_list };

/// Ordered factor-level declaration plus the expansion design. Levels are
/// numeric; a factor named "censor_time" may also use the sentinel -1 for
/// "none" at the config layer before reaching here.
struct FactorGrid {
  struct Factor {
    std::string name;
    std::vector<double> levels;
  };
  std::vector<Factor> factors;
  GridDesign design = GridDesign::full_factorial;
  std::vector<std::size_t> base_case;                 // one_at_a_time only
  std::vector<std::vector<double>> explicit_cases;    // explicit_list only
};

/// One expanded design point: factor name -> level, in factor order.
using FactorAssignment = std::vector<std::pair<std::string, double>>;

/// Expands a grid into concrete design points. Full factorial iterates the
/// last factor fastest; one-at-a-time yields the base case followed by each
/// factor's non-base levels in declaration order.
std::vector<FactorAssignment> expand_grid(const FactorGrid& grid);

/// Consumes exactly 2 * n_obs uniforms, in (X, U) order per subject.
/// Latent times come from inverting S(t) = exp(-lambda t^gamma e^{X theta}).
SurvivalDataset generate_survival(rng::Generator& g, const SurvivalDgmSpec& spec);

/// Consumes exactly n_obs uniforms.
NumericDataset generate_normal(rng::Generator& g, const NormalDgmSpec& spec);

/// Uniform resampling with replacement; consumes exactly n_obs uniforms.
NumericDataset resample(rng::Generator& g, const NumericDataset& source,
                        std::size_t n_obs);

}  // namespace simharness::dgm

#endif
