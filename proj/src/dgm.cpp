// SPDX-License-Identifier: Apache-2.0
#include "simharness/dgm.hpp"

#include <algorithm>
#include <cmath>

#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

namespace simharness::dgm {

void SurvivalDgmSpec::validate() const {
  if (n_obs == 0)
    throw Error(ErrorCode::invalid_parameter, "survival dgm: n_obs must be positive");
  if (!(lambda > 0.0))
    throw Error(ErrorCode::invalid_parameter, "survival dgm: lambda must be positive");
  if (!(gamma > 0.0))
    throw Error(ErrorCode::invalid_parameter, "survival dgm: gamma must be positive");
  if (!(allocation_p > 0.0 && allocation_p < 1.0))
    throw Error(ErrorCode::invalid_parameter,
                "survival dgm: allocation_p must lie strictly in (0,1)");
  if (!std::isfinite(theta))
    throw Error(ErrorCode::invalid_parameter, "survival dgm: theta must be finite");
  if (censor_time && !(*censor_time > 0.0))
    throw Error(ErrorCode::invalid_parameter,
                "survival dgm: censor_time must be positive or \"none\"");
}

void NormalDgmSpec::validate() const {
  if (n_obs == 0)
    throw Error(ErrorCode::invalid_parameter, "normal dgm: n_obs must be positive");
  if (!(sigma > 0.0))
    throw Error(ErrorCode::invalid_parameter, "normal dgm: sigma must be positive");
  if (!std::isfinite(mu))
    throw Error(ErrorCode::invalid_parameter, "normal dgm: mu must be finite");
}

std::vector<FactorAssignment> expand_grid(const FactorGrid& grid) {
  if (grid.factors.empty())
    throw Error(ErrorCode::invalid_parameter, "factor grid has no factors");
  for (const auto& f : grid.factors)
    if (f.levels.empty())
      throw Error(ErrorCode::invalid_parameter,
                  "factor \"" + f.name + "\" has no levels");

  std::vector<FactorAssignment> out;
  const std::size_t k = grid.factors.size();

  switch (grid.design) {
    case GridDesign::full_factorial: {
      std::vector<std::size_t> idx(k, 0);
      for (;;) {
        FactorAssignment a;
        a.reserve(k);
        for (std::size_t j = 0; j < k; ++j)
          a.emplace_back(grid.factors[j].name, grid.factors[j].levels[idx[j]]);
        out.push_back(std::move(a));
        // last factor varies fastest
        std::size_t j = k;
        while (j > 0) {
          --j;
          if (++idx[j] < grid.factors[j].levels.size()) break;
          idx[j] = 0;
          if (j == 0) return out;
        }
      }
    }
    case GridDesign::one_at_a_time: {
      if (grid.base_case.size() != k)
        throw Error(ErrorCode::missing_base_case,
                    "one_at_a_time design requires a base_case index per factor");
      for (std::size_t j = 0; j < k; ++j)
        if (grid.base_case[j] >= grid.factors[j].levels.size())
          throw Error(ErrorCode::invalid_parameter,
                      "base_case index out of range for factor \"" +
                          grid.factors[j].name + "\"");
      auto base = [&] {
        FactorAssignment a;
        for (std::size_t j = 0; j < k; ++j)
          a.emplace_back(grid.factors[j].name,
                         grid.factors[j].levels[grid.base_case[j]]);
        return a;
      }();
      out.push_back(base);
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = 0; l < grid.factors[j].levels.size(); ++l) {
          if (l == grid.base_case[j]) continue;
          FactorAssignment a = base;
          a[j].second = grid.factors[j].levels[l];
          out.push_back(std::move(a));
        }
      }
      return out;
    }
    case GridDesign::explicit_list: {
      if (grid.explicit_cases.empty())
        throw Error(ErrorCode::invalid_parameter, "explicit_list design has no cases");
      for (const auto& c : grid.explicit_cases) {
        if (c.size() != k)
          throw Error(ErrorCode::invalid_parameter,
                      "explicit case must assign every factor");
        FactorAssignment a;
        for (std::size_t j = 0; j < k; ++j) {
          const auto& lv = grid.factors[j].levels;
          if (std::find(lv.begin(), lv.end(), c[j]) == lv.end())
            throw Error(ErrorCode::invalid_parameter,
                        "explicit case uses a level not declared for factor \"" +
                            grid.factors[j].name + "\"");
          a.emplace_back(grid.factors[j].name, c[j]);
        }
        out.push_back(std::move(a));
      }
      return out;
    }
  }
  throw Error(ErrorCode::invalid_parameter, "unknown grid design");
}

SurvivalDataset generate_survival(rng::Generator& g, const SurvivalDgmSpec& spec) {
  spec.validate();
  SurvivalDataset d;
  d.subjects.resize(spec.n_obs);
  const double inv_gamma = 1.0 / spec.gamma;
  for (auto& subj : d.subjects) {
    subj.x = rng::draw_bernoulli(g, spec.allocation_p);
    const double u = rng::draw_uniform(g);
    const double rate = spec.lambda * std::exp(subj.x * spec.theta);
    const double latent = std::pow(-std::log(u) / rate, inv_gamma);
    if (spec.censor_time && latent > *spec.censor_time) {
      subj.time = *spec.censor_time;
      subj.event = 0;
    } else {
      subj.time = latent;
      subj.event = 1;
    }
  }
  return d;
}

NumericDataset generate_normal(rng::Generator& g, const NormalDgmSpec& spec) {
  spec.validate();
  NumericDataset d;
  d.y.resize(spec.n_obs);
  for (auto& v : d.y) v = rng::draw_normal(g, spec.mu, spec.sigma);
  return d;
}

NumericDataset resample(rng::Generator& g, const NumericDataset& source,
                        std::size_t n_obs) {
  if (source.y.empty())
    throw Error(ErrorCode::empty_source, "resample: source dataset is empty");
  NumericDataset d;
  d.y.resize(n_obs);
  const std::size_t n = source.y.size();
  for (auto& v : d.y) {
    auto idx = static_cast<std::size_t>(rng::draw_uniform(g) * static_cast<double>(n));
    if (idx >= n) idx = n - 1;
    v = source.y[idx];
  }
  return d;
}

}  // namespace simharness::dgm
