// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>

#include "simharness/dgm.hpp"
#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

using namespace simharness;
using namespace simharness::dgm;

namespace {
SurvivalDgmSpec worked_example_spec(double gamma) {
  SurvivalDgmSpec spec;
  spec.n_obs = 500;
  spec.lambda = 0.1;
  spec.gamma = gamma;
  spec.theta = -0.5;
  spec.allocation_p = 0.5;
  spec.censor_time = 3.0;
  return spec;
}
}  // namespace

TEST_CASE("closed-form inversion: U=0.5, X=0, lambda=0.1, gamma=1") {
  // T = -ln(0.5)/0.1 = 6.9315; censoring at 3 turns it into (3, 0).
  const double latent = std::pow(-std::log(0.5) / 0.1, 1.0);
  CHECK(latent == doctest::Approx(6.93147).epsilon(1e-5));

  // Drive the generator mechanism with a state whose next two uniforms are
  // known, via a loop that finds them: simpler to check the algebra on the
  // generated output directly.
  SurvivalDgmSpec spec = worked_example_spec(1.0);
  spec.n_obs = 2000;
  rng::Generator g = rng::init_generator(72789, 0);
  rng::Generator replay = g;
  const SurvivalDataset d = generate_survival(g, spec);
  for (const auto& subj : d.subjects) {
    replay.next_uniform();  // treatment indicator draw
    const double u = replay.next_uniform();
    const double latent_t =
        std::pow(-std::log(u) / (0.1 * std::exp(subj.x * -0.5)), 1.0);
    if (latent_t > 3.0) {
      CHECK(subj.time == 3.0);
      CHECK(subj.event == 0);
    } else {
      CHECK(subj.time == doctest::Approx(latent_t).epsilon(1e-12));
      CHECK(subj.event == 1);
    }
  }
}

TEST_CASE("survival generation consumes exactly 2*n_obs uniforms") {
  SurvivalDgmSpec spec = worked_example_spec(1.5);
  rng::Generator g = rng::init_generator(1, 0);
  generate_survival(g, spec);
  CHECK(g.draws_made() == 2 * spec.n_obs);
}

TEST_CASE("gamma=1 reduces the Weibull mechanism to the exponential") {
  SurvivalDgmSpec weib = worked_example_spec(1.0);
  weib.censor_time.reset();
  rng::Generator g1 = rng::init_generator(5, 0);
  rng::Generator g2 = rng::init_generator(5, 0);
  const SurvivalDataset a = generate_survival(g1, weib);

  // Exponential by direct inversion with the same draws.
  SurvivalDataset b;
  for (std::size_t i = 0; i < weib.n_obs; ++i) {
    const int x = rng::draw_bernoulli(g2, 0.5);
    const double u = rng::draw_uniform(g2);
    b.subjects.push_back({x, -std::log(u) / (0.1 * std::exp(x * -0.5)), 1});
  }
  REQUIRE(a.subjects.size() == b.subjects.size());
  for (std::size_t i = 0; i < a.subjects.size(); ++i) {
    CHECK(a.subjects[i].x == b.subjects[i].x);
    CHECK(a.subjects[i].time == doctest::Approx(b.subjects[i].time).epsilon(1e-12));
  }
}

TEST_CASE("generated times solve S(t) = U: numeric-root oracle") {
  // Independent of the closed-form inversion: bisect the survival function
  // for the root and compare against the generated latent time.
  SurvivalDgmSpec spec = worked_example_spec(1.5);
  spec.censor_time.reset();
  spec.n_obs = 50;
  rng::Generator g = rng::init_generator(4242, 0);
  rng::Generator replay = g;
  const SurvivalDataset d = generate_survival(g, spec);
  for (const auto& subj : d.subjects) {
    replay.next_uniform();
    const double u = replay.next_uniform();
    const double rate = spec.lambda * std::exp(subj.x * spec.theta);
    auto survival = [&](double t) { return std::exp(-rate * std::pow(t, spec.gamma)); };
    double lo = 0.0, hi = 1.0;
    while (survival(hi) > u) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (survival(mid) > u) lo = mid;
      else hi = mid;
    }
    CHECK(subj.time == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
  }
}

TEST_CASE("inversion invariant: cumulative hazard at T reproduces the uniform") {
  SurvivalDgmSpec spec = worked_example_spec(1.5);
  spec.censor_time.reset();  // latent times observed directly
  spec.n_obs = 5000;
  rng::Generator g = rng::init_generator(99, 0);
  rng::Generator replay = g;
  const SurvivalDataset d = generate_survival(g, spec);
  for (const auto& subj : d.subjects) {
    replay.next_uniform();
    const double u = replay.next_uniform();
    const double survival_at_t =
        std::exp(-spec.lambda * std::pow(subj.time, spec.gamma) *
                 std::exp(subj.x * spec.theta));
    CHECK(std::fabs(survival_at_t - u) < 1e-12);
  }
}

TEST_CASE("raising censor_time never turns an event into a censoring") {
  SurvivalDgmSpec early = worked_example_spec(1.5);
  early.censor_time = 1.0;
  SurvivalDgmSpec late = worked_example_spec(1.5);
  late.censor_time = 4.0;

  rng::Generator g1 = rng::init_generator(7, 0);
  rng::Generator g2 = rng::init_generator(7, 0);
  const SurvivalDataset a = generate_survival(g1, early);
  const SurvivalDataset b = generate_survival(g2, late);
  for (std::size_t i = 0; i < a.subjects.size(); ++i) {
    if (a.subjects[i].event) CHECK(b.subjects[i].event == 1);
    CHECK(b.subjects[i].time >= a.subjects[i].time);
  }
}

TEST_CASE("dataset content is a pure function of the start state") {
  SurvivalDgmSpec spec = worked_example_spec(1.0);
  rng::Generator g = rng::init_generator(72789, 0);
  for (int i = 0; i < 3; ++i) generate_survival(g, spec);  // advance to repetition 4
  const auto record = rng::capture_state(g, "1", 4);
  const std::uint64_t h1 = dataset_hash(generate_survival(g, spec));

  rng::Generator replay = rng::restore_state(record);
  const std::uint64_t h2 = dataset_hash(generate_survival(replay, spec));
  CHECK(h1 == h2);
}

TEST_CASE("normal generation: mean check and draw budget") {
  NormalDgmSpec spec{1'000'000, 10.0, 1.0};
  rng::Generator g = rng::init_generator(12, 0);
  const NumericDataset d = generate_normal(g, spec);
  CHECK(g.draws_made() == spec.n_obs);
  double mean = 0.0;
  for (double v : d.y) mean += v;
  mean /= static_cast<double>(d.y.size());
  CHECK(std::fabs(mean - 10.0) < 0.0045);  // 4.5 sigma / sqrt(n)
}

TEST_CASE("inverse-CDF sampler is exactly antisymmetric: f(u) = -f(1-u)") {
  rng::Generator g = rng::init_generator(3, 0);
  for (int i = 0; i < 20000; ++i) {
    const double u = g.next_uniform();
    CHECK(mathutil::norm_inv_cdf(u) == -mathutil::norm_inv_cdf(1.0 - u));
  }
}

TEST_CASE("resampling from a single row copies that row") {
  NumericDataset source;
  source.y = {42.0};
  rng::Generator g = rng::init_generator(1, 0);
  const NumericDataset d = dgm::resample(g, source, 25);
  REQUIRE(d.y.size() == 25);
  for (double v : d.y) CHECK(v == 42.0);
}

TEST_CASE("resampling frequencies match uniform selection") {
  NumericDataset source;
  source.y = {1.0, 2.0, 3.0};
  rng::Generator g = rng::init_generator(8, 0);
  constexpr std::size_t kN = 1'000'000;
  const NumericDataset d = dgm::resample(g, source, kN);
  std::map<double, std::size_t> freq;
  for (double v : d.y) ++freq[v];
  for (const auto& [value, count] : freq) {
    (void)value;
    const double p = static_cast<double>(count) / kN;
    CHECK(std::fabs(p - 1.0 / 3.0) < 0.0021);  // 4.5 binomial-SE band
  }
}

TEST_CASE("resampling from an empty source fails; distinct states differ") {
  NumericDataset empty;
  rng::Generator g = rng::init_generator(1, 0);
  CHECK_THROWS_AS(dgm::resample(g, empty, 5), Error);

  NumericDataset source;
  source.y = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  const NumericDataset a = dgm::resample(g, source, 40);
  const NumericDataset b = dgm::resample(g, source, 40);
  CHECK(dataset_hash(a) != dataset_hash(b));
}

TEST_CASE("full factorial expansion: last factor varies fastest") {
  FactorGrid grid;
  grid.factors.push_back({"gamma", {1.0, 1.5}});
  const auto two = expand_grid(grid);
  REQUIRE(two.size() == 2);
  CHECK(two[0][0].second == 1.0);
  CHECK(two[1][0].second == 1.5);

  grid.factors.push_back({"n_obs", {100.0, 200.0, 300.0}});
  const auto six = expand_grid(grid);
  REQUIRE(six.size() == 6);
  CHECK(six[0][0].second == 1.0);
  CHECK(six[0][1].second == 100.0);
  CHECK(six[1][1].second == 200.0);
  CHECK(six[3][0].second == 1.5);
  CHECK(six[3][1].second == 100.0);
}

TEST_CASE("one-at-a-time expansion: 8 and 5 levels give 12 design points") {
  FactorGrid grid;
  grid.design = GridDesign::one_at_a_time;
  grid.factors.push_back({"A", {1, 2, 3, 4, 5, 6, 7, 8}});
  grid.factors.push_back({"B", {1, 2, 3, 4, 5}});
  grid.base_case = {0, 0};
  const auto points = expand_grid(grid);
  REQUIRE(points.size() == 12);
  CHECK(points[0][0].second == 1.0);  // base case first
  CHECK(points[0][1].second == 1.0);
  for (std::size_t i = 1; i <= 7; ++i) {
    CHECK(points[i][0].second == static_cast<double>(i + 1));
    CHECK(points[i][1].second == 1.0);
  }
  for (std::size_t i = 8; i < 12; ++i) {
    CHECK(points[i][0].second == 1.0);
    CHECK(points[i][1].second == static_cast<double>(i - 6));
  }
}

TEST_CASE("one-at-a-time without a base case is rejected") {
  FactorGrid grid;
  grid.design = GridDesign::one_at_a_time;
  grid.factors.push_back({"A", {1, 2}});
  try {
    expand_grid(grid);
    FAIL("expected MissingBaseCase");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_base_case);
  }
}

TEST_CASE("degenerate single-factor single-level grid expands to one point") {
  for (const auto design :
       {GridDesign::full_factorial, GridDesign::one_at_a_time, GridDesign::explicit_list}) {
    FactorGrid grid;
    grid.design = design;
    grid.factors.push_back({"A", {3.0}});
    grid.base_case = {0};
    grid.explicit_cases = {{3.0}};
    const auto points = expand_grid(grid);
    REQUIRE(points.size() == 1);
    CHECK(points[0][0].second == 3.0);
  }
}

TEST_CASE("spec validation rejects out-of-range parameters") {
  SurvivalDgmSpec spec = worked_example_spec(1.0);
  spec.lambda = 0.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = worked_example_spec(0.0);
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = worked_example_spec(1.0);
  spec.allocation_p = 1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  NormalDgmSpec norm{10, 0.0, 0.0};
  CHECK_THROWS_AS(norm.validate(), Error);
}
