#include <catch_amalgamated.hpp>

#include <map>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vamod/valueadded.hpp"

using namespace vamod;
using Catch::Approx;

namespace {

SchoolScore single_school(std::size_t n, double mean, double sd) {
  const std::vector<double> scores(n, mean);
  const std::vector<std::string> ids(n, "s");
  return school_scores(scores, ids, sd).front();
}

}  // namespace

TEST_CASE("school interval arithmetic") {
  auto s = single_school(100, 0.20, 1.06);
  CHECK(s.se == Approx(0.106).epsilon(1e-12));
  CHECK(s.ci_low == Approx(-0.008).margin(5e-4));
  CHECK(s.ci_high == Approx(0.408).margin(5e-4));
  CHECK_FALSE(s.significant);

  s = single_school(400, 0.20, 1.06);
  CHECK(s.se == Approx(0.053).epsilon(1e-12));
  CHECK(s.ci_low == Approx(0.096).margin(5e-4));
  CHECK(s.ci_high == Approx(0.304).margin(5e-4));
  CHECK(s.significant);

  s = single_school(1, 2.0, 1.06);
  CHECK(s.ci_low == Approx(-0.078).margin(5e-4));
  CHECK(s.ci_high == Approx(4.078).margin(5e-4));
  CHECK_FALSE(s.significant);
}

TEST_CASE("school scores are sorted by score then id") {
  const std::vector<double> v{0.1, 0.3, 0.3, -0.2, 0.1};
  const std::vector<std::string> ids{"c", "b", "a", "d", "e"};
  const auto s = school_scores(v, ids, 1.0);
  REQUIRE(s.size() == 5);
  CHECK(s[0].school_id == "a");
  CHECK(s[1].school_id == "b");
  CHECK(s[2].school_id == "c");
  CHECK(s[2].score == Approx(0.1));
  CHECK(s[3].school_id == "e");
  CHECK(s[4].school_id == "d");
  CHECK(s[2].n_pupils == 1);
  CHECK_THROWS_AS(school_scores(v, ids, 0.0), Error);
  CHECK_THROWS_AS(school_scores(v, std::vector<std::string>{"a"}, 1.0), Error);
}

TEST_CASE("pipeline residual orthogonality") {
  const auto cohort = generate_cohort(fixtures::small_config(40, 3));
  const auto base = run_pipeline(cohort, SpecName::base);
  const auto adj = run_pipeline(cohort, SpecName::adjusted);
  const auto vb = base.pupil_score_values();
  const auto va = adj.pupil_score_values();

  double sum = 0;
  for (double v : vb) sum += v;
  CHECK(std::abs(sum / static_cast<double>(vb.size())) < 1e-9);

  std::map<int, std::pair<double, int>> by_band;
  for (std::size_t i = 0; i < vb.size(); ++i) {
    auto& b = by_band[ks2_band_of(cohort.pupils()[i].ks2).group];
    b.first += vb[i];
    ++b.second;
  }
  for (const auto& [g, b] : by_band) CHECK(std::abs(b.first / b.second) < 1e-9);

  for (auto c : kAdjustmentCharacteristics) {
    const auto cats = categories_of(c, cohort);
    std::map<std::size_t, std::pair<double, int>> m;
    for (std::size_t i = 0; i < va.size(); ++i) {
      m[cats[i]].first += va[i];
      ++m[cats[i]].second;
    }
    for (const auto& [k, b] : m) CHECK(std::abs(b.first / b.second) < 1e-9);
  }

  CHECK(base.national_sd == Approx(oracle::welford_sd(vb)).epsilon(1e-12));
  CHECK(base.fit.n_params == 34 - base.dropped_columns.size());
  CHECK(adj.fit.r_squared >= base.fit.r_squared);
  CHECK(base.school_scores.size() == cohort.n_schools());
}

TEST_CASE("empty categories are dropped, not fatal") {
  std::vector<PupilRecord> pupils;
  for (int i = 0; i < 60; ++i) {
    const double ks2 = i % 3 == 0 ? 1.5 : i % 3 == 1 ? 4.6 : 3.0;
    pupils.push_back(fixtures::pupil("p" + std::to_string(i), i % 2 ? "s1" : "s2", ks2, 30.0 + i % 7));
  }
  const auto c = validate_cohort(pupils, {fixtures::school("s1"), fixtures::school("s2")});
  const auto r = run_pipeline(c, SpecName::base);
  CHECK(r.fit.n_params == 3);
  CHECK(r.dropped_columns.size() == 31);
}

TEST_CASE("an empty reference category is rank deficient") {
  std::vector<PupilRecord> pupils;
  for (int i = 0; i < 60; ++i)
    pupils.push_back(fixtures::pupil("p" + std::to_string(i), "s1", i % 2 ? 4.6 : 3.0, 30.0 + i % 7));
  const auto c = validate_cohort(pupils, {fixtures::school("s1")});
  try {
    run_pipeline(c, SpecName::base);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("two-school shrinkage matches the hand moment estimator") {
  const std::vector<double> v{0.5, 1.5, -0.2, 0.6};
  const std::vector<std::string> ids{"A", "A", "B", "B"};
  const auto est = shrink_school_scores(v, ids);
  // SSW 0.82 / 2, MSB 0.64, n0 2, s2u = 0.115, lambda = 0.115 / 0.32.
  CHECK(std::abs(est.sigma2_within - 0.41) < 1e-12);
  CHECK(std::abs(est.n0 - 2.0) < 1e-12);
  CHECK(std::abs(est.sigma2_between - 0.115) < 1e-12);
  REQUIRE(est.schools.size() == 2);
  CHECK(std::abs(est.schools[0].lambda - 0.359375) < 1e-12);
  CHECK(std::abs(est.schools[0].shrunk_score - 0.359375) < 1e-12);
  CHECK(std::abs(est.schools[1].shrunk_score - 0.071875) < 1e-12);
}

TEST_CASE("shrinkage clamps to zero between-school variance") {
  const std::vector<double> v{1, -1, 1.1, -0.9};
  const std::vector<std::string> ids{"A", "A", "B", "B"};
  const auto est = shrink_school_scores(v, ids);
  CHECK(est.sigma2_between == 0.0);
  for (const auto& s : est.schools) CHECK(s.shrunk_score == 0.0);
}

TEST_CASE("large schools are barely shrunk") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::vector<double> v;
  std::vector<std::string> ids;
  for (int s = 0; s < 20; ++s) {
    const double u = 0.4 * z(rng);
    for (int i = 0; i < 5000; ++i) {
      v.push_back(u + z(rng));
      ids.push_back("s" + std::to_string(s));
    }
  }
  const auto est = shrink_school_scores(v, ids);
  for (const auto& s : est.schools) {
    CHECK(s.lambda > 0.99);
    CHECK(std::abs(s.shrunk_score - s.raw_score) < 0.01);
  }
}

TEST_CASE("shrinkage errors") {
  CHECK_THROWS_AS(shrink_school_scores(std::vector<double>{1, 2}, std::vector<std::string>{"A", "A"}), Error);
  try {
    shrink_school_scores(std::vector<double>{1, 2}, std::vector<std::string>{"A", "B"});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateWithin);
  }
  try {
    shrink_school_scores(std::vector<double>{1, 1, 2, 2}, std::vector<std::string>{"A", "A", "B", "B"});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateWithin);
  }
}
