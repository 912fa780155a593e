#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "vamod/cohort.hpp"

using namespace vamod;
using Catch::Approx;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_CASE("two pupils in one known school") {
  const auto c = validate_cohort({fixtures::pupil("p1", "s1"), fixtures::pupil("p2", "s1")}, {fixtures::school("s1")});
  CHECK(c.n_pupils() == 2);
  CHECK(c.n_schools() == 1);
  CHECK(c.school_of(c.pupils()[0]).school_id == "s1");
}

TEST_CASE("dangling school reference names the pupil") {
  try {
    validate_cohort({fixtures::pupil("p1", "s1"), fixtures::pupil("p2", "X")}, {fixtures::school("s1")});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DanglingSchoolRef);
    CHECK(e.row() == 2u);
    CHECK(e.list() == RecordList::pupils);
    CHECK(std::string(e.what()).find("p2") != std::string::npos);
  }
}

TEST_CASE("out of range fields") {
  auto p = fixtures::pupil("p1", "s1");
  p.idaci_decile = 11;
  CHECK(code_of([&] { validate_cohort({p}, {fixtures::school("s1")}); }) == ErrorCode::OutOfRangeField);

  p = fixtures::pupil("p1", "s1", 6.5);
  CHECK(code_of([&] { validate_cohort({p}, {fixtures::school("s1")}); }) == ErrorCode::OutOfRangeField);

  p = fixtures::pupil("p1", "s1", 4.0, 90.5);
  CHECK(code_of([&] { validate_cohort({p}, {fixtures::school("s1")}); }) == ErrorCode::OutOfRangeField);

  p = fixtures::pupil("p1", "s1");
  p.month = static_cast<Month>(12);
  CHECK(code_of([&] { validate_cohort({p}, {fixtures::school("s1")}); }) == ErrorCode::OutOfRangeField);

  auto s = fixtures::school("s1");
  s.school_idaci_decile = 0;
  try {
    validate_cohort({fixtures::pupil("p1", "s1")}, {s});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRangeField);
    CHECK(e.list() == RecordList::schools);
    CHECK(e.row() == 1u);
  }
}

TEST_CASE("duplicate ids") {
  CHECK(code_of([] {
          validate_cohort({fixtures::pupil("p1", "s1"), fixtures::pupil("p1", "s1")}, {fixtures::school("s1")});
        }) == ErrorCode::DuplicateId);
  CHECK(code_of([] {
          validate_cohort({fixtures::pupil("p1", "s1")}, {fixtures::school("s1"), fixtures::school("s1")});
        }) == ErrorCode::DuplicateId);
}

TEST_CASE("empty schools are dropped with a warning") {
  ValidationWarnings w;
  const auto c =
      validate_cohort({fixtures::pupil("p1", "s1")}, {fixtures::school("s1"), fixtures::school("s2")}, &w);
  CHECK(c.n_schools() == 1);
  CHECK(w.dropped_empty_schools == 1);
  CHECK(validate_cohort(c) == c);
}

TEST_CASE("tokens round trip and are strict") {
  CHECK(to_token(Ethnicity::traveller_of_irish_heritage) == "traveller_of_irish_heritage");
  CHECK(to_token(Sen::support) == "sen_support");
  CHECK(to_token(AgeRange::y11_18) == "11_18");
  CHECK(parse_token<Ethnicity>("chinese") == Ethnicity::chinese);
  CHECK_FALSE(parse_token<Ethnicity>("chinese ").has_value());
  CHECK_FALSE(parse_token<Ethnicity>("Chinese").has_value());
  for (std::size_t i = 0; i < EnumTraits<SchoolType>::count; ++i) {
    const auto t = static_cast<SchoolType>(i);
    CHECK(parse_token<SchoolType>(to_token(t)) == t);
  }
}

TEST_CASE("summary statistics") {
  const std::vector<double> v{5, 3, 1, 4, 2};
  const auto s = summary_stats(v);
  CHECK(s.n == 5);
  CHECK(s.mean == 3.0);
  CHECK(s.p50 == 3.0);
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(s.p25 == 2.0);
  CHECK(s.sd == Approx(oracle::welford_sd(v)).epsilon(1e-14));

  const auto c = summary_stats(std::vector<double>{7, 7, 7});
  CHECK(c.sd == 0.0);
  for (double p : {c.min, c.p10, c.p25, c.p50, c.p75, c.p90, c.max}) CHECK(p == 7.0);

  CHECK(summary_stats(std::vector<double>{2.5}).sd == 0.0);
  CHECK(code_of([] { summary_stats(std::vector<double>{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("median of uniform draws") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(10001);
  for (auto& x : v) x = u(rng);
  const auto s = summary_stats(v);
  CHECK(std::abs(s.p50 - 0.5) < 0.02);
  CHECK(s.sd == Approx(oracle::welford_sd(v)).epsilon(1e-12));
}

TEST_CASE("summary statistics ignore input order") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<double> v(500);
  for (auto& x : v) x = z(rng);
  auto w = v;
  std::shuffle(w.begin(), w.end(), rng);
  const auto a = summary_stats(v), b = summary_stats(w);
  CHECK(a.mean == b.mean);
  CHECK(a.sd == b.sd);
  CHECK(a.p90 == b.p90);
}
