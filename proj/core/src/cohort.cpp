#include "vamod/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace vamod {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DanglingSchoolRef: return "DanglingSchoolRef";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::OutOfRangeField: return "OutOfRangeField";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidKs2: return "InvalidKs2";
    case ErrorCode::UnknownSpec: return "UnknownSpec";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoPupils: return "NoPupils";
    case ErrorCode::SingleCategory: return "SingleCategory";
    case ErrorCode::UnknownCharacteristic: return "UnknownCharacteristic";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BadToken: return "BadToken";
    case ErrorCode::BadNumber: return "BadNumber";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::SingularSubmatrix: return "SingularSubmatrix";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewSchools: return "TooFewSchools";
    case ErrorCode::DegenerateWithin: return "DegenerateWithin";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RankDeficient:
    case ErrorCode::TooFewRows:
    case ErrorCode::SingleCluster:
    case ErrorCode::SingularSubmatrix:
    case ErrorCode::ZeroVariance:
    case ErrorCode::TooFewSchools:
    case ErrorCode::DegenerateWithin:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> row, RecordList list)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code), row_(row), list_(list) {}

// ---------------------------------------------------------------------------
// Token tables
// ---------------------------------------------------------------------------

#define VAMOD_TOKENS(E, N, ...)                                                   \
  const std::array<std::string_view, N>& EnumTraits<E>::tokens() {                \
    static constexpr std::array<std::string_view, N> kTokens{__VA_ARGS__};        \
    return kTokens;                                                               \
  }

VAMOD_TOKENS(Month, 12, "september", "october", "november", "december", "january", "february",
             "march", "april", "may", "june", "july", "august")
VAMOD_TOKENS(Gender, 2, "male", "female")
VAMOD_TOKENS(Ethnicity, 20, "white_british", "white_irish", "traveller_of_irish_heritage",
             "gypsy_roma", "any_other_white", "black_african", "black_caribbean",
             "any_other_black", "indian", "pakistani", "bangladeshi", "any_other_asian",
             "chinese", "white_and_black_african", "white_and_black_caribbean",
             "white_and_asian", "any_other_mixed", "any_other_ethnic_group",
             "information_not_yet_obtained", "refused")
VAMOD_TOKENS(Language, 2, "english_first", "english_additional")
VAMOD_TOKENS(Sen, 3, "none", "sen_support", "statement")
VAMOD_TOKENS(Fsm, 2, "not_eligible", "eligible")
VAMOD_TOKENS(Region, 9, "london", "south_east", "south_west", "west_midlands", "north_west",
             "north_east", "yorkshire_and_humber", "east_midlands", "east_of_england")
VAMOD_TOKENS(SchoolType, 11, "community", "foundation", "voluntary_aided",
             "voluntary_controlled", "city_technology_college", "sponsored_academy",
             "converter_academy", "free_school", "studio_school",
             "university_technical_college", "further_education_college")
VAMOD_TOKENS(Admissions, 3, "comprehensive", "grammar", "secondary_modern")
VAMOD_TOKENS(AgeRange, 5, "11_18", "11_16", "14_18", "4_18", "4_16")
VAMOD_TOKENS(SchoolGender, 3, "mixed", "boys", "girls")
VAMOD_TOKENS(Religion, 7, "none", "church_of_england", "roman_catholic", "other_christian",
             "jewish", "muslim", "sikh")

#undef VAMOD_TOKENS

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

template <typename E>
bool enum_ok(E value) {
  return static_cast<std::size_t>(value) < EnumTraits<E>::count;
}

[[noreturn]] void out_of_range(std::string_view field, std::string_view id, std::size_t row, RecordList list) {
  throw Error(ErrorCode::OutOfRangeField,
              "field '" + std::string(field) + "' out of range for '" + std::string(id) + "' (row " +
                  std::to_string(row) + ")",
              row, list);
}

void check_pupil(const PupilRecord& p, std::size_t row) {
  if (!std::isfinite(p.ks2) || p.ks2 < kKs2InputMin || p.ks2 > kKs2InputMax) out_of_range("ks2", p.pupil_id, row, RecordList::pupils);
  if (!std::isfinite(p.attainment8) || p.attainment8 < 0.0 || p.attainment8 > kAttainment8Max)
    out_of_range("attainment8", p.pupil_id, row, RecordList::pupils);
  if (!enum_ok(p.month)) out_of_range("month", p.pupil_id, row, RecordList::pupils);
  if (!enum_ok(p.gender)) out_of_range("gender", p.pupil_id, row, RecordList::pupils);
  if (!enum_ok(p.ethnicity)) out_of_range("ethnicity", p.pupil_id, row, RecordList::pupils);
  if (!enum_ok(p.language)) out_of_range("language", p.pupil_id, row, RecordList::pupils);
  if (!enum_ok(p.sen)) out_of_range("sen", p.pupil_id, row, RecordList::pupils);
  if (!enum_ok(p.fsm)) out_of_range("fsm", p.pupil_id, row, RecordList::pupils);
  if (p.idaci_decile < 1 || p.idaci_decile > 10) out_of_range("idaci_decile", p.pupil_id, row, RecordList::pupils);
}

void check_school(const SchoolRecord& s, std::size_t row) {
  if (!enum_ok(s.region)) out_of_range("region", s.school_id, row, RecordList::schools);
  if (!enum_ok(s.school_type)) out_of_range("school_type", s.school_id, row, RecordList::schools);
  if (!enum_ok(s.admissions)) out_of_range("admissions", s.school_id, row, RecordList::schools);
  if (!enum_ok(s.age_range)) out_of_range("age_range", s.school_id, row, RecordList::schools);
  if (!enum_ok(s.school_gender)) out_of_range("school_gender", s.school_id, row, RecordList::schools);
  if (!enum_ok(s.religion)) out_of_range("religion", s.school_id, row, RecordList::schools);
  if (s.school_idaci_decile < 1 || s.school_idaci_decile > 10)
    out_of_range("school_idaci_decile", s.school_id, row, RecordList::schools);
}

}  // namespace

Cohort validate_cohort(std::vector<PupilRecord> pupils, std::vector<SchoolRecord> schools,
                       ValidationWarnings* warnings) {
  Cohort cohort;

  for (std::size_t i = 0; i < schools.size(); ++i) {
    check_school(schools[i], i + 1);
    auto id = schools[i].school_id;
    auto [it, inserted] = cohort.schools_.emplace(id, std::move(schools[i]));
    if (!inserted) throw Error(ErrorCode::DuplicateId, "duplicate school_id '" + id + "'", i + 1, RecordList::schools);
  }

  std::unordered_set<std::string> pupil_ids;
  pupil_ids.reserve(pupils.size());
  std::set<std::string> used_schools;
  for (std::size_t i = 0; i < pupils.size(); ++i) {
    const auto& p = pupils[i];
    check_pupil(p, i + 1);
    if (!pupil_ids.insert(p.pupil_id).second)
      throw Error(ErrorCode::DuplicateId, "duplicate pupil_id '" + p.pupil_id + "'", i + 1, RecordList::pupils);
    if (!cohort.schools_.contains(p.school_id))
      throw Error(ErrorCode::DanglingSchoolRef,
                  "pupil '" + p.pupil_id + "' references unknown school '" + p.school_id + "'", i + 1,
                  RecordList::pupils);
    used_schools.insert(p.school_id);
  }

  std::size_t dropped = std::erase_if(cohort.schools_, [&](const auto& kv) { return !used_schools.contains(kv.first); });
  if (warnings) warnings->dropped_empty_schools = dropped;

  cohort.pupils_ = std::move(pupils);
  return cohort;
}

Cohort validate_cohort(const Cohort& cohort) {
  std::vector<SchoolRecord> schools;
  schools.reserve(cohort.n_schools());
  for (const auto& [id, s] : cohort.schools()) schools.push_back(s);
  return validate_cohort(cohort.pupils(), std::move(schools));
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

double percentile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "percentile of empty list");
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SummaryStats summary_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "summary_stats of empty list");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  // Sum in sorted order so the result does not depend on input order.
  SummaryStats s;
  s.n = sorted.size();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.min = sorted.front();
  s.max = sorted.back();
  s.p10 = percentile_sorted(sorted, 0.10);
  s.p25 = percentile_sorted(sorted, 0.25);
  s.p50 = percentile_sorted(sorted, 0.50);
  s.p75 = percentile_sorted(sorted, 0.75);
  s.p90 = percentile_sorted(sorted, 0.90);
  return s;
}

}  // namespace vamod
