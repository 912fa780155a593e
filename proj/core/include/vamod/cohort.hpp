#pragma once

// Pupil, school and cohort records plus descriptive statistics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vamod/error.hpp"

namespace vamod {

// ---------------------------------------------------------------------------
// Enumerations. Each carries a token table; tokens are the lowercase
// snake_case strings used in the CSV files.
// ---------------------------------------------------------------------------

enum class Month : std::uint8_t {
  september, october, november, december, january, february,
  march, april, may, june, july, august,
};

enum class Gender : std::uint8_t { male, female };

enum class Ethnicity : std::uint8_t {
  white_british,
  white_irish,
  traveller_of_irish_heritage,
  gypsy_roma,
  any_other_white,
  black_african,
  black_caribbean,
  any_other_black,
  indian,
  pakistani,
  bangladeshi,
  any_other_asian,
  chinese,
  white_and_black_african,
  white_and_black_caribbean,
  white_and_asian,
  any_other_mixed,
  any_other_ethnic_group,
  information_not_yet_obtained,
  refused,
};

enum class Language : std::uint8_t { english_first, english_additional };
enum class Sen : std::uint8_t { none, support, statement };
enum class Fsm : std::uint8_t { not_eligible, eligible };

enum class Region : std::uint8_t {
  london, south_east, south_west, west_midlands, north_west,
  north_east, yorkshire_and_humber, east_midlands, east_of_england,
};

enum class SchoolType : std::uint8_t {
  community,
  foundation,
  voluntary_aided,
  voluntary_controlled,
  city_technology_college,
  sponsored_academy,
  converter_academy,
  free_school,
  studio_school,
  university_technical_college,
  further_education_college,
};

enum class Admissions : std::uint8_t { comprehensive, grammar, secondary_modern };
enum class AgeRange : std::uint8_t { y11_18, y11_16, y14_18, y4_18, y4_16 };
enum class SchoolGender : std::uint8_t { mixed, boys, girls };

enum class Religion : std::uint8_t {
  none, church_of_england, roman_catholic, other_christian, jewish, muslim, sikh,
};

template <typename E>
struct EnumTraits;

#define VAMOD_ENUM_TRAITS(E, N)                                   \
  template <>                                                     \
  struct EnumTraits<E> {                                          \
    static constexpr std::size_t count = N;                       \
    static const std::array<std::string_view, N>& tokens();       \
  };

VAMOD_ENUM_TRAITS(Month, 12)
VAMOD_ENUM_TRAITS(Gender, 2)
VAMOD_ENUM_TRAITS(Ethnicity, 20)
VAMOD_ENUM_TRAITS(Language, 2)
VAMOD_ENUM_TRAITS(Sen, 3)
VAMOD_ENUM_TRAITS(Fsm, 2)
VAMOD_ENUM_TRAITS(Region, 9)
VAMOD_ENUM_TRAITS(SchoolType, 11)
VAMOD_ENUM_TRAITS(Admissions, 3)
VAMOD_ENUM_TRAITS(AgeRange, 5)
VAMOD_ENUM_TRAITS(SchoolGender, 3)
VAMOD_ENUM_TRAITS(Religion, 7)

#undef VAMOD_ENUM_TRAITS

template <typename E>
std::string_view to_token(E value) {
  return EnumTraits<E>::tokens()[static_cast<std::size_t>(value)];
}

/// Exact, case-sensitive token lookup; no trimming.
template <typename E>
std::optional<E> parse_token(std::string_view token) {
  const auto& tokens = EnumTraits<E>::tokens();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == token) return static_cast<E>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

inline constexpr double kAttainment8Max = 90.0;
inline constexpr double kKs2InputMin = 0.0;
inline constexpr double kKs2InputMax = 6.0;

struct PupilRecord {
  std::string pupil_id;
  std::string school_id;
  double ks2 = 0.0;          // KS2 fine points
  double attainment8 = 0.0;  // Attainment 8 points
  Month month = Month::september;
  Gender gender = Gender::male;
  Ethnicity ethnicity = Ethnicity::white_british;
  Language language = Language::english_first;
  Sen sen = Sen::none;
  Fsm fsm = Fsm::not_eligible;
  int idaci_decile = 1;  // 1 = least deprived

  friend bool operator==(const PupilRecord&, const PupilRecord&) = default;
};

struct SchoolRecord {
  std::string school_id;
  Region region = Region::london;
  SchoolType school_type = SchoolType::community;
  Admissions admissions = Admissions::comprehensive;
  AgeRange age_range = AgeRange::y11_18;
  SchoolGender school_gender = SchoolGender::mixed;
  Religion religion = Religion::none;
  int school_idaci_decile = 1;

  friend bool operator==(const SchoolRecord&, const SchoolRecord&) = default;
};

struct ValidationWarnings {
  std::size_t dropped_empty_schools = 0;
};

/// A validated cohort. Only obtainable through validate_cohort, so every
/// instance satisfies the record and referential invariants.
class Cohort {
 public:
  const std::vector<PupilRecord>& pupils() const noexcept { return pupils_; }
  const std::map<std::string, SchoolRecord>& schools() const noexcept { return schools_; }

  std::size_t n_pupils() const noexcept { return pupils_.size(); }
  std::size_t n_schools() const noexcept { return schools_.size(); }

  const SchoolRecord& school_of(const PupilRecord& pupil) const { return schools_.at(pupil.school_id); }

  friend bool operator==(const Cohort&, const Cohort&) = default;

 private:
  friend Cohort validate_cohort(std::vector<PupilRecord>, std::vector<SchoolRecord>, ValidationWarnings*);

  std::vector<PupilRecord> pupils_;
  std::map<std::string, SchoolRecord> schools_;
};

/// Checks every field range, id uniqueness and pupil -> school resolution.
/// Schools with no pupils are dropped and counted in `warnings`.
///
/// Errors: DanglingSchoolRef, DuplicateId, OutOfRangeField. The error row is
/// the 1-based position of the offending record in its input list.
Cohort validate_cohort(std::vector<PupilRecord> pupils, std::vector<SchoolRecord> schools,
                       ValidationWarnings* warnings = nullptr);

/// Re-validates the records of an existing cohort.
Cohort validate_cohort(const Cohort& cohort);

// ---------------------------------------------------------------------------
// Descriptive statistics
// ---------------------------------------------------------------------------

struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // N-1 denominator; 0 when n == 1
  double min = 0.0;
  double p10 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

/// Linear interpolation between order statistics at 1-based rank p(N-1)+1.
/// `sorted` must be ascending and nonempty.
double percentile_sorted(std::span<const double> sorted, double p);

/// Errors: EmptyInput.
SummaryStats summary_stats(std::span<const double> values);

}  // namespace vamod
