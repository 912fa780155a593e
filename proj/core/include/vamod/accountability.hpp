#pragma once

// Accountability outputs built on school scores: five-band classification,
// floor standard, band transitions, league-table rank movement and
// cluster-robust group-gap reports.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vamod/cohort.hpp"
#include "vamod/design.hpp"
#include "vamod/numerics.hpp"
#include "vamod/valueadded.hpp"

namespace vamod {

enum class Band : int { well_below = 1, below = 2, average = 3, above = 4, well_above = 5 };

inline constexpr std::size_t kBandCount = 5;
inline constexpr double kBandCut = 0.5;

std::string_view band_token(Band band);
/// Errors: BadToken.
Band parse_band(std::string_view token);
inline std::size_t band_index(Band band) { return static_cast<std::size_t>(band) - 1; }

/// Not significant -> average. Significant: >= 0.5 well above, (0, 0.5)
/// above, [-0.5, 0) below, < -0.5 well below, exactly 0 average.
Band band_of(double score, bool significant);

struct BandedSchool {
  std::string school_id;
  Band band = Band::average;
  bool below_floor = false;  // band == well_below
};

std::vector<BandedSchool> band_schools(std::span<const SchoolScore> scores);

struct TransitionTable {
  // counts[a][b]: schools in band a+1 under measure A and band b+1 under B.
  std::array<std::array<std::size_t, kBandCount>, kBandCount> counts{};
  std::array<std::size_t, kBandCount> row_totals{};
  std::array<std::size_t, kBandCount> column_totals{};
  std::size_t grand_total = 0;
  // Row percentages; an empty row is all zeros.
  std::array<std::array<double, kBandCount>, kBandCount> row_percent{};
  std::size_t changed = 0;
  double changed_share = 0.0;
};

/// Errors: LengthMismatch.
TransitionTable transition_table(std::span<const Band> bands_a, std::span<const Band> bands_b);

inline const std::vector<std::size_t> kDefaultRankThresholds{500, 1000};

struct RankReport {
  std::vector<std::size_t> rank_a;
  std::vector<std::size_t> rank_b;
  std::vector<long long> delta;  // rank_a - rank_b
  std::vector<std::pair<std::size_t, std::size_t>> threshold_counts;  // (t, #|delta| >= t)
  double pearson = 0.0;
  double spearman = 0.0;
};

/// Competition ranks under both measures, per-threshold movement counts and
/// correlations of the raw scores. Scores are parallel (same school order).
///
/// Errors: LengthMismatch, EmptyInput (fewer than 2 schools), ZeroVariance.
RankReport rank_movement(std::span<const double> scores_a, std::span<const double> scores_b,
                         std::span<const std::size_t> thresholds = kDefaultRankThresholds);

struct CategoryGap {
  std::string category;
  std::size_t n_pupils = 0;
  std::size_t n_schools = 0;
  double mean = 0.0;
};

struct GroupGapReport {
  Characteristic characteristic = Characteristic::gender;
  std::vector<CategoryGap> categories;  // nonempty categories, descending mean
  double overall_mean = 0.0;
  WaldResult test;
};

/// Mean progress per category and a cluster-robust (by school) Wald test
/// of equal category means from a regression on category dummies.
///
/// Errors: LengthMismatch, SingleCategory.
GroupGapReport group_gaps(std::span<const double> pupil_scores, const Cohort& cohort, Characteristic characteristic);
/// Errors: UnknownCharacteristic, plus the above.
GroupGapReport group_gaps(std::span<const double> pupil_scores, const Cohort& cohort, std::string_view characteristic);

/// Reorders `report`'s categories to follow `reference` (categories absent
/// from the reference keep their relative order at the end).
void order_like(GroupGapReport& report, const GroupGapReport& reference);

}  // namespace vamod
