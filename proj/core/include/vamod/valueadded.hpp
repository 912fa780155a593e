#pragma once

// Two-stage progress scoring: fit a specification, turn residuals into
// pupil progress in grade units, average to schools with 95% intervals, and
// optionally shrink school means with a moment-based empirical Bayes step.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vamod/cohort.hpp"
#include "vamod/design.hpp"
#include "vamod/numerics.hpp"

namespace vamod {

/// Attainment 8 points per grade: eight subject slots, double-weighted
/// English and maths.
inline constexpr double kPointsPerGrade = 10.0;
inline constexpr double kZ95 = 1.96;

struct PupilProgress {
  std::string pupil_id;
  double score = 0.0;  // grades per subject
};

struct SchoolScore {
  std::string school_id;
  std::size_t n_pupils = 0;
  double score = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;
};

struct PipelineResult {
  SpecName spec = SpecName::base;
  FittedModel fit;
  std::vector<std::string> dropped_columns;  // dummies with no pupils
  std::vector<PupilProgress> pupil_scores;   // cohort order
  std::vector<SchoolScore> school_scores;    // descending score
  double national_sd = 0.0;

  std::vector<double> pupil_score_values() const;
};

/// Errors: RankDeficient and the other fit_ols errors.
PipelineResult run_pipeline(const Cohort& cohort, SpecName spec);

/// Per-school mean progress, se = national_sd / sqrt(n), CI = mean -/+ 1.96 se.
/// `school_ids` is parallel to `pupil_scores`. Output is sorted by
/// descending score, ties by school_id.
///
/// Errors: LengthMismatch, EmptyInput, ZeroVariance (national_sd <= 0).
std::vector<SchoolScore> school_scores(std::span<const double> pupil_scores,
                                       std::span<const std::string> school_ids, double national_sd);

struct ShrunkSchool {
  std::string school_id;
  std::size_t n_pupils = 0;
  double raw_score = 0.0;
  double lambda = 0.0;
  double shrunk_score = 0.0;
};

struct ShrinkageEstimates {
  double sigma2_between = 0.0;
  double sigma2_within = 0.0;
  double n0 = 0.0;
  std::vector<ShrunkSchool> schools;  // ascending school_id
};

/// Unbalanced one-way ANOVA moment estimates of the between- and
/// within-school variances, then lambda_j = s2u / (s2u + s2e / n_j) and
/// shrunk_j = lambda_j * raw_j (pulled toward the national zero).
///
/// Errors: LengthMismatch, TooFewSchools (< 2), DegenerateWithin (no
/// within-school degrees of freedom or zero within-school variance).
ShrinkageEstimates shrink_school_scores(std::span<const double> pupil_scores,
                                        std::span<const std::string> school_ids);

}  // namespace vamod
