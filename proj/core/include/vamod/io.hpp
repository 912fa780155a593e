#pragma once

// File formats: pupil/school CSV ingestion and emission, the flat key=value
// synthesis config, and the run/compare/gaps report files.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vamod/accountability.hpp"
#include "vamod/cohort.hpp"
#include "vamod/synth.hpp"
#include "vamod/valueadded.hpp"

namespace vamod {

inline constexpr std::string_view kPupilHeader =
    "pupil_id,school_id,ks2,attainment8,month,gender,ethnicity,language,sen,fsm,idaci_decile";
inline constexpr std::string_view kSchoolHeader =
    "school_id,region,school_type,admissions,age_range,school_gender,religion,school_idaci_decile";

/// Fixed six-decimal rendering used by every report file ("-0.000000" is
/// written as "0.000000").
std::string format_fixed6(double value);

// ---------------------------------------------------------------------------
// Cohort CSV
// ---------------------------------------------------------------------------

/// Parses both files and validates the result. Error rows are 1-based file
/// line numbers (the header is line 1).
///
/// Errors: IoFailure, SchemaMismatch, BadToken, BadNumber and every
/// validate_cohort error.
Cohort load_cohort(const std::filesystem::path& pupil_path, const std::filesystem::path& school_path,
                   ValidationWarnings* warnings = nullptr);
Cohort read_cohort(std::istream& pupils, std::istream& schools, ValidationWarnings* warnings = nullptr);

/// Numbers use the shortest representation that parses back to the same
/// double, so write -> load is the identity. Errors: IoFailure.
void write_cohort(const Cohort& cohort, const std::filesystem::path& pupil_path,
                  const std::filesystem::path& school_path);
void write_cohort(const Cohort& cohort, std::ostream& pupils, std::ostream& schools);

// ---------------------------------------------------------------------------
// Synthesis config (flat "key = value" lines, '#' comments)
// ---------------------------------------------------------------------------

/// Starts from default_synth_config() and applies each key. Recognised keys:
///   seed, n_schools, school_size.median, school_size.log_sd, school_size.min,
///   sigma_u, sigma_e, calibrate.pupil_sd, calibrate.school_sd,
///   calibrate.typical_n, marginal.<characteristic> (comma list),
///   coef.<label>, concentration.characteristic, concentration.category,
///   concentration.school_share, concentration.share_in,
///   concentration.share_out.
/// The calibrate.* keys go together and override sigma_u / sigma_e.
///
/// Errors: InvalidConfig (with line number), BadNumber.
SynthConfig parse_synth_config(std::string_view text);
SynthConfig load_synth_config(const std::filesystem::path& path);
std::string format_synth_config(const SynthConfig& config);

// ---------------------------------------------------------------------------
// Run reports
// ---------------------------------------------------------------------------

struct RunOptions {
  bool shrinkage = true;
  std::vector<std::size_t> rank_thresholds = kDefaultRankThresholds;
  /// Characteristics reported as gaps_<name>.csv.
  std::vector<Characteristic> gap_characteristics;  // empty = all adjustment + school characteristics
};

/// One school's joined results under both measures.
struct SchoolRow {
  std::string school_id;
  std::size_t n_pupils = 0;
  SchoolScore base;
  SchoolScore adjusted;
  Band band_base = Band::average;
  Band band_adjusted = Band::average;
  std::optional<double> shrunk_base;
  std::optional<double> shrunk_adjusted;
  std::size_t rank_base = 0;
  std::size_t rank_adjusted = 0;
  long long rank_delta = 0;
};

struct GapPair {
  GroupGapReport base;
  GroupGapReport adjusted;  // categories ordered like `base`
};

struct CoefficientRow {
  std::string label;
  std::optional<double> base;
  std::optional<double> base_se;  // cluster-robust
  double adjusted = 0.0;
  double adjusted_se = 0.0;
};

struct RunAnalysis {
  Cohort cohort;
  std::size_t dropped_schools = 0;
  PipelineResult base;
  PipelineResult adjusted;
  std::optional<ShrinkageEstimates> shrink_base;
  std::optional<ShrinkageEstimates> shrink_adjusted;
  std::vector<SchoolRow> schools;  // descending base score, ties by school_id
  TransitionTable transitions;     // rows = base bands, columns = adjusted bands
  RankReport ranks;                // ascending school_id order
  double pupil_correlation = 0.0;  // Pearson, base vs adjusted pupil scores
  std::vector<CoefficientRow> coefficients;
  std::vector<GapPair> gaps;
  std::vector<std::size_t> rank_thresholds;
};

/// Fits both specifications and derives every accountability output.
RunAnalysis run_analysis(Cohort cohort, const RunOptions& options = {});

/// Writes schools.csv, scores_base.csv, scores_adjusted.csv,
/// pupil_scores.csv, coefficients.csv, transitions.csv, gaps_<name>.csv,
/// input_pupils.csv, input_schools.csv and summary.json. Output bytes
/// depend only on the analysis. Errors: IoFailure.
void write_reports(const RunAnalysis& analysis, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Score files, comparison and gap reports
// ---------------------------------------------------------------------------

struct ScoreFileRow {
  std::string school_id;
  std::size_t n_pupils = 0;
  double score = 0.0;
  bool significant = false;
};

/// Reads a school score file (scores_base.csv layout). Only school_id and
/// score are required; n_pupils and significant default to 0 / false.
/// Errors: IoFailure, SchemaMismatch, BadNumber, BadToken.
std::vector<ScoreFileRow> load_score_file(const std::filesystem::path& path);

struct Comparison {
  std::vector<std::string> school_ids;  // ascending
  RankReport ranks;
  TransitionTable transitions;
};

/// Joins two score files on school_id. Errors: LengthMismatch if the school
/// sets differ, plus rank_movement errors.
Comparison compare_scores(const std::vector<ScoreFileRow>& a, const std::vector<ScoreFileRow>& b,
                          std::span<const std::size_t> thresholds = kDefaultRankThresholds);

std::string format_comparison_json(const Comparison& comparison);
std::string format_transitions_csv(const TransitionTable& table);
std::string format_gaps_csv(const GapPair& gaps);

/// Recomputes one gap report from the input copies written into a finished
/// run directory. Refits both specifications so the result matches the run.
GapPair gaps_from_run_dir(const std::filesystem::path& out_dir, Characteristic characteristic);

}  // namespace vamod
