#pragma once

// Mapping from pupil records to regression terms: KS2 prior-attainment
// banding, reference-category dummy coding and the two model specifications.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vamod/cohort.hpp"

namespace vamod {

inline constexpr int kKs2Groups = 34;

struct Ks2Band {
  int group = 1;                    // 1..34
  double representative_value = 0;  // fine points

  friend bool operator==(const Ks2Band&, const Ks2Band&) = default;
};

/// Representative KS2 fine-point value for each of the 34 groups.
const std::array<double, kKs2Groups>& ks2_representative_values();

/// Clamps to [1.50, 5.80] and returns the group with the nearest
/// representative value. Midpoints between two representative values go to
/// the lower group; distances within 1e-9 are treated as a tie so that
/// decimal midpoints such as 2.65 behave as written.
///
/// Errors: InvalidKs2 for NaN or values outside [0, 6].
Ks2Band ks2_band_of(double ks2);

// ---------------------------------------------------------------------------
// Characteristics (pupil- and school-level categorical attributes)
// ---------------------------------------------------------------------------

enum class Characteristic {
  // pupil-level
  ks2_group,
  month,
  gender,
  ethnicity,
  language,
  sen,
  fsm,
  idaci,
  // school-level
  region,
  school_type,
  admissions,
  age_range,
  school_gender,
  religion,
  school_idaci,
};

inline constexpr std::array<Characteristic, 7> kAdjustmentCharacteristics{
    Characteristic::month, Characteristic::gender, Characteristic::ethnicity, Characteristic::language,
    Characteristic::sen,   Characteristic::fsm,    Characteristic::idaci,
};

inline constexpr std::array<Characteristic, 7> kSchoolCharacteristics{
    Characteristic::region,        Characteristic::school_type, Characteristic::admissions,
    Characteristic::age_range,     Characteristic::school_gender, Characteristic::religion,
    Characteristic::school_idaci,
};

std::string_view characteristic_name(Characteristic c);
std::optional<Characteristic> characteristic_from_name(std::string_view name);
bool is_school_level(Characteristic c);

/// Category tokens in canonical order; index 0 is the reference category.
std::vector<std::string> characteristic_categories(Characteristic c);

/// Category index of one pupil (school-level characteristics resolve through
/// the pupil's school). Errors: InvalidKs2 for ks2_group.
std::size_t category_of(Characteristic c, const PupilRecord& pupil, const SchoolRecord& school);

/// Category index per pupil, in cohort order.
std::vector<std::size_t> categories_of(Characteristic c, const Cohort& cohort);

// ---------------------------------------------------------------------------
// Model specifications
// ---------------------------------------------------------------------------

enum class SpecName { base, adjusted };

std::string_view spec_name_token(SpecName name);
/// Errors: UnknownSpec.
SpecName parse_spec_name(std::string_view token);

struct Factor {
  Characteristic characteristic;
  std::string name;                         // column-label prefix
  std::vector<std::string> categories;      // tokens; [0] is the reference
  std::vector<std::string> column_labels;   // one per non-reference category
};

struct ModelSpec {
  SpecName name = SpecName::base;
  std::vector<Factor> factors;
  bool includes_intercept = true;

  std::size_t n_coefficients() const;
  /// "const" followed by every factor's dummy labels in factor order.
  std::vector<std::string> column_labels() const;
};

inline constexpr std::string_view kInterceptLabel = "const";

ModelSpec model_spec(SpecName name);
/// Errors: UnknownSpec.
ModelSpec model_spec(std::string_view name);

struct DesignMatrix {
  Eigen::MatrixXd values;  // N x K, column 0 is the intercept
  std::vector<std::string> column_labels;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// Column index for a label, if present.
  std::optional<Eigen::Index> column_of(std::string_view label) const;
};

struct Design {
  DesignMatrix matrix;
  Eigen::VectorXd response;              // raw Attainment 8 points
  std::vector<std::string> cluster_ids;  // school_id per row
};

/// Rows follow cohort pupil order. Errors: InvalidKs2 with the 0-based row.
Design build_design(const Cohort& cohort, const ModelSpec& spec);

}  // namespace vamod
