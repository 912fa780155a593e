#pragma once

// Deterministic synthetic cohorts. Defaults reproduce the national pupil and
// school marginals and the adjusted-model coefficients of the 2016 England
// Progress 8 cohort; every draw comes from a counter-based stream keyed on
// (seed, school, pupil), so output does not depend on thread count.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vamod/cohort.hpp"
#include "vamod/design.hpp"

namespace vamod {

struct SchoolSizeSpec {
  double median = 162.0;
  double log_sd = 0.5;  // SD of log size
  int min = 5;
};

/// Optional clustering of one pupil category into a subset of schools.
/// A school is "concentrated" with probability `school_share`; inside such
/// schools the category has probability `share_in`, elsewhere `share_out`.
/// The remaining categories keep their relative weights.
struct Concentration {
  Characteristic characteristic = Characteristic::language;
  std::size_t category = 1;
  double school_share = 0.2;
  double share_in = 0.6;
  double share_out = 0.05;
};

struct SynthConfig {
  std::size_t n_schools = 600;
  SchoolSizeSpec school_size;
  /// Category probabilities for ks2_group, the seven adjustment
  /// characteristics and the seven school characteristics.
  std::map<Characteristic, std::vector<double>> marginals;
  /// Adjusted-specification coefficients in Attainment 8 points, by label.
  std::map<std::string, double> coefficients;
  double sigma_u = 0.0;  // school effect SD, grades
  double sigma_e = 0.0;  // pupil noise SD, points; 0 gives a noise-free cohort
  std::uint64_t seed = 1;
  std::optional<Concentration> concentration;
};

/// Published marginals and coefficients with variances calibrated to pupil
/// SD 1.06 and school SD 0.40 at a typical school size of 162.
SynthConfig default_synth_config();

/// Published category proportions for one characteristic.
std::vector<double> default_marginal(Characteristic c);

/// Published adjusted-model coefficients keyed by column label.
std::map<std::string, double> default_coefficients();

/// Errors: InvalidConfig.
void validate_config(const SynthConfig& config);

/// Errors: InvalidConfig.
Cohort generate_cohort(const SynthConfig& config);

struct VarianceCalibration {
  double sigma_u = 0.0;     // grades
  double within_sd = 0.0;   // grades
  double sigma_e = 0.0;     // points, 10 * within_sd
};

/// Solves school_sd^2 = sigma_u^2 + s^2 / n and pupil_sd^2 = sigma_u^2 + s^2.
/// Errors: Infeasible.
VarianceCalibration calibrate_variances(double target_pupil_sd, double target_school_sd, int typical_n);

/// Variance (points^2) contributed by the seven adjustment characteristics
/// under the configured marginals, drawn independently.
double covariate_variance(const SynthConfig& config);

/// Pupil noise SD (points) that makes total within-school variation equal
/// `within_sd_points` once covariate variance is accounted for.
/// Errors: Infeasible.
double noise_sd_for_within(const SynthConfig& config, double within_sd_points);

/// Calibrates sigma_u and sigma_e of `config` in place.
void apply_calibration(SynthConfig& config, double target_pupil_sd, double target_school_sd, int typical_n);

// ---------------------------------------------------------------------------
// Counter-based random stream
// ---------------------------------------------------------------------------

class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t school, std::uint64_t slot);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  double normal();
  std::size_t categorical(const std::vector<double>& cumulative);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vamod
