#include "vamod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vamod/parallel.hpp"
#include "vamod/valueadded.hpp"

namespace vamod {

namespace {

std::vector<double> normalised(std::initializer_list<double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> p;
  for (double c : counts) p.push_back(c / total);
  return p;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

}  // namespace

// ---------------------------------------------------------------------------
// Published marginals (pupil counts; school counts for school attributes)
// ---------------------------------------------------------------------------

std::vector<double> default_marginal(Characteristic c) {
  switch (c) {
    case Characteristic::ks2_group:
      return normalised({960,   1164,  7692,  3133,  2413,  2417,  3287,  3359,  4757,  5228,  6357,  7499,
                         8337,  10041, 12033, 13679, 16026, 19589, 23473, 25852, 29549, 30450, 30669, 31371,
                         30990, 29952, 28983, 27346, 24938, 21913, 18167, 12225, 6505,  2497});
    case Characteristic::month:
      return normalised({43346, 41981, 41113, 42700, 42124, 38949, 42158, 40458, 42601, 40983, 43493, 42945});
    case Characteristic::gender: return normalised({253733, 249118});
    case Characteristic::ethnicity:
      return normalised({380949, 1606, 104, 659, 17129, 14379, 6650, 2690, 12426, 18722,
                         7709,   6900, 1585, 2390, 6873, 4656, 6983, 6198, 2098, 2145});
    case Characteristic::language: return normalised({438585, 64266});
    case Characteristic::sen: return normalised({436229, 55601, 11021});
    case Characteristic::fsm: return normalised({369147, 133704});
    case Characteristic::idaci:
      return normalised({50289, 51790, 49086, 51072, 50340, 49321, 50172, 50853, 49761, 50167});
    case Characteristic::region: return normalised({431, 474, 309, 373, 447, 152, 298, 269, 345});
    case Characteristic::school_type: return normalised({538, 275, 273, 34, 3, 560, 1320, 27, 30, 26, 12});
    case Characteristic::admissions: return normalised({2819, 162, 117});
    case Characteristic::age_range: return normalised({1881, 971, 135, 83, 28});
    case Characteristic::school_gender: return normalised({2738, 151, 209});
    case Characteristic::religion: return normalised({2524, 176, 310, 68, 11, 8, 1});
    case Characteristic::school_idaci: return normalised({288, 329, 313, 303, 325, 332, 327, 320, 289, 272});
  }
  return {};
}

std::map<std::string, double> default_coefficients() {
  static constexpr double kKs2[] = {5.52,  6.73,  7.71,  9.29,  9.86,  10.84, 11.67, 13.04, 13.63, 14.75, 16.03,
                                    17.22, 18.48, 20.09, 21.24, 22.72, 24.18, 25.86, 27.38, 28.89, 30.76, 32.53,
                                    34.40, 36.18, 37.87, 39.94, 41.92, 43.93, 46.11, 48.27, 50.69, 52.90, 54.91};
  static constexpr double kMonth[] = {0.15, 0.35, 0.42, 0.59, 0.78, 0.99, 1.12, 1.21, 1.30, 1.49, 1.62};
  static constexpr double kEthnicity[] = {2.02, -6.92, -5.63, 3.90, 5.42, 1.80, 3.75, 4.16, 1.93, 4.49,
                                          4.71, 6.26,  2.46,  0.04, 2.08, 2.32, 5.67, -0.14, 1.36};
  static constexpr double kIdaci[] = {-0.22, -0.79, -1.28, -1.87, -2.66, -2.99, -3.43, -3.82, -4.52};

  const ModelSpec spec = model_spec(SpecName::adjusted);
  std::map<std::string, double> coef;
  coef[std::string(kInterceptLabel)] = 19.74;
  auto fill = [&](const Factor& f, const double* values) {
    for (std::size_t i = 0; i < f.column_labels.size(); ++i) coef[f.column_labels[i]] = values[i];
  };
  for (const auto& f : spec.factors) {
    switch (f.characteristic) {
      case Characteristic::ks2_group: fill(f, kKs2); break;
      case Characteristic::month: fill(f, kMonth); break;
      case Characteristic::ethnicity: fill(f, kEthnicity); break;
      case Characteristic::idaci: fill(f, kIdaci); break;
      default: break;
    }
  }
  coef["gender_female"] = 2.44;
  coef["language_english_additional"] = 2.55;
  coef["sen_support"] = -4.42;
  coef["sen_statement"] = -6.88;
  coef["fsm_eligible"] = -4.01;
  return coef;
}

namespace {

constexpr std::array<Characteristic, 8> kPupilDraws{
    Characteristic::ks2_group, Characteristic::month, Characteristic::gender, Characteristic::ethnicity,
    Characteristic::language,  Characteristic::sen,   Characteristic::fsm,    Characteristic::idaci,
};

}  // namespace

SynthConfig default_synth_config() {
  SynthConfig config;
  for (auto c : kPupilDraws) config.marginals[c] = default_marginal(c);
  for (auto c : kSchoolCharacteristics) config.marginals[c] = default_marginal(c);
  config.coefficients = default_coefficients();
  apply_calibration(config, 1.06, 0.40, 162);
  return config;
}

void validate_config(const SynthConfig& config) {
  if (config.n_schools < 2) invalid("n_schools must be at least 2");
  if (!(config.school_size.median >= 1.0)) invalid("school size median must be >= 1");
  if (!(config.school_size.log_sd >= 0.0)) invalid("school size log_sd must be >= 0");
  if (config.school_size.min < 1) invalid("school size min must be >= 1");
  if (!(config.sigma_u >= 0.0) || !std::isfinite(config.sigma_u)) invalid("sigma_u must be >= 0");
  if (!(config.sigma_e >= 0.0) || !std::isfinite(config.sigma_e)) invalid("sigma_e must be >= 0");

  auto check_marginal = [&](Characteristic c) {
    auto it = config.marginals.find(c);
    if (it == config.marginals.end()) invalid("missing marginal for " + std::string(characteristic_name(c)));
    const auto& p = it->second;
    if (p.size() != characteristic_categories(c).size())
      invalid("marginal for " + std::string(characteristic_name(c)) + " has wrong category count");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) invalid("negative probability in " + std::string(characteristic_name(c)));
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) invalid("probabilities for " + std::string(characteristic_name(c)) + " do not sum to 1");
  };
  for (auto c : kPupilDraws) check_marginal(c);
  for (auto c : kSchoolCharacteristics) check_marginal(c);

  const auto labels = model_spec(SpecName::adjusted).column_labels();
  for (const auto& [label, value] : config.coefficients) {
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) invalid("unknown coefficient label '" + label + "'");
    if (!std::isfinite(value)) invalid("non-finite coefficient '" + label + "'");
  }

  if (config.concentration) {
    const auto& k = *config.concentration;
    if (is_school_level(k.characteristic) || k.characteristic == Characteristic::ks2_group)
      invalid("concentration must target an adjustment characteristic");
    if (k.category >= characteristic_categories(k.characteristic).size()) invalid("concentration category out of range");
    for (double v : {k.school_share, k.share_in, k.share_out})
      if (!(v >= 0.0 && v <= 1.0)) invalid("concentration shares must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Variance calibration
// ---------------------------------------------------------------------------

VarianceCalibration calibrate_variances(double target_pupil_sd, double target_school_sd, int typical_n) {
  if (!(target_school_sd > 0.0) || !(target_pupil_sd > target_school_sd) || typical_n < 2)
    throw Error(ErrorCode::Infeasible, "need 0 < school SD < pupil SD and typical_n >= 2");
  const double n = static_cast<double>(typical_n);
  const double pupil2 = target_pupil_sd * target_pupil_sd;
  const double school2 = target_school_sd * target_school_sd;
  const double shrink = 1.0 - 1.0 / n;
  const double sigma_u2 = (school2 - pupil2 / n) / shrink;
  if (sigma_u2 < 0.0) throw Error(ErrorCode::Infeasible, "school SD below the pure-sampling floor pupil_sd / sqrt(n)");
  const double within2 = (pupil2 - school2) / shrink;

  VarianceCalibration out;
  out.sigma_u = std::sqrt(sigma_u2);
  out.within_sd = std::sqrt(within2);
  out.sigma_e = kPointsPerGrade * out.within_sd;
  return out;
}

double covariate_variance(const SynthConfig& config) {
  const ModelSpec spec = model_spec(SpecName::adjusted);
  double total = 0.0;
  for (const auto& f : spec.factors) {
    if (f.characteristic == Characteristic::ks2_group) continue;
    const auto& p = config.marginals.at(f.characteristic);
    double mean = 0.0, second = 0.0;
    for (std::size_t c = 1; c < p.size(); ++c) {
      auto it = config.coefficients.find(f.column_labels[c - 1]);
      const double beta = it == config.coefficients.end() ? 0.0 : it->second;
      mean += p[c] * beta;
      second += p[c] * beta * beta;
    }
    total += second - mean * mean;
  }
  return total;
}

double noise_sd_for_within(const SynthConfig& config, double within_sd_points) {
  const double v = within_sd_points * within_sd_points - covariate_variance(config);
  if (!(v > 0.0)) throw Error(ErrorCode::Infeasible, "covariates alone exceed the target within-school variance");
  return std::sqrt(v);
}

void apply_calibration(SynthConfig& config, double target_pupil_sd, double target_school_sd, int typical_n) {
  const auto cal = calibrate_variances(target_pupil_sd, target_school_sd, typical_n);
  config.sigma_u = cal.sigma_u;
  config.sigma_e = noise_sd_for_within(config, cal.sigma_e);
}

// ---------------------------------------------------------------------------
// Random stream
// ---------------------------------------------------------------------------

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t school, std::uint64_t slot)
    : key_(splitmix64(splitmix64(splitmix64(seed) ^ school) ^ (slot * 0xd1b54a32d192ed03ULL))) {}

std::uint64_t CounterStream::next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

double CounterStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t CounterStream::categorical(const std::vector<double>& cumulative) {
  const double u = uniform() * cumulative.back();
  for (std::size_t i = 0; i < cumulative.size(); ++i)
    if (u < cumulative[i]) return i;
  return cumulative.size() - 1;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) c[i] = (s += p[i]);
  return c;
}

std::vector<double> concentrate(std::vector<double> p, std::size_t category, double share) {
  const double rest = 1.0 - p[category];
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == category) continue;
    p[i] = rest > 0.0 ? p[i] * (1.0 - share) / rest : (1.0 - share) / static_cast<double>(p.size() - 1);
  }
  p[category] = share;
  return p;
}

std::string padded(std::size_t value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

struct Tables {
  std::map<Characteristic, std::vector<double>> cum;
  std::map<Characteristic, std::vector<double>> cum_in;   // concentrated schools
  std::map<Characteristic, std::vector<double>> cum_out;  // other schools
  // Coefficient per category for each pupil characteristic (reference = 0).
  std::map<Characteristic, std::vector<double>> effect;
  double intercept = 0.0;
};

Tables make_tables(const SynthConfig& config) {
  Tables t;
  for (const auto& [c, p] : config.marginals) t.cum[c] = cumulative(p);
  if (config.concentration) {
    const auto& k = *config.concentration;
    const auto& p = config.marginals.at(k.characteristic);
    t.cum_in[k.characteristic] = cumulative(concentrate(p, k.category, k.share_in));
    t.cum_out[k.characteristic] = cumulative(concentrate(p, k.category, k.share_out));
  }
  auto coef = [&](const std::string& label) {
    auto it = config.coefficients.find(label);
    return it == config.coefficients.end() ? 0.0 : it->second;
  };
  t.intercept = coef(std::string(kInterceptLabel));
  for (const auto& f : model_spec(SpecName::adjusted).factors) {
    std::vector<double> e(f.categories.size(), 0.0);
    for (std::size_t i = 1; i < f.categories.size(); ++i) e[i] = coef(f.column_labels[i - 1]);
    t.effect[f.characteristic] = std::move(e);
  }
  return t;
}

struct GeneratedSchool {
  SchoolRecord record;
  std::vector<PupilRecord> pupils;
};

GeneratedSchool generate_school(const SynthConfig& config, const Tables& t, std::size_t s) {
  GeneratedSchool out;
  CounterStream school_stream(config.seed, s, 0);

  const double z_size = school_stream.normal();
  const double raw_size = config.school_size.median * std::exp(config.school_size.log_sd * z_size);
  const auto size = static_cast<std::size_t>(std::max<double>(config.school_size.min, std::round(raw_size)));
  const double u = config.sigma_u * school_stream.normal();
  const bool concentrated = config.concentration && school_stream.uniform() < config.concentration->school_share;

  auto& r = out.record;
  r.school_id = "S" + padded(s + 1, 5);
  r.region = static_cast<Region>(school_stream.categorical(t.cum.at(Characteristic::region)));
  r.school_type = static_cast<SchoolType>(school_stream.categorical(t.cum.at(Characteristic::school_type)));
  r.admissions = static_cast<Admissions>(school_stream.categorical(t.cum.at(Characteristic::admissions)));
  r.age_range = static_cast<AgeRange>(school_stream.categorical(t.cum.at(Characteristic::age_range)));
  r.school_gender = static_cast<SchoolGender>(school_stream.categorical(t.cum.at(Characteristic::school_gender)));
  r.religion = static_cast<Religion>(school_stream.categorical(t.cum.at(Characteristic::religion)));
  r.school_idaci_decile = static_cast<int>(school_stream.categorical(t.cum.at(Characteristic::school_idaci))) + 1;

  const auto& reps = ks2_representative_values();
  out.pupils.reserve(size);
  for (std::size_t p = 0; p < size; ++p) {
    CounterStream stream(config.seed, s, p + 1);
    std::array<std::size_t, kPupilDraws.size()> level{};
    for (std::size_t d = 0; d < kPupilDraws.size(); ++d) {
      const auto c = kPupilDraws[d];
      const std::vector<double>* cum = &t.cum.at(c);
      if (config.concentration && config.concentration->characteristic == c)
        cum = concentrated ? &t.cum_in.at(c) : &t.cum_out.at(c);
      level[d] = stream.categorical(*cum);
    }

    PupilRecord rec;
    rec.pupil_id = r.school_id + "-" + padded(p + 1, 4);
    rec.school_id = r.school_id;
    rec.ks2 = reps[level[0]];
    rec.month = static_cast<Month>(level[1]);
    rec.gender = static_cast<Gender>(level[2]);
    rec.ethnicity = static_cast<Ethnicity>(level[3]);
    rec.language = static_cast<Language>(level[4]);
    rec.sen = static_cast<Sen>(level[5]);
    rec.fsm = static_cast<Fsm>(level[6]);
    rec.idaci_decile = static_cast<int>(level[7]) + 1;

    double mean = t.intercept;
    for (std::size_t d = 0; d < kPupilDraws.size(); ++d) mean += t.effect.at(kPupilDraws[d])[level[d]];
    const double a8 = mean + kPointsPerGrade * u + config.sigma_e * stream.normal();
    rec.attainment8 = std::clamp(a8, 0.0, kAttainment8Max);
    out.pupils.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

Cohort generate_cohort(const SynthConfig& config) {
  validate_config(config);
  const Tables tables = make_tables(config);

  std::vector<GeneratedSchool> schools(config.n_schools);
  parallel_for(config.n_schools, [&](std::size_t s) { schools[s] = generate_school(config, tables, s); }, 8);

  std::vector<PupilRecord> pupils;
  std::vector<SchoolRecord> records;
  std::size_t total = 0;
  for (const auto& s : schools) total += s.pupils.size();
  pupils.reserve(total);
  records.reserve(schools.size());
  for (auto& s : schools) {
    records.push_back(std::move(s.record));
    std::move(s.pupils.begin(), s.pupils.end(), std::back_inserter(pupils));
  }
  return validate_cohort(std::move(pupils), std::move(records));
}

}  // namespace vamod
