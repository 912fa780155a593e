#include "vamod/design.hpp"

#include <algorithm>
#include <cmath>

#include "vamod/parallel.hpp"

namespace vamod {

const std::array<double, kKs2Groups>& ks2_representative_values() {
  static constexpr std::array<double, kKs2Groups> kValues{
      1.50, 2.00, 2.50, 2.80, 2.90, 3.00, 3.10, 3.20, 3.30, 3.40, 3.50, 3.60,
      3.70, 3.80, 3.90, 4.00, 4.10, 4.20, 4.30, 4.40, 4.50, 4.60, 4.70, 4.80,
      4.90, 5.00, 5.10, 5.20, 5.30, 5.40, 5.50, 5.60, 5.70, 5.80,
  };
  return kValues;
}

Ks2Band ks2_band_of(double ks2) {
  if (std::isnan(ks2) || ks2 < kKs2InputMin || ks2 > kKs2InputMax)
    throw Error(ErrorCode::InvalidKs2, "ks2 value " + std::to_string(ks2) + " outside [0, 6]");

  constexpr double kTieTolerance = 1e-9;
  const auto& reps = ks2_representative_values();
  const double x = std::clamp(ks2, reps.front(), reps.back());
  for (int g = 0; g + 1 < kKs2Groups; ++g) {
    const double to_lower = x - reps[g];
    const double to_upper = reps[g + 1] - x;
    if (to_lower <= to_upper + kTieTolerance) return {g + 1, reps[g]};
  }
  return {kKs2Groups, reps.back()};
}

// ---------------------------------------------------------------------------
// Characteristics
// ---------------------------------------------------------------------------

namespace {

struct CharacteristicInfo {
  Characteristic c;
  std::string_view name;
};

constexpr std::array<CharacteristicInfo, 15> kCharacteristics{{
    {Characteristic::ks2_group, "ks2_group"},
    {Characteristic::month, "month"},
    {Characteristic::gender, "gender"},
    {Characteristic::ethnicity, "ethnicity"},
    {Characteristic::language, "language"},
    {Characteristic::sen, "sen"},
    {Characteristic::fsm, "fsm"},
    {Characteristic::idaci, "idaci"},
    {Characteristic::region, "region"},
    {Characteristic::school_type, "school_type"},
    {Characteristic::admissions, "admissions"},
    {Characteristic::age_range, "age_range"},
    {Characteristic::school_gender, "school_gender"},
    {Characteristic::religion, "religion"},
    {Characteristic::school_idaci, "school_idaci"},
}};

template <typename E>
std::vector<std::string> tokens_of() {
  const auto& t = EnumTraits<E>::tokens();
  return {t.begin(), t.end()};
}

std::vector<std::string> numbered(std::string_view prefix, int first, int last) {
  std::vector<std::string> out;
  for (int i = first; i <= last; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

}  // namespace

std::string_view characteristic_name(Characteristic c) {
  for (const auto& info : kCharacteristics)
    if (info.c == c) return info.name;
  return "unknown";
}

std::optional<Characteristic> characteristic_from_name(std::string_view name) {
  for (const auto& info : kCharacteristics)
    if (info.name == name) return info.c;
  return std::nullopt;
}

bool is_school_level(Characteristic c) { return static_cast<int>(c) >= static_cast<int>(Characteristic::region); }

std::vector<std::string> characteristic_categories(Characteristic c) {
  switch (c) {
    case Characteristic::ks2_group: return numbered("g", 1, kKs2Groups);
    case Characteristic::month: return tokens_of<Month>();
    case Characteristic::gender: return tokens_of<Gender>();
    case Characteristic::ethnicity: return tokens_of<Ethnicity>();
    case Characteristic::language: return tokens_of<Language>();
    case Characteristic::sen: return tokens_of<Sen>();
    case Characteristic::fsm: return tokens_of<Fsm>();
    case Characteristic::idaci: return numbered("", 1, 10);
    case Characteristic::region: return tokens_of<Region>();
    case Characteristic::school_type: return tokens_of<SchoolType>();
    case Characteristic::admissions: return tokens_of<Admissions>();
    case Characteristic::age_range: return tokens_of<AgeRange>();
    case Characteristic::school_gender: return tokens_of<SchoolGender>();
    case Characteristic::religion: return tokens_of<Religion>();
    case Characteristic::school_idaci: return numbered("", 1, 10);
  }
  return {};
}

std::size_t category_of(Characteristic c, const PupilRecord& p, const SchoolRecord& s) {
  auto idx = [](auto e) { return static_cast<std::size_t>(e); };
  switch (c) {
    case Characteristic::ks2_group: return static_cast<std::size_t>(ks2_band_of(p.ks2).group - 1);
    case Characteristic::month: return idx(p.month);
    case Characteristic::gender: return idx(p.gender);
    case Characteristic::ethnicity: return idx(p.ethnicity);
    case Characteristic::language: return idx(p.language);
    case Characteristic::sen: return idx(p.sen);
    case Characteristic::fsm: return idx(p.fsm);
    case Characteristic::idaci: return static_cast<std::size_t>(p.idaci_decile - 1);
    case Characteristic::region: return idx(s.region);
    case Characteristic::school_type: return idx(s.school_type);
    case Characteristic::admissions: return idx(s.admissions);
    case Characteristic::age_range: return idx(s.age_range);
    case Characteristic::school_gender: return idx(s.school_gender);
    case Characteristic::religion: return idx(s.religion);
    case Characteristic::school_idaci: return static_cast<std::size_t>(s.school_idaci_decile - 1);
  }
  return 0;
}

std::vector<std::size_t> categories_of(Characteristic c, const Cohort& cohort) {
  std::vector<std::size_t> out;
  out.reserve(cohort.n_pupils());
  for (const auto& p : cohort.pupils()) out.push_back(category_of(c, p, cohort.school_of(p)));
  return out;
}

// ---------------------------------------------------------------------------
// Specifications
// ---------------------------------------------------------------------------

std::string_view spec_name_token(SpecName name) { return name == SpecName::base ? "base" : "adjusted"; }

SpecName parse_spec_name(std::string_view token) {
  if (token == "base") return SpecName::base;
  if (token == "adjusted") return SpecName::adjusted;
  throw Error(ErrorCode::UnknownSpec, "unknown model specification '" + std::string(token) + "'");
}

std::size_t ModelSpec::n_coefficients() const {
  std::size_t k = includes_intercept ? 1 : 0;
  for (const auto& f : factors) k += f.column_labels.size();
  return k;
}

std::vector<std::string> ModelSpec::column_labels() const {
  std::vector<std::string> labels;
  labels.reserve(n_coefficients());
  if (includes_intercept) labels.emplace_back(kInterceptLabel);
  for (const auto& f : factors) labels.insert(labels.end(), f.column_labels.begin(), f.column_labels.end());
  return labels;
}

namespace {

// Column-label suffixes that differ from the category token.
std::string label_suffix(Characteristic c, const std::string& token) {
  if (c == Characteristic::sen && token == "sen_support") return "support";
  return token;
}

Factor make_factor(Characteristic c, std::string_view prefix) {
  Factor f{c, std::string(prefix), characteristic_categories(c), {}};
  for (std::size_t i = 1; i < f.categories.size(); ++i)
    f.column_labels.push_back(f.name + "_" + label_suffix(c, f.categories[i]));
  return f;
}

}  // namespace

ModelSpec model_spec(SpecName name) {
  ModelSpec spec;
  spec.name = name;
  spec.factors.push_back(make_factor(Characteristic::ks2_group, "ks2"));
  if (name == SpecName::adjusted) {
    spec.factors.push_back(make_factor(Characteristic::month, "month"));
    spec.factors.push_back(make_factor(Characteristic::gender, "gender"));
    spec.factors.push_back(make_factor(Characteristic::ethnicity, "ethnicity"));
    spec.factors.push_back(make_factor(Characteristic::language, "language"));
    spec.factors.push_back(make_factor(Characteristic::sen, "sen"));
    spec.factors.push_back(make_factor(Characteristic::fsm, "fsm"));
    spec.factors.push_back(make_factor(Characteristic::idaci, "idaci"));
  }
  return spec;
}

ModelSpec model_spec(std::string_view name) { return model_spec(parse_spec_name(name)); }

std::optional<Eigen::Index> DesignMatrix::column_of(std::string_view label) const {
  for (std::size_t j = 0; j < column_labels.size(); ++j)
    if (column_labels[j] == label) return static_cast<Eigen::Index>(j);
  return std::nullopt;
}

Design build_design(const Cohort& cohort, const ModelSpec& spec) {
  const auto n = static_cast<Eigen::Index>(cohort.n_pupils());
  Design design;
  design.matrix.column_labels = spec.column_labels();
  const auto k = static_cast<Eigen::Index>(design.matrix.column_labels.size());
  design.matrix.values = Eigen::MatrixXd::Zero(n, k);
  design.response.resize(n);
  design.cluster_ids.resize(cohort.n_pupils());

  // First column of each factor's dummy block.
  std::vector<Eigen::Index> offsets;
  Eigen::Index next = spec.includes_intercept ? 1 : 0;
  for (const auto& f : spec.factors) {
    offsets.push_back(next);
    next += static_cast<Eigen::Index>(f.column_labels.size());
  }

  const auto& pupils = cohort.pupils();
  auto& X = design.matrix.values;
  parallel_for(cohort.n_pupils(), [&](std::size_t i) {
    const auto& p = pupils[i];
    const auto& school = cohort.school_of(p);
    const auto row = static_cast<Eigen::Index>(i);
    if (spec.includes_intercept) X(row, 0) = 1.0;
    for (std::size_t fi = 0; fi < spec.factors.size(); ++fi) {
      std::size_t level = 0;
      try {
        level = category_of(spec.factors[fi].characteristic, p, school);
      } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " at row " + std::to_string(i), i);
      }
      if (level > 0) X(row, offsets[fi] + static_cast<Eigen::Index>(level) - 1) = 1.0;
    }
    design.response(row) = p.attainment8;
    design.cluster_ids[i] = p.school_id;
  });
  return design;
}

}  // namespace vamod
