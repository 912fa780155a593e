#include "vamod/valueadded.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace vamod {

std::vector<double> PipelineResult::pupil_score_values() const {
  std::vector<double> v;
  v.reserve(pupil_scores.size());
  for (const auto& p : pupil_scores) v.push_back(p.score);
  return v;
}

namespace {

double sample_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

PipelineResult run_pipeline(const Cohort& cohort, SpecName spec_name) {
  const ModelSpec spec = model_spec(spec_name);
  Design design = build_design(cohort, spec);

  PipelineResult result;
  result.spec = spec_name;

  // Dummies for categories nobody falls in carry no information.
  auto& X = design.matrix.values;
  std::vector<Eigen::Index> keep;
  std::vector<std::string> labels;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto& label = design.matrix.column_labels[static_cast<std::size_t>(j)];
    if (j > 0 && X.col(j).cwiseAbs().sum() == 0.0) {
      result.dropped_columns.push_back(label);
    } else {
      keep.push_back(j);
      labels.push_back(label);
    }
  }
  if (!result.dropped_columns.empty()) {
    Eigen::MatrixXd reduced(X.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) reduced.col(static_cast<Eigen::Index>(c)) = X.col(keep[c]);
    X = std::move(reduced);
  }

  result.fit = fit_ols(X, design.response, std::move(labels));

  const auto& pupils = cohort.pupils();
  result.pupil_scores.reserve(pupils.size());
  std::vector<double> scores(pupils.size());
  for (std::size_t i = 0; i < pupils.size(); ++i) {
    scores[i] = result.fit.residuals(static_cast<Eigen::Index>(i)) / kPointsPerGrade;
    result.pupil_scores.push_back({pupils[i].pupil_id, scores[i]});
  }
  result.national_sd = sample_sd(scores);
  result.school_scores = school_scores(scores, design.cluster_ids, result.national_sd);
  return result;
}

std::vector<SchoolScore> school_scores(std::span<const double> pupil_scores,
                                       std::span<const std::string> school_ids, double national_sd) {
  if (pupil_scores.size() != school_ids.size())
    throw Error(ErrorCode::LengthMismatch, "every pupil score needs a school");
  if (pupil_scores.empty()) throw Error(ErrorCode::EmptyInput, "no pupil scores");
  if (!(national_sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "national pupil-score SD must be positive");

  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string_view, Acc> acc;
  for (std::size_t i = 0; i < pupil_scores.size(); ++i) {
    auto& a = acc[school_ids[i]];
    a.sum += pupil_scores[i];
    ++a.n;
  }

  std::vector<SchoolScore> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    SchoolScore s;
    s.school_id = std::string(id);
    s.n_pupils = a.n;
    s.score = a.sum / static_cast<double>(a.n);
    s.se = national_sd / std::sqrt(static_cast<double>(a.n));
    s.ci_low = s.score - kZ95 * s.se;
    s.ci_high = s.score + kZ95 * s.se;
    s.significant = std::abs(s.score) > kZ95 * s.se;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const SchoolScore& a, const SchoolScore& b) { return a.score > b.score; });
  return out;
}

ShrinkageEstimates shrink_school_scores(std::span<const double> pupil_scores,
                                        std::span<const std::string> school_ids) {
  if (pupil_scores.size() != school_ids.size())
    throw Error(ErrorCode::LengthMismatch, "every pupil score needs a school");

  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    double mean = 0.0;
    double ss = 0.0;
  };
  std::map<std::string_view, Acc> acc;
  for (std::size_t i = 0; i < pupil_scores.size(); ++i) {
    auto& a = acc[school_ids[i]];
    a.sum += pupil_scores[i];
    ++a.n;
  }
  if (acc.size() < 2) throw Error(ErrorCode::TooFewSchools, "shrinkage needs at least two schools");

  double grand_sum = 0.0;
  for (auto& [id, a] : acc) {
    a.mean = a.sum / static_cast<double>(a.n);
    grand_sum += a.sum;
  }
  for (std::size_t i = 0; i < pupil_scores.size(); ++i) {
    auto& a = acc[school_ids[i]];
    a.ss += (pupil_scores[i] - a.mean) * (pupil_scores[i] - a.mean);
  }

  const double n = static_cast<double>(pupil_scores.size());
  const double m = static_cast<double>(acc.size());
  if (n - m < 1.0) throw Error(ErrorCode::DegenerateWithin, "every school has a single pupil");

  const double grand_mean = grand_sum / n;
  double ssw = 0.0, ssb = 0.0, sum_n2 = 0.0;
  for (const auto& [id, a] : acc) {
    const double nj = static_cast<double>(a.n);
    ssw += a.ss;
    ssb += nj * (a.mean - grand_mean) * (a.mean - grand_mean);
    sum_n2 += nj * nj;
  }

  ShrinkageEstimates est;
  est.sigma2_within = ssw / (n - m);
  if (!(est.sigma2_within > 0.0)) throw Error(ErrorCode::DegenerateWithin, "within-school variance is zero");
  const double msb = ssb / (m - 1.0);
  est.n0 = (n - sum_n2 / n) / (m - 1.0);
  est.sigma2_between = std::max(0.0, (msb - est.sigma2_within) / est.n0);

  est.schools.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    ShrunkSchool s;
    s.school_id = std::string(id);
    s.n_pupils = a.n;
    s.raw_score = a.mean;
    s.lambda = est.sigma2_between / (est.sigma2_between + est.sigma2_within / static_cast<double>(a.n));
    s.shrunk_score = s.lambda * s.raw_score;
    est.schools.push_back(std::move(s));
  }
  return est;
}

}  // namespace vamod
