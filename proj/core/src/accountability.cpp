#include "vamod/accountability.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace vamod {

std::string_view band_token(Band band) {
  switch (band) {
    case Band::well_below: return "well_below";
    case Band::below: return "below";
    case Band::average: return "average";
    case Band::above: return "above";
    case Band::well_above: return "well_above";
  }
  return "average";
}

Band parse_band(std::string_view token) {
  for (int b = 1; b <= static_cast<int>(kBandCount); ++b)
    if (band_token(static_cast<Band>(b)) == token) return static_cast<Band>(b);
  throw Error(ErrorCode::BadToken, "unknown band '" + std::string(token) + "'");
}

Band band_of(double score, bool significant) {
  if (!significant || score == 0.0) return Band::average;
  if (score >= kBandCut) return Band::well_above;
  if (score > 0.0) return Band::above;
  if (score >= -kBandCut) return Band::below;
  return Band::well_below;
}

std::vector<BandedSchool> band_schools(std::span<const SchoolScore> scores) {
  std::vector<BandedSchool> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    const Band b = band_of(s.score, s.significant);
    out.push_back({s.school_id, b, b == Band::well_below});
  }
  return out;
}

TransitionTable transition_table(std::span<const Band> bands_a, std::span<const Band> bands_b) {
  if (bands_a.size() != bands_b.size()) throw Error(ErrorCode::LengthMismatch, "band vectors differ in length");
  TransitionTable t;
  for (std::size_t i = 0; i < bands_a.size(); ++i) {
    const auto a = band_index(bands_a[i]);
    const auto b = band_index(bands_b[i]);
    ++t.counts[a][b];
    ++t.row_totals[a];
    ++t.column_totals[b];
    if (a != b) ++t.changed;
  }
  t.grand_total = bands_a.size();
  for (std::size_t a = 0; a < kBandCount; ++a) {
    if (t.row_totals[a] == 0) continue;
    for (std::size_t b = 0; b < kBandCount; ++b)
      t.row_percent[a][b] = 100.0 * static_cast<double>(t.counts[a][b]) / static_cast<double>(t.row_totals[a]);
  }
  t.changed_share = t.grand_total ? static_cast<double>(t.changed) / static_cast<double>(t.grand_total) : 0.0;
  return t;
}

RankReport rank_movement(std::span<const double> scores_a, std::span<const double> scores_b,
                         std::span<const std::size_t> thresholds) {
  if (scores_a.size() != scores_b.size()) throw Error(ErrorCode::LengthMismatch, "score vectors differ in length");
  if (scores_a.size() < 2) throw Error(ErrorCode::EmptyInput, "rank movement needs at least two schools");
  RankReport r;
  r.rank_a = rank_competition(scores_a);
  r.rank_b = rank_competition(scores_b);
  r.delta.resize(scores_a.size());
  for (std::size_t i = 0; i < scores_a.size(); ++i)
    r.delta[i] = static_cast<long long>(r.rank_a[i]) - static_cast<long long>(r.rank_b[i]);
  for (std::size_t t : thresholds) {
    std::size_t count = 0;
    for (long long d : r.delta)
      if (static_cast<std::size_t>(std::llabs(d)) >= t) ++count;
    r.threshold_counts.emplace_back(t, count);
  }
  r.pearson = pearson_corr(scores_a, scores_b);
  r.spearman = spearman_corr(scores_a, scores_b);
  return r;
}

GroupGapReport group_gaps(std::span<const double> pupil_scores, const Cohort& cohort, Characteristic characteristic) {
  if (pupil_scores.size() != cohort.n_pupils())
    throw Error(ErrorCode::LengthMismatch, "pupil scores must follow cohort order");

  const auto names = characteristic_categories(characteristic);
  const auto levels = categories_of(characteristic, cohort);
  const auto& pupils = cohort.pupils();

  std::vector<double> sums(names.size(), 0.0);
  std::vector<std::size_t> counts(names.size(), 0);
  std::vector<std::set<std::string_view>> schools(names.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pupils.size(); ++i) {
    sums[levels[i]] += pupil_scores[i];
    ++counts[levels[i]];
    schools[levels[i]].insert(pupils[i].school_id);
    total += pupil_scores[i];
  }

  std::vector<std::size_t> present;
  for (std::size_t c = 0; c < names.size(); ++c)
    if (counts[c] > 0) present.push_back(c);
  if (present.size() < 2)
    throw Error(ErrorCode::SingleCategory,
                "characteristic '" + std::string(characteristic_name(characteristic)) + "' has fewer than two categories");

  GroupGapReport report;
  report.characteristic = characteristic;
  report.overall_mean = total / static_cast<double>(pupils.size());
  for (std::size_t c : present)
    report.categories.push_back({names[c], counts[c], schools[c].size(), sums[c] / static_cast<double>(counts[c])});
  std::stable_sort(report.categories.begin(), report.categories.end(),
                   [](const CategoryGap& a, const CategoryGap& b) { return a.mean > b.mean; });

  // Regression on intercept + dummies for every present category but the first.
  const auto n = static_cast<Eigen::Index>(pupils.size());
  const auto k = static_cast<Eigen::Index>(present.size());
  std::vector<Eigen::Index> column(names.size(), -1);
  std::vector<std::string> labels{std::string(kInterceptLabel)};
  for (std::size_t j = 1; j < present.size(); ++j) {
    column[present[j]] = static_cast<Eigen::Index>(j);
    labels.push_back(names[present[j]]);
  }
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd y(n);
  std::vector<std::string> clusters(pupils.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    if (column[levels[ui]] > 0) X(i, column[levels[ui]]) = 1.0;
    y(i) = pupil_scores[ui];
    clusters[ui] = pupils[ui].school_id;
  }
  const FittedModel fit = fit_ols(X, y, labels);
  const ClusterRobustCov cov = cluster_robust_cov(fit, X, clusters);
  const std::vector<std::string> tested(labels.begin() + 1, labels.end());
  report.test = wald_test_reduced_rank(fit, cov, tested);
  return report;
}

GroupGapReport group_gaps(std::span<const double> pupil_scores, const Cohort& cohort, std::string_view characteristic) {
  const auto c = characteristic_from_name(characteristic);
  if (!c) throw Error(ErrorCode::UnknownCharacteristic, "unknown characteristic '" + std::string(characteristic) + "'");
  return group_gaps(pupil_scores, cohort, *c);
}

void order_like(GroupGapReport& report, const GroupGapReport& reference) {
  auto position = [&](const std::string& cat) {
    for (std::size_t i = 0; i < reference.categories.size(); ++i)
      if (reference.categories[i].category == cat) return i;
    return reference.categories.size();
  };
  std::stable_sort(report.categories.begin(), report.categories.end(),
                   [&](const CategoryGap& a, const CategoryGap& b) { return position(a.category) < position(b.category); });
}

}  // namespace vamod
