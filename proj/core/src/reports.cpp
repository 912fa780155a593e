#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "text_util.hpp"
#include "vamod/io.hpp"

namespace vamod {

namespace {

using nlohmann::ordered_json;

double round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

const char* bool_token(bool b) { return b ? "true" : "false"; }

std::vector<Characteristic> default_gap_characteristics() {
  std::vector<Characteristic> out(kAdjustmentCharacteristics.begin(), kAdjustmentCharacteristics.end());
  out.insert(out.end(), kSchoolCharacteristics.begin(), kSchoolCharacteristics.end());
  return out;
}

// Cluster-robust SEs for a pipeline fit, rebuilding the kept design columns.
Eigen::VectorXd robust_se(const Cohort& cohort, const PipelineResult& result) {
  const Design design = build_design(cohort, model_spec(result.spec));
  Eigen::MatrixXd X(design.matrix.rows(), static_cast<Eigen::Index>(result.fit.labels.size()));
  for (std::size_t c = 0; c < result.fit.labels.size(); ++c)
    X.col(static_cast<Eigen::Index>(c)) = design.matrix.values.col(*design.matrix.column_of(result.fit.labels[c]));
  const auto cov = cluster_robust_cov(result.fit, X, design.cluster_ids);
  return cov.matrix.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::vector<std::string> pupil_school_ids(const Cohort& cohort) {
  std::vector<std::string> ids;
  ids.reserve(cohort.n_pupils());
  for (const auto& p : cohort.pupils()) ids.push_back(p.school_id);
  return ids;
}

std::map<std::string_view, const SchoolScore*> by_id(const std::vector<SchoolScore>& scores) {
  std::map<std::string_view, const SchoolScore*> m;
  for (const auto& s : scores) m.emplace(s.school_id, &s);
  return m;
}

GapPair gap_pair(const Cohort& cohort, const PipelineResult& base, const PipelineResult& adjusted, Characteristic c) {
  GapPair pair{group_gaps(base.pupil_score_values(), cohort, c), group_gaps(adjusted.pupil_score_values(), cohort, c)};
  order_like(pair.adjusted, pair.base);
  return pair;
}

ordered_json stats_json(const SummaryStats& s) {
  ordered_json j;
  j["n"] = s.n;
  j["mean"] = round6(s.mean);
  j["sd"] = round6(s.sd);
  j["min"] = round6(s.min);
  j["p10"] = round6(s.p10);
  j["p25"] = round6(s.p25);
  j["p50"] = round6(s.p50);
  j["p75"] = round6(s.p75);
  j["p90"] = round6(s.p90);
  j["max"] = round6(s.max);
  return j;
}

ordered_json transitions_json(const TransitionTable& t) {
  ordered_json j;
  ordered_json counts = ordered_json::array();
  for (const auto& row : t.counts) counts.push_back(row);
  j["bands"] = {"well_below", "below", "average", "above", "well_above"};
  j["counts"] = counts;
  j["row_totals"] = t.row_totals;
  j["column_totals"] = t.column_totals;
  j["grand_total"] = t.grand_total;
  j["changed"] = t.changed;
  j["changed_share"] = round6(t.changed_share);
  return j;
}

ordered_json ranks_json(const RankReport& r) {
  ordered_json j;
  j["pearson"] = round6(r.pearson);
  j["spearman"] = round6(r.spearman);
  ordered_json moves = ordered_json::array();
  for (const auto& [t, n] : r.threshold_counts) moves.push_back({{"threshold", t}, {"schools", n}});
  j["rank_movement"] = moves;
  return j;
}

ordered_json fit_json(const PipelineResult& r) {
  ordered_json j;
  j["n_obs"] = r.fit.n_obs;
  j["n_params"] = r.fit.n_params;
  j["r_squared"] = round6(r.fit.r_squared);
  j["adj_r_squared"] = round6(r.fit.adj_r_squared);
  j["rmse"] = round6(r.fit.rmse);
  j["national_sd"] = round6(r.national_sd);
  j["dropped_columns"] = r.dropped_columns;
  return j;
}

std::string scores_csv(const std::vector<SchoolScore>& scores) {
  std::ostringstream out;
  out << "school_id,n_pupils,score,se,ci_low,ci_high,significant,band\n";
  for (const auto& s : scores) {
    out << s.school_id << ',' << s.n_pupils << ',' << format_fixed6(s.score) << ',' << format_fixed6(s.se) << ','
        << format_fixed6(s.ci_low) << ',' << format_fixed6(s.ci_high) << ',' << bool_token(s.significant) << ','
        << band_token(band_of(s.score, s.significant)) << '\n';
  }
  return out.str();
}

std::string optional_fixed6(const std::optional<double>& v) { return v ? format_fixed6(*v) : std::string(); }

}  // namespace

RunAnalysis run_analysis(Cohort cohort, const RunOptions& options) {
  RunAnalysis a;
  a.cohort = std::move(cohort);
  a.rank_thresholds = options.rank_thresholds;
  a.base = run_pipeline(a.cohort, SpecName::base);
  a.adjusted = run_pipeline(a.cohort, SpecName::adjusted);

  const auto ids = pupil_school_ids(a.cohort);
  const auto base_values = a.base.pupil_score_values();
  const auto adj_values = a.adjusted.pupil_score_values();
  a.pupil_correlation = pearson_corr(base_values, adj_values);

  std::map<std::string_view, double> shrunk_base, shrunk_adj;
  if (options.shrinkage) {
    a.shrink_base = shrink_school_scores(base_values, ids);
    a.shrink_adjusted = shrink_school_scores(adj_values, ids);
    for (const auto& s : a.shrink_base->schools) shrunk_base.emplace(s.school_id, s.shrunk_score);
    for (const auto& s : a.shrink_adjusted->schools) shrunk_adj.emplace(s.school_id, s.shrunk_score);
  }

  // Ranks and transitions over schools in ascending id order.
  const auto base_by_id = by_id(a.base.school_scores);
  const auto adj_by_id = by_id(a.adjusted.school_scores);
  std::vector<double> sa, sb;
  std::vector<Band> ba, bb;
  for (const auto& [id, s] : base_by_id) {
    const SchoolScore* t = adj_by_id.at(id);
    sa.push_back(s->score);
    sb.push_back(t->score);
    ba.push_back(band_of(s->score, s->significant));
    bb.push_back(band_of(t->score, t->significant));
  }
  a.ranks = rank_movement(sa, sb, a.rank_thresholds);
  a.transitions = transition_table(ba, bb);

  std::map<std::string_view, std::size_t> position;
  {
    std::size_t i = 0;
    for (const auto& [id, s] : base_by_id) position.emplace(id, i++);
  }
  for (const auto& s : a.base.school_scores) {
    const std::size_t i = position.at(s.school_id);
    SchoolRow row;
    row.school_id = s.school_id;
    row.n_pupils = s.n_pupils;
    row.base = s;
    row.adjusted = *adj_by_id.at(s.school_id);
    row.band_base = ba[i];
    row.band_adjusted = bb[i];
    if (options.shrinkage) {
      row.shrunk_base = shrunk_base.at(s.school_id);
      row.shrunk_adjusted = shrunk_adj.at(s.school_id);
    }
    row.rank_base = a.ranks.rank_a[i];
    row.rank_adjusted = a.ranks.rank_b[i];
    row.rank_delta = a.ranks.delta[i];
    a.schools.push_back(std::move(row));
  }

  const Eigen::VectorXd base_se = robust_se(a.cohort, a.base);
  const Eigen::VectorXd adj_se = robust_se(a.cohort, a.adjusted);
  for (std::size_t k = 0; k < a.adjusted.fit.labels.size(); ++k) {
    CoefficientRow row;
    row.label = a.adjusted.fit.labels[k];
    row.adjusted = a.adjusted.fit.coefficients(static_cast<Eigen::Index>(k));
    row.adjusted_se = adj_se(static_cast<Eigen::Index>(k));
    const auto& bl = a.base.fit.labels;
    if (auto it = std::find(bl.begin(), bl.end(), row.label); it != bl.end()) {
      const auto j = static_cast<Eigen::Index>(it - bl.begin());
      row.base = a.base.fit.coefficients(j);
      row.base_se = base_se(j);
    }
    a.coefficients.push_back(std::move(row));
  }

  const auto chars = options.gap_characteristics.empty() ? default_gap_characteristics() : options.gap_characteristics;
  for (Characteristic c : chars) {
    try {
      a.gaps.push_back(gap_pair(a.cohort, a.base, a.adjusted, c));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingleCategory) throw;
    }
  }
  return a;
}

std::string format_transitions_csv(const TransitionTable& t) {
  std::ostringstream out;
  out << "band_a";
  for (std::size_t b = 0; b < kBandCount; ++b) out << ',' << band_token(static_cast<Band>(b + 1));
  out << ",total";
  for (std::size_t b = 0; b < kBandCount; ++b) out << ",pct_" << band_token(static_cast<Band>(b + 1));
  out << '\n';
  for (std::size_t a = 0; a < kBandCount; ++a) {
    out << band_token(static_cast<Band>(a + 1));
    for (std::size_t b = 0; b < kBandCount; ++b) out << ',' << t.counts[a][b];
    out << ',' << t.row_totals[a];
    for (std::size_t b = 0; b < kBandCount; ++b) out << ',' << format_fixed6(t.row_percent[a][b]);
    out << '\n';
  }
  out << "total";
  for (std::size_t b = 0; b < kBandCount; ++b) out << ',' << t.column_totals[b];
  out << ',' << t.grand_total;
  for (std::size_t b = 0; b < kBandCount; ++b) {
    const double pct = t.grand_total ? 100.0 * static_cast<double>(t.column_totals[b]) / static_cast<double>(t.grand_total) : 0.0;
    out << ',' << format_fixed6(pct);
  }
  out << '\n';
  return out.str();
}

std::string format_gaps_csv(const GapPair& gaps) {
  std::ostringstream out;
  out << "category,n_pupils,n_schools,mean_base,mean_adjusted,f_base,df1_base,df2_base,p_base,"
         "f_adjusted,df1_adjusted,df2_adjusted,p_adjusted\n";
  std::map<std::string_view, double> adjusted;
  for (const auto& g : gaps.adjusted.categories) adjusted.emplace(g.category, g.mean);
  const auto& tb = gaps.base.test;
  const auto& ta = gaps.adjusted.test;
  for (const auto& g : gaps.base.categories) {
    out << g.category << ',' << g.n_pupils << ',' << g.n_schools << ',' << format_fixed6(g.mean) << ','
        << format_fixed6(adjusted.at(g.category)) << ',' << format_fixed6(tb.statistic) << ',' << tb.df1 << ','
        << tb.df2 << ',' << format_fixed6(tb.p_value) << ',' << format_fixed6(ta.statistic) << ',' << ta.df1 << ','
        << ta.df2 << ',' << format_fixed6(ta.p_value) << '\n';
  }
  return out.str();
}

void write_reports(const RunAnalysis& a, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + out_dir.string() + "': " + ec.message());

  {
    std::ostringstream out;
    out << "school_id,n_pupils,score_base,ci_low_base,ci_high_base,significant_base,band_base,"
           "score_adjusted,ci_low_adjusted,ci_high_adjusted,significant_adjusted,band_adjusted,"
           "shrunk_base,shrunk_adjusted,rank_base,rank_adjusted,rank_delta,below_floor_base,below_floor_adjusted\n";
    for (const auto& r : a.schools) {
      out << r.school_id << ',' << r.n_pupils << ',' << format_fixed6(r.base.score) << ','
          << format_fixed6(r.base.ci_low) << ',' << format_fixed6(r.base.ci_high) << ','
          << bool_token(r.base.significant) << ',' << band_token(r.band_base) << ','
          << format_fixed6(r.adjusted.score) << ',' << format_fixed6(r.adjusted.ci_low) << ','
          << format_fixed6(r.adjusted.ci_high) << ',' << bool_token(r.adjusted.significant) << ','
          << band_token(r.band_adjusted) << ',' << optional_fixed6(r.shrunk_base) << ','
          << optional_fixed6(r.shrunk_adjusted) << ',' << r.rank_base << ',' << r.rank_adjusted << ','
          << r.rank_delta << ',' << bool_token(r.band_base == Band::well_below) << ','
          << bool_token(r.band_adjusted == Band::well_below) << '\n';
    }
    detail::write_file(out_dir / "schools.csv", out.str());
  }

  detail::write_file(out_dir / "scores_base.csv", scores_csv(a.base.school_scores));
  detail::write_file(out_dir / "scores_adjusted.csv", scores_csv(a.adjusted.school_scores));

  {
    std::ostringstream out;
    out << "pupil_id,school_id,score_base,score_adjusted\n";
    const auto& pupils = a.cohort.pupils();
    for (std::size_t i = 0; i < pupils.size(); ++i)
      out << pupils[i].pupil_id << ',' << pupils[i].school_id << ',' << format_fixed6(a.base.pupil_scores[i].score)
          << ',' << format_fixed6(a.adjusted.pupil_scores[i].score) << '\n';
    detail::write_file(out_dir / "pupil_scores.csv", out.str());
  }

  {
    std::ostringstream out;
    out << "label,coef_base,se_robust_base,coef_adjusted,se_robust_adjusted\n";
    for (const auto& c : a.coefficients)
      out << c.label << ',' << optional_fixed6(c.base) << ',' << optional_fixed6(c.base_se) << ','
          << format_fixed6(c.adjusted) << ',' << format_fixed6(c.adjusted_se) << '\n';
    detail::write_file(out_dir / "coefficients.csv", out.str());
  }

  detail::write_file(out_dir / "transitions.csv", format_transitions_csv(a.transitions));
  for (const auto& g : a.gaps)
    detail::write_file(out_dir / ("gaps_" + std::string(characteristic_name(g.base.characteristic)) + ".csv"),
                       format_gaps_csv(g));

  write_cohort(a.cohort, out_dir / "input_pupils.csv", out_dir / "input_schools.csv");

  ordered_json j;
  j["n_pupils"] = a.cohort.n_pupils();
  j["n_schools"] = a.cohort.n_schools();
  j["models"]["base"] = fit_json(a.base);
  j["models"]["adjusted"] = fit_json(a.adjusted);

  const auto base_values = a.base.pupil_score_values();
  const auto adj_values = a.adjusted.pupil_score_values();
  j["pupil_scores"]["base"] = stats_json(summary_stats(base_values));
  j["pupil_scores"]["adjusted"] = stats_json(summary_stats(adj_values));
  std::vector<double> sb, sa;
  for (const auto& r : a.schools) {
    sb.push_back(r.base.score);
    sa.push_back(r.adjusted.score);
  }
  j["school_scores"]["base"] = stats_json(summary_stats(sb));
  j["school_scores"]["adjusted"] = stats_json(summary_stats(sa));

  j["correlations"]["pupil_pearson"] = round6(a.pupil_correlation);
  j["correlations"]["school_pearson"] = round6(a.ranks.pearson);
  j["correlations"]["school_spearman"] = round6(a.ranks.spearman);

  for (const char* measure : {"base", "adjusted"}) {
    ordered_json counts;
    for (std::size_t b = 0; b < kBandCount; ++b) {
      std::size_t n = 0;
      for (const auto& r : a.schools)
        n += band_index(std::string_view(measure) == "base" ? r.band_base : r.band_adjusted) == b;
      counts[std::string(band_token(static_cast<Band>(b + 1)))] = n;
    }
    j["band_counts"][measure] = counts;
  }
  j["transitions"] = transitions_json(a.transitions);
  j["ranks"] = ranks_json(a.ranks);

  if (a.shrink_base && a.shrink_adjusted) {
    for (const auto& [name, s] : {std::pair{"base", &*a.shrink_base}, std::pair{"adjusted", &*a.shrink_adjusted}}) {
      j["shrinkage"][name]["sigma2_between"] = round6(s->sigma2_between);
      j["shrinkage"][name]["sigma2_within"] = round6(s->sigma2_within);
      j["shrinkage"][name]["n0"] = round6(s->n0);
    }
  } else {
    j["shrinkage"] = nullptr;
  }

  ordered_json gaps = ordered_json::object();
  for (const auto& g : a.gaps) {
    gaps[std::string(characteristic_name(g.base.characteristic))] = {
        {"f_base", round6(g.base.test.statistic)},
        {"p_base", round6(g.base.test.p_value)},
        {"f_adjusted", round6(g.adjusted.test.statistic)},
        {"p_adjusted", round6(g.adjusted.test.p_value)},
    };
  }
  j["gaps"] = gaps;

  detail::write_file(out_dir / "summary.json", j.dump(2) + "\n");
}

Comparison compare_scores(const std::vector<ScoreFileRow>& a, const std::vector<ScoreFileRow>& b,
                          std::span<const std::size_t> thresholds) {
  std::map<std::string_view, const ScoreFileRow*> ma, mb;
  for (const auto& r : a)
    if (!ma.emplace(r.school_id, &r).second) throw Error(ErrorCode::DuplicateId, "duplicate school_id '" + r.school_id + "'");
  for (const auto& r : b)
    if (!mb.emplace(r.school_id, &r).second) throw Error(ErrorCode::DuplicateId, "duplicate school_id '" + r.school_id + "'");
  if (ma.size() != mb.size()) throw Error(ErrorCode::LengthMismatch, "score files cover different schools");

  Comparison c;
  std::vector<double> sa, sb;
  std::vector<Band> ba, bb;
  for (const auto& [id, ra] : ma) {
    auto it = mb.find(id);
    if (it == mb.end()) throw Error(ErrorCode::LengthMismatch, "school '" + std::string(id) + "' missing from second file");
    c.school_ids.emplace_back(id);
    sa.push_back(ra->score);
    sb.push_back(it->second->score);
    ba.push_back(band_of(ra->score, ra->significant));
    bb.push_back(band_of(it->second->score, it->second->significant));
  }
  c.ranks = rank_movement(sa, sb, thresholds);
  c.transitions = transition_table(ba, bb);
  return c;
}

std::string format_comparison_json(const Comparison& c) {
  ordered_json j;
  j["n_schools"] = c.school_ids.size();
  j["pearson"] = round6(c.ranks.pearson);
  j["spearman"] = round6(c.ranks.spearman);
  j["rank_movement"] = ranks_json(c.ranks)["rank_movement"];
  j["transitions"] = transitions_json(c.transitions);
  return j.dump(2) + "\n";
}

GapPair gaps_from_run_dir(const std::filesystem::path& out_dir, Characteristic characteristic) {
  const Cohort cohort = load_cohort(out_dir / "input_pupils.csv", out_dir / "input_schools.csv");
  const auto base = run_pipeline(cohort, SpecName::base);
  const auto adjusted = run_pipeline(cohort, SpecName::adjusted);
  return gap_pair(cohort, base, adjusted, characteristic);
}

}  // namespace vamod
