// vamod: command-line front end for the value-added pipeline.
//
// Exit codes: 0 success, 1 validation or I/O failure, 2 usage error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vamod/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::vector<std::size_t> parse_thresholds(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != part.size() || v == 0) throw CLI::ValidationError("--thresholds", "expected positive integers, got '" + part + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_validate(const fs::path& pupils, const fs::path& schools) {
  vamod::ValidationWarnings warnings;
  const auto cohort = vamod::load_cohort(pupils, schools, &warnings);
  std::printf("ok: %zu pupils in %zu schools\n", cohort.n_pupils(), cohort.n_schools());
  if (warnings.dropped_empty_schools)
    std::fprintf(stderr, "warning: dropped %zu schools with no pupils\n", warnings.dropped_empty_schools);
  return kExitOk;
}

int cmd_synth(const std::optional<fs::path>& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> n_schools, const fs::path& out) {
  auto config = config_path ? vamod::load_synth_config(*config_path) : vamod::default_synth_config();
  if (seed) config.seed = *seed;
  if (n_schools) config.n_schools = *n_schools;
  const auto cohort = vamod::generate_cohort(config);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw vamod::Error(vamod::ErrorCode::IoFailure, "cannot create '" + out.string() + "': " + ec.message());
  vamod::write_cohort(cohort, out / "pupils.csv", out / "schools.csv");
  std::printf("wrote %zu pupils in %zu schools to %s\n", cohort.n_pupils(), cohort.n_schools(), out.string().c_str());
  return kExitOk;
}

int cmd_run(const fs::path& pupils, const fs::path& schools, const fs::path& out, bool no_shrinkage) {
  vamod::ValidationWarnings warnings;
  auto cohort = vamod::load_cohort(pupils, schools, &warnings);
  vamod::RunOptions options;
  options.shrinkage = !no_shrinkage;
  auto analysis = vamod::run_analysis(std::move(cohort), options);
  analysis.dropped_schools = warnings.dropped_empty_schools;
  vamod::write_reports(analysis, out);
  std::printf("base R2 %s, adjusted R2 %s, %zu schools, %zu changed band\n",
              vamod::format_fixed6(analysis.base.fit.r_squared).c_str(),
              vamod::format_fixed6(analysis.adjusted.fit.r_squared).c_str(), analysis.schools.size(),
              analysis.transitions.changed);
  return kExitOk;
}

int cmd_compare(const std::optional<fs::path>& out, const std::optional<fs::path>& scores_a,
                const std::optional<fs::path>& scores_b, const std::string& thresholds) {
  fs::path a, b;
  if (scores_a || scores_b) {
    if (!scores_a || !scores_b) throw CLI::ValidationError("compare", "--scores-a and --scores-b go together");
    a = *scores_a;
    b = *scores_b;
  } else if (out) {
    a = *out / "scores_base.csv";
    b = *out / "scores_adjusted.csv";
  } else {
    throw CLI::ValidationError("compare", "give --out DIR or --scores-a/--scores-b");
  }
  const auto t = parse_thresholds(thresholds);
  const auto comparison = vamod::compare_scores(vamod::load_score_file(a), vamod::load_score_file(b), t);
  const std::string json = vamod::format_comparison_json(comparison);
  std::fputs(json.c_str(), stdout);
  if (out) {
    std::error_code ec;
    fs::create_directories(*out, ec);
    std::ofstream(*out / "comparison.json", std::ios::binary) << json;
    std::ofstream(*out / "comparison_transitions.csv", std::ios::binary)
        << vamod::format_transitions_csv(comparison.transitions);
  }
  return kExitOk;
}

int cmd_gaps(const std::string& name, const fs::path& out) {
  const auto c = vamod::characteristic_from_name(name);
  if (!c) throw vamod::Error(vamod::ErrorCode::UnknownCharacteristic, "unknown characteristic '" + name + "'");
  const auto gaps = vamod::gaps_from_run_dir(out, *c);
  const std::string csv = vamod::format_gaps_csv(gaps);
  std::ofstream(out / ("gaps_" + name + ".csv"), std::ios::binary) << csv;
  std::fputs(csv.c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progress 8 and Adjusted Progress 8 value-added analytics"};
  app.require_subcommand(1);

  fs::path pupils, schools, out;
  std::optional<fs::path> config, scores_a, scores_b, compare_out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_schools;
  bool no_shrinkage = false;
  std::string thresholds = "500,1000";
  std::string characteristic;

  auto* validate = app.add_subcommand("validate", "Check pupil and school files");
  validate->add_option("--pupils", pupils, "Pupil CSV")->required();
  validate->add_option("--schools", schools, "School CSV")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--config", config, "key = value config file");
  synth->add_option("--seed", seed, "Random seed (overrides the config)");
  synth->add_option("--n-schools", n_schools, "Number of schools (overrides the config)");
  synth->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Fit both specifications and write reports");
  run->add_option("--pupils", pupils, "Pupil CSV")->required();
  run->add_option("--schools", schools, "School CSV")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_flag("--no-shrinkage", no_shrinkage, "Skip empirical Bayes shrinkage");

  auto* compare = app.add_subcommand("compare", "Correlations, rank movement and band transitions");
  compare->add_option("--out", compare_out, "Run directory (reads scores_base.csv and scores_adjusted.csv)");
  compare->add_option("--scores-a", scores_a, "First score CSV");
  compare->add_option("--scores-b", scores_b, "Second score CSV");
  compare->add_option("--thresholds", thresholds, "Rank-movement thresholds")->capture_default_str();

  auto* gaps = app.add_subcommand("gaps", "Group-gap report for one characteristic");
  gaps->add_option("--characteristic", characteristic, "Characteristic name")->required();
  gaps->add_option("--out", out, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(pupils, schools);
    if (*synth) return cmd_synth(config, seed, n_schools, out);
    if (*run) return cmd_run(pupils, schools, out, no_shrinkage);
    if (*compare) return cmd_compare(compare_out, scores_a, scores_b, thresholds);
    if (*gaps) return cmd_gaps(characteristic, out);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const vamod::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return vamod::is_numerical(e.code()) ? kExitNumerical : kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitUsage;
}
