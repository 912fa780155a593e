#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "vamod/io.hpp"

using namespace vamod;
namespace fs = std::filesystem;

namespace {

const std::string kSchools = std::string(kSchoolHeader) +
                             "\nA,london,community,comprehensive,11_18,mixed,none,3"
                             "\nB,north_east,converter_academy,grammar,11_16,girls,church_of_england,7\n";

std::string pupils_csv(const std::string& extra_row = "") {
  return std::string(kPupilHeader) +
         "\np1,A,4.6,55.5,september,female,white_british,english_first,none,not_eligible,1"
         "\np2,B,3.2,31,august,male,chinese,english_additional,sen_support,eligible,10\n" +
         extra_row;
}

Error read_error(const std::string& pupils, const std::string& schools) {
  std::istringstream p(pupils), s(schools);
  try {
    read_cohort(p, s);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorCode::EmptyInput, "");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

}  // namespace

TEST_CASE("fixed six decimals") {
  CHECK(format_fixed6(0.1234564) == "0.123456");
  CHECK(format_fixed6(-1e-9) == "0.000000");
  CHECK(format_fixed6(-2.5) == "-2.500000");
}

TEST_CASE("reads a valid cohort") {
  std::istringstream p(pupils_csv()), s(kSchools);
  const auto c = read_cohort(p, s);
  REQUIRE(c.n_pupils() == 2);
  CHECK(c.pupils()[1].ethnicity == Ethnicity::chinese);
  CHECK(c.pupils()[1].sen == Sen::support);
  CHECK(c.schools().at("B").age_range == AgeRange::y11_16);
  CHECK(c.schools().at("B").religion == Religion::church_of_england);
}

TEST_CASE("CRLF line endings are accepted") {
  std::string p = pupils_csv(), s = kSchools;
  for (auto* t : {&p, &s}) {
    std::string out;
    for (char ch : *t) {
      if (ch == '\n') out += '\r';
      out += ch;
    }
    *t = out;
  }
  std::istringstream pi(p), si(s);
  CHECK(read_cohort(pi, si).n_pupils() == 2);
}

TEST_CASE("trailing space in a token is a BadToken at that row") {
  const auto e = read_error(pupils_csv("p3,A,4.0,40,may,male,chinese ,english_first,none,not_eligible,2\n"), kSchools);
  CHECK(e.code() == ErrorCode::BadToken);
  CHECK(e.row() == 4u);
  CHECK(std::string(e.what()).find("ethnicity") != std::string::npos);
  CHECK(std::string(e.what()).find("'chinese '") != std::string::npos);
}

TEST_CASE("schema mismatch names the column") {
  std::string header(kPupilHeader);
  header = header.substr(0, header.rfind(','));
  const auto e = read_error(header + "\np1,A,4.6,55.5,september,female,white_british,english_first,none,not_eligible\n",
                            kSchools);
  CHECK(e.code() == ErrorCode::SchemaMismatch);
  CHECK(std::string(e.what()).find("idaci_decile") != std::string::npos);

  const auto extra = read_error(std::string(kPupilHeader) + ",shoe\n", kSchools);
  CHECK(extra.code() == ErrorCode::SchemaMismatch);
  CHECK(std::string(extra.what()).find("shoe") != std::string::npos);

  const auto fields = read_error(pupils_csv("p3,A,4.0\n"), kSchools);
  CHECK(fields.code() == ErrorCode::SchemaMismatch);
  CHECK(fields.row() == 4u);
}

TEST_CASE("bad numbers and validation errors carry file lines") {
  auto e = read_error(pupils_csv("p3,A,four,40,may,male,chinese,english_first,none,not_eligible,2\n"), kSchools);
  CHECK(e.code() == ErrorCode::BadNumber);
  CHECK(e.row() == 4u);

  e = read_error(pupils_csv("p3,Z,4.0,40,may,male,chinese,english_first,none,not_eligible,2\n"), kSchools);
  CHECK(e.code() == ErrorCode::DanglingSchoolRef);
  CHECK(e.row() == 4u);

  e = read_error(pupils_csv(), kSchools + "C,london,community,comprehensive,11_18,mixed,none,11\n");
  CHECK(e.code() == ErrorCode::OutOfRangeField);
  CHECK(e.row() == 4u);
  CHECK(std::string(e.what()).find("schools line 4") != std::string::npos);
}

TEST_CASE("write then load is the identity") {
  const auto cohort = generate_cohort(fixtures::small_config(20, 17));
  const auto dir = fixtures::temp_dir("io_roundtrip");
  write_cohort(cohort, dir / "p.csv", dir / "s.csv");
  const auto back = load_cohort(dir / "p.csv", dir / "s.csv");
  CHECK(back == cohort);
  CHECK_THROWS_AS(load_cohort(dir / "missing.csv", dir / "s.csv"), Error);
}

TEST_CASE("synth config parsing") {
  const auto c = parse_synth_config(
      "# comment\n"
      "seed = 99\n"
      "n_schools = 12   # trailing comment\n"
      "school_size.median = 80\n"
      "sigma_u = 0.3\n"
      "sigma_e = 9.5\n"
      "marginal.fsm = 0.7, 0.3\n"
      "coef.fsm_eligible = -5\n"
      "concentration.characteristic = language\n"
      "concentration.category = english_additional\n"
      "concentration.share_in = 0.5\n");
  CHECK(c.seed == 99);
  CHECK(c.n_schools == 12);
  CHECK(c.school_size.median == 80);
  CHECK(c.sigma_u == 0.3);
  CHECK(c.sigma_e == 9.5);
  CHECK(c.marginals.at(Characteristic::fsm) == std::vector<double>{0.7, 0.3});
  CHECK(c.coefficients.at("fsm_eligible") == -5);
  REQUIRE(c.concentration.has_value());
  CHECK(c.concentration->category == 1);
  CHECK(c.concentration->share_in == 0.5);

  const auto again = parse_synth_config(format_synth_config(c));
  CHECK(again.seed == c.seed);
  CHECK(again.marginals == c.marginals);
  CHECK(again.coefficients == c.coefficients);
  CHECK(again.sigma_e == c.sigma_e);
  CHECK(again.concentration->share_in == 0.5);
  CHECK(generate_cohort(again) == generate_cohort(c));
}

TEST_CASE("synth config errors") {
  auto code = [](const std::string& text) {
    try {
      parse_synth_config(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::EmptyInput;
  };
  CHECK(code("seed = 1\nwibble = 3\n") == ErrorCode::InvalidConfig);
  CHECK(code("seed\n") == ErrorCode::InvalidConfig);
  CHECK(code("sigma_u = lots\n") == ErrorCode::BadNumber);
  CHECK(code("marginal.fsm = 0.5, 0.4\n") == ErrorCode::InvalidConfig);
  CHECK(code("calibrate.pupil_sd = 1.06\n") == ErrorCode::InvalidConfig);
  CHECK(code("calibrate.pupil_sd = 1.0\ncalibrate.school_sd = 1.1\ncalibrate.typical_n = 100\n") ==
        ErrorCode::InvalidConfig);
  try {
    parse_synth_config("seed = 1\n\nwibble = 3\n");
  } catch (const Error& e) {
    CHECK(e.row() == 3u);
  }
  const auto cal = parse_synth_config("calibrate.pupil_sd = 1.06\ncalibrate.school_sd = 0.40\ncalibrate.typical_n = 162\n");
  CHECK(cal.sigma_u == default_synth_config().sigma_u);
  CHECK(cal.sigma_e == default_synth_config().sigma_e);
}

TEST_CASE("reports are complete and consistent") {
  const auto cohort = generate_cohort(fixtures::small_config(60, 23));
  const auto analysis = run_analysis(cohort);
  const auto dir = fixtures::temp_dir("io_reports");
  write_reports(analysis, dir);
  for (const char* f : {"schools.csv", "scores_base.csv", "scores_adjusted.csv", "pupil_scores.csv",
                        "coefficients.csv", "transitions.csv", "summary.json", "gaps_fsm.csv", "gaps_region.csv"})
    CHECK(fs::exists(dir / f));

  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["n_schools"] == cohort.n_schools());
  CHECK(summary["models"]["adjusted"]["r_squared"].get<double>() >= summary["models"]["base"]["r_squared"].get<double>());
  CHECK(summary["transitions"]["grand_total"] == cohort.n_schools());

  // Band counts in the summary equal the tallies of the CSV.
  std::ifstream in(dir / "schools.csv");
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::size_t> tally;
  std::size_t rows = 0;
  double last = 1e9;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    REQUIRE(f.size() == 19);
    ++tally[f[6]];
    ++rows;
    const double score = std::stod(f[2]);
    CHECK(score <= last);
    last = score;
    CHECK((f[17] == "true") == (f[6] == "well_below"));
  }
  CHECK(rows == cohort.n_schools());
  for (const auto& [band, n] : summary["band_counts"]["base"].items()) CHECK(tally[band] == n.get<std::size_t>());

  // Transition row percentages sum to 100.
  std::ifstream tin(dir / "transitions.csv");
  std::getline(tin, line);
  for (int r = 0; r < 5; ++r) {
    std::getline(tin, line);
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    REQUIRE(f.size() == 12);
    if (f[6] == "0") continue;
    double sum = 0;
    for (int k = 7; k < 12; ++k) sum += std::stod(f[k]);
    CHECK(std::abs(sum - 100.0) < 0.1);
  }

  // Identical analyses give identical bytes.
  const auto dir2 = fixtures::temp_dir("io_reports_again");
  write_reports(run_analysis(cohort), dir2);
  for (const auto& entry : fs::directory_iterator(dir))
    CHECK(slurp(entry.path()) == slurp(dir2 / entry.path().filename()));

  RunOptions options;
  options.shrinkage = false;
  const auto no_shrink = run_analysis(cohort, options);
  CHECK_FALSE(no_shrink.shrink_base.has_value());
  CHECK_FALSE(no_shrink.schools.front().shrunk_base.has_value());
}

TEST_CASE("comparison and gaps from a run directory") {
  const auto cohort = generate_cohort(fixtures::small_config(40, 29));
  const auto analysis = run_analysis(cohort);
  const auto dir = fixtures::temp_dir("io_compare");
  write_reports(analysis, dir);

  const auto a = load_score_file(dir / "scores_base.csv");
  const auto b = load_score_file(dir / "scores_adjusted.csv");
  const auto cmp = compare_scores(a, b);
  CHECK(cmp.school_ids.size() == cohort.n_schools());
  CHECK(cmp.transitions.grand_total == cohort.n_schools());
  CHECK(std::abs(cmp.ranks.spearman - analysis.ranks.spearman) < 1e-4);
  CHECK(cmp.transitions.counts == analysis.transitions.counts);
  const auto json = nlohmann::json::parse(format_comparison_json(cmp));
  CHECK(json["rank_movement"].size() == 2);

  auto shorter = b;
  shorter.pop_back();
  CHECK_THROWS_AS(compare_scores(a, shorter), Error);

  const auto gaps = gaps_from_run_dir(dir, Characteristic::fsm);
  CHECK(format_gaps_csv(gaps) == slurp(dir / "gaps_fsm.csv"));
}
