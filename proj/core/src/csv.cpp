#include <cstdio>
#include <sstream>

#include "text_util.hpp"
#include "vamod/io.hpp"

namespace vamod {

using detail::parse_double;
using detail::parse_int;
using detail::read_line;
using detail::split;

std::string format_fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

namespace {

struct Reader {
  std::istream& in;
  std::string_view file;
  std::vector<std::string> columns;
  std::size_t line_no = 0;

  void expect_header(std::string_view expected) {
    std::string header;
    if (!read_line(in, header)) throw Error(ErrorCode::SchemaMismatch, std::string(file) + ": missing header", 1);
    line_no = 1;
    if (header == expected) return;

    const auto want = split(expected, ',');
    const auto got = split(header, ',');
    for (auto w : want)
      if (std::find(got.begin(), got.end(), w) == got.end())
        throw Error(ErrorCode::SchemaMismatch, std::string(file) + ": missing column '" + std::string(w) + "'", 1);
    for (auto g : got)
      if (std::find(want.begin(), want.end(), g) == want.end())
        throw Error(ErrorCode::SchemaMismatch, std::string(file) + ": unexpected column '" + std::string(g) + "'", 1);
    throw Error(ErrorCode::SchemaMismatch, std::string(file) + ": columns out of order, expected '" +
                                               std::string(expected) + "'", 1);
  }

  // Next data row, or false at EOF. Blank lines are skipped.
  bool next(std::string& line, std::vector<std::string_view>& fields, std::size_t width) {
    while (read_line(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      fields = split(line, ',');
      if (fields.size() != width)
        throw Error(ErrorCode::SchemaMismatch,
                    std::string(file) + " line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " fields, found " + std::to_string(fields.size()),
                    line_no);
      return true;
    }
    return false;
  }

  [[noreturn]] void bad_token(std::string_view column, std::string_view value) const {
    throw Error(ErrorCode::BadToken,
                std::string(file) + " line " + std::to_string(line_no) + ", column " + std::string(column) +
                    ": invalid value '" + std::string(value) + "'",
                line_no);
  }

  [[noreturn]] void bad_number(std::string_view column, std::string_view value) const {
    throw Error(ErrorCode::BadNumber,
                std::string(file) + " line " + std::to_string(line_no) + ", column " + std::string(column) +
                    ": not a number '" + std::string(value) + "'",
                line_no);
  }

  template <typename E>
  E token(std::string_view column, std::string_view value) const {
    auto e = parse_token<E>(value);
    if (!e) bad_token(column, value);
    return *e;
  }

  double number(std::string_view column, std::string_view value) const {
    auto v = parse_double(value);
    if (!v) bad_number(column, value);
    return *v;
  }

  int integer(std::string_view column, std::string_view value) const {
    auto v = parse_int<int>(value);
    if (!v) bad_number(column, value);
    return *v;
  }

  std::string id(std::string_view column, std::string_view value) const {
    if (value.empty()) bad_token(column, value);
    return std::string(value);
  }
};

// Validation reports 1-based record positions; map them to file lines.
struct LineMap {
  std::vector<std::size_t> pupil_lines;
  std::vector<std::size_t> school_lines;
};

}  // namespace

Cohort read_cohort(std::istream& pupil_in, std::istream& school_in, ValidationWarnings* warnings) {
  LineMap lines;
  std::vector<SchoolRecord> schools;
  {
    Reader r{school_in, "schools", {}};
    r.expect_header(kSchoolHeader);
    std::string line;
    std::vector<std::string_view> f;
    while (r.next(line, f, 8)) {
      SchoolRecord s;
      s.school_id = r.id("school_id", f[0]);
      s.region = r.token<Region>("region", f[1]);
      s.school_type = r.token<SchoolType>("school_type", f[2]);
      s.admissions = r.token<Admissions>("admissions", f[3]);
      s.age_range = r.token<AgeRange>("age_range", f[4]);
      s.school_gender = r.token<SchoolGender>("school_gender", f[5]);
      s.religion = r.token<Religion>("religion", f[6]);
      s.school_idaci_decile = r.integer("school_idaci_decile", f[7]);
      schools.push_back(std::move(s));
      lines.school_lines.push_back(r.line_no);
    }
  }

  std::vector<PupilRecord> pupils;
  {
    Reader r{pupil_in, "pupils", {}};
    r.expect_header(kPupilHeader);
    std::string line;
    std::vector<std::string_view> f;
    while (r.next(line, f, 11)) {
      PupilRecord p;
      p.pupil_id = r.id("pupil_id", f[0]);
      p.school_id = r.id("school_id", f[1]);
      p.ks2 = r.number("ks2", f[2]);
      p.attainment8 = r.number("attainment8", f[3]);
      p.month = r.token<Month>("month", f[4]);
      p.gender = r.token<Gender>("gender", f[5]);
      p.ethnicity = r.token<Ethnicity>("ethnicity", f[6]);
      p.language = r.token<Language>("language", f[7]);
      p.sen = r.token<Sen>("sen", f[8]);
      p.fsm = r.token<Fsm>("fsm", f[9]);
      p.idaci_decile = r.integer("idaci_decile", f[10]);
      pupils.push_back(std::move(p));
      lines.pupil_lines.push_back(r.line_no);
    }
  }

  try {
    return validate_cohort(std::move(pupils), std::move(schools), warnings);
  } catch (const Error& e) {
    if (!e.row()) throw;
    const std::string msg = e.what();
    const bool school_side = e.list() == RecordList::schools;
    const auto& table = school_side ? lines.school_lines : lines.pupil_lines;
    const std::size_t idx = *e.row() - 1;
    const std::size_t line = idx < table.size() ? table[idx] : *e.row();
    throw Error(e.code(), std::string(school_side ? "schools" : "pupils") + " line " + std::to_string(line) + ": " +
                              msg.substr(msg.find(": ") + 2),
                line, e.list());
  }
}

Cohort load_cohort(const std::filesystem::path& pupil_path, const std::filesystem::path& school_path,
                   ValidationWarnings* warnings) {
  auto pupils = detail::open_in(pupil_path);
  auto schools = detail::open_in(school_path);
  return read_cohort(pupils, schools, warnings);
}

void write_cohort(const Cohort& cohort, std::ostream& pupils, std::ostream& schools) {
  using detail::format_shortest;
  schools << kSchoolHeader << '\n';
  for (const auto& [id, s] : cohort.schools()) {
    schools << s.school_id << ',' << to_token(s.region) << ',' << to_token(s.school_type) << ','
            << to_token(s.admissions) << ',' << to_token(s.age_range) << ',' << to_token(s.school_gender) << ','
            << to_token(s.religion) << ',' << s.school_idaci_decile << '\n';
  }
  pupils << kPupilHeader << '\n';
  for (const auto& p : cohort.pupils()) {
    pupils << p.pupil_id << ',' << p.school_id << ',' << format_shortest(p.ks2) << ',' << format_shortest(p.attainment8)
           << ',' << to_token(p.month) << ',' << to_token(p.gender) << ',' << to_token(p.ethnicity) << ','
           << to_token(p.language) << ',' << to_token(p.sen) << ',' << to_token(p.fsm) << ',' << p.idaci_decile
           << '\n';
  }
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& pupil_path,
                  const std::filesystem::path& school_path) {
  std::ostringstream pupils, schools;
  write_cohort(cohort, pupils, schools);
  detail::write_file(pupil_path, pupils.str());
  detail::write_file(school_path, schools.str());
}

std::vector<ScoreFileRow> load_score_file(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string header;
  if (!read_line(in, header)) throw Error(ErrorCode::SchemaMismatch, path.string() + ": missing header", 1);
  const auto cols = split(header, ',');
  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return i;
    return std::nullopt;
  };
  const auto id_col = find("school_id");
  const auto score_col = find("score");
  if (!id_col || !score_col)
    throw Error(ErrorCode::SchemaMismatch, path.string() + ": score file needs school_id and score columns", 1);
  const auto n_col = find("n_pupils");
  const auto sig_col = find("significant");

  const std::string file = path.filename().string();
  Reader r{in, file, {}};
  r.line_no = 1;
  std::vector<ScoreFileRow> rows;
  std::string line;
  std::vector<std::string_view> f;
  while (r.next(line, f, cols.size())) {
    ScoreFileRow row;
    row.school_id = r.id("school_id", f[*id_col]);
    row.score = r.number("score", f[*score_col]);
    if (n_col) row.n_pupils = static_cast<std::size_t>(r.integer("n_pupils", f[*n_col]));
    if (sig_col) {
      if (f[*sig_col] == "true") row.significant = true;
      else if (f[*sig_col] == "false") row.significant = false;
      else r.bad_token("significant", f[*sig_col]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vamod
