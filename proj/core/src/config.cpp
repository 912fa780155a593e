#include <sstream>

#include "text_util.hpp"
#include "vamod/io.hpp"

namespace vamod {

namespace {

[[noreturn]] void config_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line) + ": " + what, line);
}

double number_or_throw(std::size_t line, const std::string& key, const std::string& value) {
  auto v = detail::parse_double(value);
  if (!v) throw Error(ErrorCode::BadNumber, "config line " + std::to_string(line) + ": '" + key + "' is not a number", line);
  return *v;
}

template <typename Int>
Int integer_or_throw(std::size_t line, const std::string& key, const std::string& value) {
  auto v = detail::parse_int<Int>(value);
  if (!v) throw Error(ErrorCode::BadNumber, "config line " + std::to_string(line) + ": '" + key + "' is not an integer", line);
  return *v;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += detail::format_shortest(values[i]);
  }
  return out;
}

}  // namespace

SynthConfig parse_synth_config(std::string_view text) {
  SynthConfig config = default_synth_config();

  struct Calibration {
    std::optional<double> pupil_sd, school_sd;
    std::optional<int> typical_n;
    std::size_t line = 0;
  } calibration;
  std::optional<std::string> concentration_category;
  std::size_t concentration_line = 0;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (detail::read_line(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(line_no, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) config_error(line_no, "empty key");

    auto ensure_concentration = [&] {
      if (!config.concentration) config.concentration = Concentration{};
      concentration_line = line_no;
    };

    if (key == "seed") {
      config.seed = integer_or_throw<std::uint64_t>(line_no, key, value);
    } else if (key == "n_schools") {
      config.n_schools = integer_or_throw<std::size_t>(line_no, key, value);
    } else if (key == "school_size.median") {
      config.school_size.median = number_or_throw(line_no, key, value);
    } else if (key == "school_size.log_sd") {
      config.school_size.log_sd = number_or_throw(line_no, key, value);
    } else if (key == "school_size.min") {
      config.school_size.min = integer_or_throw<int>(line_no, key, value);
    } else if (key == "sigma_u") {
      config.sigma_u = number_or_throw(line_no, key, value);
    } else if (key == "sigma_e") {
      config.sigma_e = number_or_throw(line_no, key, value);
    } else if (key == "calibrate.pupil_sd") {
      calibration.pupil_sd = number_or_throw(line_no, key, value);
      calibration.line = line_no;
    } else if (key == "calibrate.school_sd") {
      calibration.school_sd = number_or_throw(line_no, key, value);
      calibration.line = line_no;
    } else if (key == "calibrate.typical_n") {
      calibration.typical_n = integer_or_throw<int>(line_no, key, value);
      calibration.line = line_no;
    } else if (key.starts_with("marginal.")) {
      const auto c = characteristic_from_name(key.substr(9));
      if (!c) config_error(line_no, "unknown characteristic in '" + key + "'");
      std::vector<double> p;
      for (auto part : detail::split(value, ',')) p.push_back(number_or_throw(line_no, key, detail::trim(part)));
      config.marginals[*c] = std::move(p);
    } else if (key.starts_with("coef.")) {
      config.coefficients[key.substr(5)] = number_or_throw(line_no, key, value);
    } else if (key == "concentration.characteristic") {
      ensure_concentration();
      const auto c = characteristic_from_name(value);
      if (!c) config_error(line_no, "unknown characteristic '" + value + "'");
      config.concentration->characteristic = *c;
    } else if (key == "concentration.category") {
      ensure_concentration();
      concentration_category = value;
    } else if (key == "concentration.school_share") {
      ensure_concentration();
      config.concentration->school_share = number_or_throw(line_no, key, value);
    } else if (key == "concentration.share_in") {
      ensure_concentration();
      config.concentration->share_in = number_or_throw(line_no, key, value);
    } else if (key == "concentration.share_out") {
      ensure_concentration();
      config.concentration->share_out = number_or_throw(line_no, key, value);
    } else {
      config_error(line_no, "unknown key '" + key + "'");
    }
  }

  if (config.concentration && concentration_category) {
    const auto cats = characteristic_categories(config.concentration->characteristic);
    const auto it = std::find(cats.begin(), cats.end(), *concentration_category);
    if (it == cats.end()) config_error(concentration_line, "unknown concentration category '" + *concentration_category + "'");
    config.concentration->category = static_cast<std::size_t>(it - cats.begin());
  }

  const int given = calibration.pupil_sd.has_value() + calibration.school_sd.has_value() + calibration.typical_n.has_value();
  if (given != 0) {
    if (given != 3) config_error(calibration.line, "calibrate.pupil_sd, calibrate.school_sd and calibrate.typical_n go together");
    try {
      apply_calibration(config, *calibration.pupil_sd, *calibration.school_sd, *calibration.typical_n);
    } catch (const Error& e) {
      config_error(calibration.line, e.what());
    }
  }

  try {
    validate_config(config);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
  }
  return config;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_synth_config(buffer.str());
}

std::string format_synth_config(const SynthConfig& config) {
  std::ostringstream out;
  out << "# vamod synthetic cohort configuration\n";
  out << "seed = " << config.seed << '\n';
  out << "n_schools = " << config.n_schools << '\n';
  out << "school_size.median = " << detail::format_shortest(config.school_size.median) << '\n';
  out << "school_size.log_sd = " << detail::format_shortest(config.school_size.log_sd) << '\n';
  out << "school_size.min = " << config.school_size.min << '\n';
  out << "sigma_u = " << detail::format_shortest(config.sigma_u) << '\n';
  out << "sigma_e = " << detail::format_shortest(config.sigma_e) << '\n';
  for (const auto& [c, p] : config.marginals) out << "marginal." << characteristic_name(c) << " = " << join(p) << '\n';
  for (const auto& [label, value] : config.coefficients)
    out << "coef." << label << " = " << detail::format_shortest(value) << '\n';
  if (config.concentration) {
    const auto& k = *config.concentration;
    out << "concentration.characteristic = " << characteristic_name(k.characteristic) << '\n';
    out << "concentration.category = " << characteristic_categories(k.characteristic).at(k.category) << '\n';
    out << "concentration.school_share = " << detail::format_shortest(k.school_share) << '\n';
    out << "concentration.share_in = " << detail::format_shortest(k.share_in) << '\n';
    out << "concentration.share_out = " << detail::format_shortest(k.share_out) << '\n';
  }
  return out.str();
}

}  // namespace vamod
