#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vamod/cohort.hpp"
#include "vamod/synth.hpp"

namespace fixtures {

inline vamod::SchoolRecord school(std::string id) {
  vamod::SchoolRecord s;
  s.school_id = std::move(id);
  return s;
}

inline vamod::PupilRecord pupil(std::string id, std::string school_id, double ks2 = 4.6, double a8 = 50.0) {
  vamod::PupilRecord p;
  p.pupil_id = std::move(id);
  p.school_id = std::move(school_id);
  p.ks2 = ks2;
  p.attainment8 = a8;
  return p;
}

inline vamod::SynthConfig small_config(std::size_t n_schools, std::uint64_t seed, double median = 60.0) {
  auto config = vamod::default_synth_config();
  config.n_schools = n_schools;
  config.seed = seed;
  config.school_size.median = median;
  return config;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path(VAMOD_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
