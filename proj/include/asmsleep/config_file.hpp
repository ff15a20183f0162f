#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "asmsleep/asm_model.hpp"
#include "asmsleep/mdp.hpp"

namespace asmsleep {

// Contents of an INI-style run configuration. Sections and keys:
//
//   [system]       enabled_levels, active_power_w, idle_power_w,
//                  max_off_duration_ms, smN_power_w, smN_deactivation_us,
//                  smN_min_sleep_us, smN_activation_us   (N = 1..4)
//   [distribution] rates_per_s, weights                  (comma lists)
//   [weights]      eps1, eps2, eps3
//   [solver]       tail_threshold, time_grain_ns, max_states, theta,
//                  max_iterations, normalization, threads
//   [simulation]   periods, seed
//
// Anything omitted falls back to the NSA SM2+SM3 defaults and the standard
// level catalog.
struct ConfigFile {
  SystemConfig system;
  std::optional<double> eps1;
  std::optional<double> eps2;
  std::optional<double> eps3;
  SolverSettings solver;
  NormalizationMode normalization = NormalizationMode::max_stage_energy;
  std::optional<std::uint64_t> periods;
  std::optional<std::uint64_t> seed;
};

// Throws IoError on unreadable/unparsable input and ConfigError for unknown
// keys or malformed values. Physical invariants are left to validate().
ConfigFile parse_config(std::istream& in);
ConfigFile load_config(const std::filesystem::path& path);

}  // namespace asmsleep
