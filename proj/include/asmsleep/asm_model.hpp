#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "asmsleep/hyperexp.hpp"

namespace asmsleep {

using Nanos = std::chrono::duration<std::int64_t, std::nano>;

inline double to_seconds(Nanos d) {
  return std::chrono::duration<double>(d).count();
}

enum class LevelId : std::uint8_t { SM1 = 1, SM2 = 2, SM3 = 3, SM4 = 4 };

inline constexpr std::array<LevelId, 4> kAllLevels{LevelId::SM1, LevelId::SM2,
                                                   LevelId::SM3, LevelId::SM4};

std::string_view to_string(LevelId id);
std::optional<LevelId> parse_level_id(std::string_view text);
inline std::size_t level_index(LevelId id) {
  return static_cast<std::size_t>(id) - 1;
}

// One ASM level. The base station draws `power_w` uniformly over the whole
// off period (deactivation + minimum sleep + activation).
struct SleepLevel {
  LevelId id;
  Nanos deactivation;
  Nanos min_sleep;
  Nanos activation;
  std::optional<double> power_w;  // no published default for SM1/SM4

  // Only meaningful after validate().
  double power() const { return power_w.value(); }
};

inline Nanos off_duration(const SleepLevel& level) {
  return level.deactivation + level.min_sleep + level.activation;
}

struct PowerStates {
  double active_w;
  double idle_w;
};

struct Catalog {
  std::array<SleepLevel, 4> levels;
  PowerStates power;

  const SleepLevel& level(LevelId id) const { return levels[level_index(id)]; }
};

// SM1..SM4 durations, SM2/SM3 powers and the active/idle reference powers of
// a 2x2 MIMO, 46 dBm, 20 MHz macro cell.
Catalog standard_catalog();

struct OffTimeParams {
  std::vector<double> rates_per_s;
  std::vector<double> weights;
};

struct StateSpaceLimits {
  double tail_threshold = 1e-6;  // stop expanding below this survival
  Nanos time_grain{1};           // elapsed-time keys are rounded to this
  std::size_t max_states = 5'000'000;
};

// Unvalidated system description, as loaded from a config file.
struct SystemConfig {
  std::vector<SleepLevel> enabled_levels;
  PowerStates power_states;
  OffTimeParams off_time;
  StateSpaceLimits limits;
  // Longest admissible off period, e.g. the SSB period in 5G SA.
  std::optional<Nanos> max_off_duration;
};

// SM2 + SM3, rates [10, 500] /s, weights [1/2, 1/2].
SystemConfig default_nsa_config();

struct ConfigIssue {
  std::string field;  // e.g. "off_time.weights", "levels.SM4.power"
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

std::vector<ConfigIssue> check(const SystemConfig& config);

class ValidConfig {
 public:
  const std::vector<SleepLevel>& levels() const noexcept { return levels_; }
  const PowerStates& power_states() const noexcept { return power_; }
  const HyperExp& off_time() const noexcept { return off_time_; }
  const StateSpaceLimits& limits() const noexcept { return limits_; }
  const std::optional<Nanos>& max_off_duration() const noexcept {
    return max_off_duration_;
  }

  bool is_enabled(LevelId id) const noexcept;
  // Throws DomainError if the level is not enabled.
  const SleepLevel& level(LevelId id) const;
  Nanos max_level_duration() const { return off_duration(levels_.back()); }

 private:
  ValidConfig(std::vector<SleepLevel> levels, PowerStates power,
              HyperExp off_time, StateSpaceLimits limits,
              std::optional<Nanos> max_off)
      : levels_(std::move(levels)),
        power_(power),
        off_time_(std::move(off_time)),
        limits_(limits),
        max_off_duration_(max_off) {}

  friend ValidConfig validate(const SystemConfig& config);

  std::vector<SleepLevel> levels_;  // ascending off duration
  PowerStates power_;
  HyperExp off_time_;
  StateSpaceLimits limits_;
  std::optional<Nanos> max_off_duration_;
};

// Throws ConfigError listing every violated invariant.
ValidConfig validate(const SystemConfig& config);

}  // namespace asmsleep
