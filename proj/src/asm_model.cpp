#include "asmsleep/asm_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "asmsleep/errors.hpp"

namespace asmsleep {

using namespace std::chrono_literals;

std::string_view to_string(LevelId id) {
  switch (id) {
    case LevelId::SM1: return "SM1";
    case LevelId::SM2: return "SM2";
    case LevelId::SM3: return "SM3";
    case LevelId::SM4: return "SM4";
  }
  return "SM?";
}

std::optional<LevelId> parse_level_id(std::string_view text) {
  for (LevelId id : kAllLevels) {
    const std::string_view name = to_string(id);
    if (text.size() == name.size() &&
        std::equal(text.begin(), text.end(), name.begin(), [](char a, char b) {
          return std::toupper(static_cast<unsigned char>(a)) == b;
        })) {
      return id;
    }
  }
  return std::nullopt;
}

Catalog standard_catalog() {
  return Catalog{
      {{
          {LevelId::SM1, 35'500ns, 71'000ns, 35'500ns, std::nullopt},
          {LevelId::SM2, 500'000ns, 1'000'000ns, 500'000ns, 14.3},
          {LevelId::SM3, 5'000'000ns, 10'000'000ns, 5'000'000ns, 9.51},
          {LevelId::SM4, 500'000'000ns, 1'000'000'000ns, 500'000'000ns,
           std::nullopt},
      }},
      PowerStates{250.0, 109.0},
  };
}

SystemConfig default_nsa_config() {
  const Catalog catalog = standard_catalog();
  SystemConfig config;
  config.enabled_levels = {catalog.level(LevelId::SM2),
                           catalog.level(LevelId::SM3)};
  config.power_states = catalog.power;
  config.off_time = {{10.0, 500.0}, {0.5, 0.5}};
  return config;
}

namespace {

std::string describe(const std::vector<ConfigIssue>& issues) {
  std::ostringstream out;
  out << "invalid configuration:";
  for (const auto& issue : issues) {
    out << "\n  " << issue.field << ": " << issue.message;
  }
  return out.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(describe(issues)), issues_(std::move(issues)) {}

std::vector<ConfigIssue> check(const SystemConfig& config) {
  std::vector<ConfigIssue> issues;
  auto report = [&](std::string field, std::string message) {
    issues.push_back({std::move(field), std::move(message)});
  };

  const PowerStates& power = config.power_states;
  if (!(power.idle_w > 0.0)) {
    report("power_states.idle", "must be > 0");
  }
  if (!(power.active_w > power.idle_w)) {
    report("power_states.active", "must exceed idle power");
  }

  if (config.enabled_levels.empty()) {
    report("enabled_levels", "at least one sleep level must be enabled");
  }
  std::set<LevelId> seen;
  for (std::size_t i = 0; i < config.enabled_levels.size(); ++i) {
    const SleepLevel& level = config.enabled_levels[i];
    const std::string path = "levels." + std::string(to_string(level.id));
    if (!seen.insert(level.id).second) {
      report("enabled_levels", "duplicate level " +
                                   std::string(to_string(level.id)));
    }
    if (level.deactivation <= Nanos::zero()) {
      report(path + ".deactivation", "must be > 0");
    }
    if (level.min_sleep <= Nanos::zero()) {
      report(path + ".min_sleep", "must be > 0");
    }
    if (level.activation <= Nanos::zero()) {
      report(path + ".activation", "must be > 0");
    }
    if (!level.power_w) {
      report(path + ".power", "required when the level is enabled");
    } else if (!(*level.power_w > 0.0)) {
      report(path + ".power", "must be > 0");
    } else if (!(*level.power_w < power.idle_w)) {
      report(path + ".power", "must be below idle power");
    }
    if (i > 0 && !(off_duration(config.enabled_levels[i - 1]) <
                   off_duration(level))) {
      report("enabled_levels",
             "levels must be sorted by strictly increasing off duration");
    }
    if (config.max_off_duration && off_duration(level) > *config.max_off_duration) {
      report(path, "off duration exceeds the maximum allowed off duration");
    }
  }

  const OffTimeParams& off = config.off_time;
  if (off.rates_per_s.empty()) {
    report("off_time.rates", "at least one phase is required");
  }
  if (off.rates_per_s.size() != off.weights.size()) {
    report("off_time.weights", "must have the same length as off_time.rates");
  }
  for (double rate : off.rates_per_s) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      report("off_time.rates", "every rate must be positive and finite");
      break;
    }
  }
  double weight_sum = 0.0;
  bool negative = false;
  for (double w : off.weights) {
    negative = negative || !(w >= 0.0);
    weight_sum += w;
  }
  if (negative) report("off_time.weights", "every weight must be >= 0");
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "weights sum to " << weight_sum << ", expected 1";
    report("off_time.weights", msg.str());
  }

  const StateSpaceLimits& limits = config.limits;
  if (!(limits.tail_threshold > 0.0 && limits.tail_threshold < 1.0)) {
    report("limits.tail_threshold", "must lie in (0, 1)");
  }
  if (limits.time_grain <= Nanos::zero()) {
    report("limits.time_grain", "must be > 0");
  }
  if (limits.max_states == 0) {
    report("limits.max_states", "must be > 0");
  }
  return issues;
}

ValidConfig validate(const SystemConfig& config) {
  auto issues = check(config);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return ValidConfig(config.enabled_levels, config.power_states,
                     HyperExp(config.off_time.rates_per_s,
                              config.off_time.weights),
                     config.limits, config.max_off_duration);
}

bool ValidConfig::is_enabled(LevelId id) const noexcept {
  return std::any_of(levels_.begin(), levels_.end(),
                     [id](const SleepLevel& l) { return l.id == id; });
}

const SleepLevel& ValidConfig::level(LevelId id) const {
  for (const auto& l : levels_) {
    if (l.id == id) return l;
  }
  throw DomainError("sleep level " + std::string(to_string(id)) +
                    " is not enabled");
}

}  // namespace asmsleep
