#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <string>

#include "asmsleep/asm_model.hpp"
#include "asmsleep/errors.hpp"

using namespace asmsleep;
using namespace std::chrono_literals;

namespace {

bool names_field(const ConfigError& e, const std::string& field) {
  return std::any_of(e.issues().begin(), e.issues().end(),
                     [&](const ConfigIssue& i) { return i.field == field; });
}

template <class Mutate>
ConfigError expect_invalid(Mutate mutate) {
  SystemConfig config = default_nsa_config();
  mutate(config);
  try {
    validate(config);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("configuration unexpectedly valid");
  return ConfigError({});
}

}  // namespace

TEST_CASE("off durations from the catalog") {
  const Catalog c = standard_catalog();
  CHECK(off_duration(c.level(LevelId::SM1)) == 142us);
  CHECK(off_duration(c.level(LevelId::SM2)) == 2ms);
  CHECK(off_duration(c.level(LevelId::SM3)) == 20ms);
  CHECK(off_duration(c.level(LevelId::SM4)) == 2s);
  CHECK(to_seconds(off_duration(c.level(LevelId::SM1))) == doctest::Approx(142e-6));
}

TEST_CASE("standard catalog powers") {
  const Catalog c = standard_catalog();
  CHECK(c.level(LevelId::SM2).power_w == 14.3);
  CHECK(c.level(LevelId::SM3).power_w == 9.51);
  CHECK_FALSE(c.level(LevelId::SM1).power_w.has_value());
  CHECK_FALSE(c.level(LevelId::SM4).power_w.has_value());
  CHECK(c.power.idle_w == 109.0);
  CHECK(c.power.active_w == 250.0);
}

TEST_CASE("catalog ordering invariants") {
  const Catalog c = standard_catalog();
  for (std::size_t i = 1; i < c.levels.size(); ++i) {
    CHECK(off_duration(c.levels[i - 1]) < off_duration(c.levels[i]));
  }
  CHECK(*c.level(LevelId::SM3).power_w < *c.level(LevelId::SM2).power_w);
}

TEST_CASE("level ids round-trip through text") {
  for (LevelId id : kAllLevels) CHECK(parse_level_id(to_string(id)) == id);
  CHECK(parse_level_id("sm3") == LevelId::SM3);
  CHECK_FALSE(parse_level_id("SM5").has_value());
}

TEST_CASE("default NSA config validates") {
  const ValidConfig v = validate(default_nsa_config());
  REQUIRE(v.levels().size() == 2);
  CHECK(v.levels()[0].id == LevelId::SM2);
  CHECK(v.levels()[1].id == LevelId::SM3);
  CHECK(v.max_level_duration() == 20ms);
  CHECK(v.is_enabled(LevelId::SM2));
  CHECK_FALSE(v.is_enabled(LevelId::SM4));
  CHECK_THROWS_AS(v.level(LevelId::SM4), DomainError);
}

TEST_CASE("validation failures name the field") {
  CHECK(names_field(expect_invalid([](SystemConfig& c) { c.off_time.weights = {0.5, 0.4}; }),
                    "off_time.weights"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) { c.enabled_levels.clear(); }),
                    "enabled_levels"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) { c.off_time.rates_per_s = {10.0, -1.0}; }),
                    "off_time.rates"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) {
                      c.enabled_levels.push_back(standard_catalog().level(LevelId::SM4));
                    }),
                    "levels.SM4.power"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) {
                      std::swap(c.enabled_levels[0], c.enabled_levels[1]);
                    }),
                    "enabled_levels"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) { c.enabled_levels[0].power_w = 200.0; }),
                    "levels.SM2.power"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) { c.power_states.active_w = 50.0; }),
                    "power_states.active"));
  CHECK(names_field(expect_invalid([](SystemConfig& c) { c.limits.tail_threshold = 0.0; }),
                    "limits.tail_threshold"));
}

TEST_CASE("every violation is reported at once") {
  const ConfigError e = expect_invalid([](SystemConfig& c) {
    c.off_time.weights = {0.9, 0.9};
    c.power_states.idle_w = -1.0;
  });
  CHECK(e.issues().size() >= 2);
  CHECK(std::string(e.what()).find("off_time.weights") != std::string::npos);
}

TEST_CASE("maximum off duration rejects SM4 below 2 s") {
  SystemConfig c = default_nsa_config();
  SleepLevel sm4 = standard_catalog().level(LevelId::SM4);
  sm4.power_w = 1.0;
  c.enabled_levels.push_back(sm4);
  CHECK_NOTHROW(validate(c));

  c.max_off_duration = 160ms;
  try {
    validate(c);
    FAIL("SM4 accepted under a 160 ms limit");
  } catch (const ConfigError& e) {
    CHECK(names_field(e, "levels.SM4"));
    CHECK(e.issues().size() == 1);
  }
  c.max_off_duration = 2s;
  CHECK_NOTHROW(validate(c));
}
