#include "asmsleep/config_file.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "asmsleep/errors.hpp"

namespace asmsleep {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string::size_type begin = 0;
  while (true) {
    const auto comma = s.find(',', begin);
    items.push_back(trim(s.substr(begin, comma - begin)));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return items;
}

template <class T>
std::optional<T> parse_number(const std::string& text) {
  const std::string s = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = [] {
    std::map<std::string, std::set<std::string>> k;
    k["system"] = {"enabled_levels", "active_power_w", "idle_power_w",
                   "max_off_duration_ms"};
    for (int n = 1; n <= 4; ++n) {
      const std::string p = "sm" + std::to_string(n) + "_";
      for (const char* suffix :
           {"power_w", "deactivation_us", "min_sleep_us", "activation_us"}) {
        k["system"].insert(p + suffix);
      }
    }
    k["distribution"] = {"rates_per_s", "weights"};
    k["weights"] = {"eps1", "eps2", "eps3"};
    k["solver"] = {"tail_threshold", "time_grain_ns", "max_states", "theta",
                   "max_iterations", "normalization", "threads"};
    k["simulation"] = {"periods", "seed"};
    return k;
  }();
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section,
                                 const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto value = sec->get_optional<std::string>(key);
    if (!value) return std::nullopt;
    // Inline comment: ';' or '#' after whitespace.
    for (std::size_t i = 1; i < value->size(); ++i) {
      if (((*value)[i] == ';' || (*value)[i] == '#') &&
          ((*value)[i - 1] == ' ' || (*value)[i - 1] == '\t')) {
        value->resize(i);
        break;
      }
    }
    if (trim(*value).empty()) return std::nullopt;
    return trim(*value);
  }

  template <class T>
  std::optional<T> number(const std::string& section, const std::string& key) {
    const auto text = raw(section, key);
    if (!text) return std::nullopt;
    auto value = parse_number<T>(*text);
    if (!value) bad(section + "." + key, "not a valid number: '" + *text + "'");
    return value;
  }

  std::optional<std::vector<double>> list(const std::string& section,
                                          const std::string& key,
                                          const std::string& field) {
    const auto text = raw(section, key);
    if (!text) return std::nullopt;
    std::vector<double> values;
    for (const auto& item : split_list(*text)) {
      const auto v = parse_number<double>(item);
      if (!v) {
        bad(field, "not a valid number: '" + item + "'");
        return std::nullopt;
      }
      values.push_back(*v);
    }
    return values;
  }

  void bad(std::string field, std::string message) {
    issues_.push_back({std::move(field), std::move(message)});
  }

  std::vector<ConfigIssue>& issues() { return issues_; }

 private:
  const pt::ptree& tree_;
  std::vector<ConfigIssue> issues_;
};

Nanos from_scaled(double value, double ns_per_unit) {
  return Nanos{static_cast<std::int64_t>(std::llround(value * ns_per_unit))};
}

}  // namespace

ConfigFile parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError(std::string("config parse error: ") + e.what());
  }

  Reader r(tree);
  for (const auto& [section, body] : tree) {
    const auto known = schema().find(section);
    if (known == schema().end()) {
      r.bad(section, "unknown section");
      continue;
    }
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) r.bad(section + "." + key, "unknown key");
    }
  }

  ConfigFile file;
  file.system = default_nsa_config();
  SystemConfig& sys = file.system;

  if (auto v = r.number<double>("system", "active_power_w")) sys.power_states.active_w = *v;
  if (auto v = r.number<double>("system", "idle_power_w")) sys.power_states.idle_w = *v;
  if (auto v = r.number<double>("system", "max_off_duration_ms")) {
    sys.max_off_duration = from_scaled(*v, 1e6);
  }

  Catalog catalog = standard_catalog();
  for (SleepLevel& level : catalog.levels) {
    const std::string p = "sm" + std::to_string(static_cast<int>(level.id)) + "_";
    if (auto v = r.number<double>("system", p + "power_w")) level.power_w = *v;
    if (auto v = r.number<double>("system", p + "deactivation_us")) level.deactivation = from_scaled(*v, 1e3);
    if (auto v = r.number<double>("system", p + "min_sleep_us")) level.min_sleep = from_scaled(*v, 1e3);
    if (auto v = r.number<double>("system", p + "activation_us")) level.activation = from_scaled(*v, 1e3);
  }
  std::vector<LevelId> enabled{LevelId::SM2, LevelId::SM3};
  if (auto text = r.raw("system", "enabled_levels")) {
    enabled.clear();
    for (const auto& item : split_list(*text)) {
      if (auto id = parse_level_id(item)) {
        enabled.push_back(*id);
      } else {
        r.bad("enabled_levels", "unknown sleep level '" + item + "'");
      }
    }
  }
  sys.enabled_levels.clear();
  for (LevelId id : enabled) sys.enabled_levels.push_back(catalog.level(id));
  std::stable_sort(sys.enabled_levels.begin(), sys.enabled_levels.end(),
                   [](const SleepLevel& a, const SleepLevel& b) {
                     return off_duration(a) < off_duration(b);
                   });

  if (auto v = r.list("distribution", "rates_per_s", "off_time.rates")) sys.off_time.rates_per_s = *v;
  if (auto v = r.list("distribution", "weights", "off_time.weights")) sys.off_time.weights = *v;

  file.eps1 = r.number<double>("weights", "eps1");
  file.eps2 = r.number<double>("weights", "eps2");
  file.eps3 = r.number<double>("weights", "eps3");

  if (auto v = r.number<double>("solver", "tail_threshold")) sys.limits.tail_threshold = *v;
  if (auto v = r.number<std::int64_t>("solver", "time_grain_ns")) sys.limits.time_grain = Nanos{*v};
  if (auto v = r.number<std::size_t>("solver", "max_states")) sys.limits.max_states = *v;
  if (auto v = r.number<double>("solver", "theta")) file.solver.theta = *v;
  if (auto v = r.number<std::size_t>("solver", "max_iterations")) file.solver.max_iterations = *v;
  if (auto v = r.number<unsigned>("solver", "threads")) file.solver.threads = *v;
  if (auto text = r.raw("solver", "normalization")) {
    if (auto mode = parse_normalization(*text)) {
      file.normalization = *mode;
    } else {
      r.bad("solver.normalization",
            "expected max_stage_energy or idle_power, got '" + *text + "'");
    }
  }

  file.periods = r.number<std::uint64_t>("simulation", "periods");
  file.seed = r.number<std::uint64_t>("simulation", "seed");

  if (!r.issues().empty()) throw ConfigError(std::move(r.issues()));
  return file;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace asmsleep
