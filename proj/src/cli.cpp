#include "asmsleep/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "asmsleep/config_file.hpp"
#include "asmsleep/errors.hpp"
#include "asmsleep/policy_io.hpp"
#include "asmsleep/simulator.hpp"

namespace asmsleep::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultPeriods = 1'000'000;
constexpr std::uint64_t kDefaultSeed = 1;

double snap(double v) { return std::round(v * 1e12) / 1e12; }

// Derived weight without range checks, for grid points.
CostWeights complete(std::optional<double> e1, std::optional<double> e2,
                     std::optional<double> e3) {
  const int given = e1.has_value() + e2.has_value() + e3.has_value();
  if (given == 1 && !e3) {
    e3 = 0.0;
  } else if (given < 2) {
    throw std::invalid_argument(
        "cost weights are underdetermined: give eps1 or eps2 (and optionally eps3)");
  }
  if (!e1) e1 = snap(1.0 - *e2 - *e3);
  if (!e2) e2 = snap(1.0 - *e1 - *e3);
  if (!e3) e3 = snap(1.0 - *e1 - *e2);
  return CostWeights{*e1, *e2, *e3};
}

std::vector<double> parse_axis(std::string_view values) {
  auto number = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("bad grid value '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<double> out;
  if (values.find(':') != std::string_view::npos) {
    const auto c1 = values.find(':');
    const auto c2 = values.find(':', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw std::invalid_argument("range must be start:stop:step");
    }
    const double start = number(values.substr(0, c1));
    const double stop = number(values.substr(c1 + 1, c2 - c1 - 1));
    const double step = number(values.substr(c2 + 1));
    if (!(step > 0.0) || stop < start) {
      throw std::invalid_argument("range needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(snap(start + i * step));
    return out;
  }
  std::size_t begin = 0;
  while (true) {
    const auto comma = values.find(',', begin);
    out.push_back(number(values.substr(begin, comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

struct Loaded {
  ConfigFile file;
  ValidConfig config;
};

Loaded load(const RunConfig& rc) {
  ConfigFile file = load_config(rc.config);
  ValidConfig config = validate(file.system);
  return Loaded{std::move(file), std::move(config)};
}

unsigned threads_for(const RunConfig& rc, const ConfigFile& file) {
  return rc.threads.value_or(file.solver.threads);
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

void print_config(std::ostream& out, const ValidConfig& config,
                  const ConfigFile& file) {
  out << std::setprecision(10);
  out << "power_states: active=" << config.power_states().active_w
      << " W idle=" << config.power_states().idle_w << " W\n";
  out << "enabled_levels:\n";
  for (const SleepLevel& l : config.levels()) {
    out << "  " << to_string(l.id) << ": deactivation="
        << l.deactivation.count() / 1e3 << " us min_sleep="
        << l.min_sleep.count() / 1e3 << " us activation="
        << l.activation.count() / 1e3 << " us off_duration="
        << off_duration(l).count() / 1e3 << " us power=" << l.power() << " W\n";
  }
  auto list = [&](std::span<const double> v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    out << ']';
  };
  out << "off_time: lambda=";
  list(config.off_time().rates());
  out << " q=";
  list(config.off_time().weights());
  out << " mean=" << mean(config.off_time()) << " s\n";
  out << "limits: tail_threshold=" << config.limits().tail_threshold
      << " time_grain_ns=" << config.limits().time_grain.count()
      << " max_states=" << config.limits().max_states << '\n';
  out << "normalization: " << to_string(file.normalization) << '\n';
}

ExitCode cmd_validate(const RunConfig& rc, std::ostream& out) {
  const Loaded l = load(rc);
  print_config(out, l.config, l.file);
  out << "config OK\n";
  return ExitCode::ok;
}

ExitCode cmd_solve(const RunConfig& rc, std::ostream& out) {
  const Loaded l = load(rc);
  // Weights given on the command line replace the file's weights as a set.
  const bool from_cli = rc.eps1 || rc.eps2 || rc.eps3;
  const CostWeights w = from_cli ? resolve_weights(rc.eps1, rc.eps2, rc.eps3)
                                 : resolve_weights(l.file.eps1, l.file.eps2, l.file.eps3);
  SolverSettings solver = l.file.solver;
  solver.threads = threads_for(rc, l.file);
  const CostNormalization norm = make_normalization(l.config, l.file.normalization);

  const StateSpace space = build_state_space(l.config, w);
  const ValueTable table = value_iteration(space, w, norm, solver);
  PolicyDocument doc{state_space_digest(l.config, space.tracks_previous_level()),
                     w, l.file.normalization, norm,
                     extract_policy(space, table, w, norm)};

  ensure_out_dir(rc.out);
  {
    auto f = open_out(rc.out / "policy.json");
    write_policy_json(f, doc);
  }
  {
    auto f = open_out(rc.out / "timeline.csv");
    write_timeline_csv(f, doc.policy);
  }
  const PolicySummary summary = summarize(doc.policy);
  out << std::setprecision(10) << "weights: eps1=" << w.delay
      << " eps2=" << w.energy << " eps3=" << w.switching << '\n'
      << "states: " << space.size() << " (depth " << space.depth() << ")\n"
      << "value iteration: " << table.iterations << " sweeps, final delta "
      << table.final_delta << '\n'
      << "root value: " << table.values[StateSpace::kRoot] << '\n'
      << "root sequence: " << summary.runs << " (" << summary.switches
      << " switches)\n"
      << "wrote " << (rc.out / "policy.json").string() << " and "
      << (rc.out / "timeline.csv").string() << '\n';
  return ExitCode::ok;
}

ExitCode cmd_simulate(const RunConfig& rc, std::ostream& out,
                      std::ostream& err) {
  const Loaded l = load(rc);
  const fs::path policy_path = rc.policy.empty() ? rc.out / "policy.json" : rc.policy;
  std::ifstream in(policy_path);
  if (!in) throw IoError("cannot open policy file " + policy_path.string());
  const PolicyDocument doc = read_policy_json(in);

  const std::string expected =
      state_space_digest(l.config, doc.weights.switching > 0.0);
  if (doc.state_space_digest != expected) {
    err << "policy " << policy_path.string() << " was solved for state space "
        << doc.state_space_digest << ", config gives " << expected << '\n';
    return ExitCode::digest_mismatch;
  }

  const std::uint64_t periods = rc.periods.value_or(l.file.periods.value_or(kDefaultPeriods));
  const std::uint64_t seed = rc.seed.value_or(l.file.seed.value_or(kDefaultSeed));
  ExperimentOptions options;
  options.threads = threads_for(rc, l.file);
  options.probe = CostProbe{doc.weights, doc.normalization};
  SweepRow row{doc.weights, "ok", summarize(doc.policy),
               run_experiment(doc.policy, l.config, periods, seed, options)};

  ensure_out_dir(rc.out);
  {
    auto f = open_out(rc.out / "metrics.csv");
    write_results_csv(f, std::span<const SweepRow>(&row, 1));
  }
  if (rc.trace_dump > 0) {
    auto f = open_out(rc.out / "traces.jsonl");
    const BlockSchedule schedule(doc.policy, l.config);
    for (std::uint64_t r = 0; r < rc.trace_dump; ++r) {
      RandomStream stream = RandomStream::substream(seed, r);
      write_trace_jsonl(f, schedule.trace(sample(l.config.off_time(), stream)));
    }
  }
  const SimMetrics& m = *row.metrics;
  out << std::setprecision(6) << "periods: " << m.n_periods << " seed: " << seed
      << '\n'
      << "energy_reduction: " << m.energy_reduction.value << " +- "
      << m.energy_reduction.std_error << '\n'
      << "mean_delay_ms: " << m.mean_delay_s.value * 1e3 << " +- "
      << m.mean_delay_s.std_error * 1e3 << '\n'
      << "mean_switches: " << m.mean_switches.value << '\n'
      << "wrote " << (rc.out / "metrics.csv").string() << '\n';
  return ExitCode::ok;
}

ExitCode cmd_sweep(const RunConfig& rc, std::ostream& out) {
  const Loaded l = load(rc);
  if (!rc.grid) throw std::invalid_argument("sweep needs --grid");
  const std::vector<CostWeights> grid = parse_grid(*rc.grid);
  const std::uint64_t periods = rc.periods.value_or(l.file.periods.value_or(kDefaultPeriods));
  const std::uint64_t seed = rc.seed.value_or(l.file.seed.value_or(kDefaultSeed));

  SweepSettings settings;
  settings.solver = l.file.solver;
  settings.normalization = l.file.normalization;
  settings.threads = threads_for(rc, l.file);
  const std::vector<SweepRow> rows = sweep(l.config, grid, periods, seed, settings);

  ensure_out_dir(rc.out);
  {
    auto f = open_out(rc.out / "sweep.csv");
    write_results_csv(f, rows);
  }
  std::size_t failed = 0;
  for (const SweepRow& row : rows) failed += row.status != "ok";
  out << "grid points: " << rows.size() << " (" << failed << " failed)\n"
      << "wrote " << (rc.out / "sweep.csv").string() << '\n';
  return ExitCode::ok;
}

}  // namespace

CostWeights resolve_weights(std::optional<double> eps1,
                            std::optional<double> eps2,
                            std::optional<double> eps3) {
  const CostWeights w = complete(eps1, eps2, eps3);
  return CostWeights::make(w.delay, w.energy, w.switching);
}

std::vector<CostWeights> parse_grid(std::string_view spec) {
  std::map<std::string, std::vector<double>> axes;
  std::vector<std::string> order;
  std::size_t begin = 0;
  while (begin <= spec.size()) {
    const auto semi = spec.find(';', begin);
    std::string_view axis = spec.substr(begin, semi - begin);
    if (!axis.empty()) {
      const auto eq = axis.find('=');
      if (eq == std::string_view::npos) {
        throw std::invalid_argument("grid axis must be name=values");
      }
      const std::string name(axis.substr(0, eq));
      if (name != "eps1" && name != "eps2" && name != "eps3") {
        throw std::invalid_argument("unknown grid axis '" + name + "'");
      }
      if (axes.count(name)) throw std::invalid_argument("duplicate grid axis " + name);
      axes[name] = parse_axis(axis.substr(eq + 1));
      order.push_back(name);
    }
    if (semi == std::string_view::npos) break;
    begin = semi + 1;
  }
  if (axes.empty()) throw std::invalid_argument("empty grid");

  std::vector<CostWeights> points;
  std::vector<std::size_t> idx(order.size(), 0);
  while (true) {
    std::optional<double> e[3];
    for (std::size_t a = 0; a < order.size(); ++a) {
      e[order[a][3] - '1'] = axes[order[a]][idx[a]];
    }
    points.push_back(complete(e[0], e[1], e[2]));
    bool advanced = false;
    for (std::size_t a = order.size(); a-- > 0;) {
      if (++idx[a] < axes[order[a]].size()) {
        advanced = true;
        break;
      }
      idx[a] = 0;
    }
    if (!advanced) return points;
  }
}

ExitCode run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  try {
    if (rc.command == "validate") return cmd_validate(rc, out);
    if (rc.command == "solve") return cmd_solve(rc, out);
    if (rc.command == "simulate") return cmd_simulate(rc, out, err);
    if (rc.command == "sweep") return cmd_sweep(rc, out);
    err << "unknown command '" << rc.command << "'\n";
    return ExitCode::usage;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return ExitCode::config;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return ExitCode::io;
  } catch (const ConvergenceError& e) {
    err << "solver error: " << e.what() << '\n';
    return ExitCode::solver;
  } catch (const ResourceError& e) {
    err << "solver error: " << e.what() << '\n';
    return ExitCode::solver;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return ExitCode::config;
  } catch (const std::domain_error& e) {
    err << "configuration error: " << e.what() << '\n';
    return ExitCode::config;
  }
}

}  // namespace asmsleep::cli
