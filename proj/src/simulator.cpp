#include "asmsleep/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "asmsleep/parallel.hpp"

namespace asmsleep {

BlockSchedule::BlockSchedule(const Policy& policy, const ValidConfig& config) {
  if (policy.blocks.empty()) {
    throw std::invalid_argument("policy has no block sequence");
  }
  Nanos end{0};
  double energy = 0.0;
  std::array<double, 4> level_time{};
  std::uint64_t switches = 0;
  for (std::size_t k = 0; k < policy.blocks.size(); ++k) {
    const PolicyBlock& block = policy.blocks[k];
    if (block.start != end) {
      throw std::invalid_argument("policy block sequence is not contiguous");
    }
    const SleepLevel& level = config.level(block.level);
    const Nanos b = off_duration(level);
    end += b;
    energy += level.power() * to_seconds(b);
    level_time[level_index(block.level)] += to_seconds(b);
    if (k > 0 && block.level != policy.blocks[k - 1].level) ++switches;
    steps_.push_back(Step{end, to_seconds(end), energy, level_time, switches});
    levels_.push_back(block.level);
  }
  last_level_ = levels_.back();
  last_duration_ = off_duration(config.level(last_level_));
  last_power_w_ = config.level(last_level_).power();
}

std::size_t BlockSchedule::blocks_to_cover(double tau_s) const {
  const auto it = std::lower_bound(
      steps_.begin(), steps_.end(), tau_s,
      [](const Step& s, double t) { return s.end_s < t; });
  if (it != steps_.end()) {
    return static_cast<std::size_t>(it - steps_.begin()) + 1;
  }
  // Beyond the horizon: extra blocks of the last level.
  const Nanos horizon = steps_.back().end;
  auto end_after = [&](std::int64_t extra) {
    return to_seconds(horizon + extra * last_duration_);
  };
  std::int64_t extra = static_cast<std::int64_t>(
      std::ceil((tau_s - steps_.back().end_s) / to_seconds(last_duration_)));
  extra = std::max<std::int64_t>(extra, 1);
  while (end_after(extra) < tau_s) ++extra;
  while (extra > 1 && end_after(extra - 1) >= tau_s) --extra;
  return steps_.size() + static_cast<std::size_t>(extra);
}

BlockSchedule::Outcome BlockSchedule::settle(double tau_s) const {
  const std::size_t count = blocks_to_cover(tau_s);
  if (count <= steps_.size()) {
    const Step& s = steps_[count - 1];
    return Outcome{s.end_s, s.energy_j, s.level_time_s, s.switches, count};
  }
  const Step& s = steps_.back();
  const auto extra = static_cast<std::int64_t>(count - steps_.size());
  const double extra_time = to_seconds(extra * last_duration_);
  Outcome out{to_seconds(s.end + extra * last_duration_),
              s.energy_j + last_power_w_ * extra_time, s.level_time_s,
              s.switches, count};
  out.level_time_s[level_index(last_level_)] += extra_time;
  return out;
}

IdleTrace BlockSchedule::trace(double tau_s) const {
  const Outcome outcome = settle(tau_s);
  IdleTrace trace;
  trace.tau_s = tau_s;
  trace.blocks.reserve(outcome.blocks);
  Nanos start{0};
  for (std::size_t k = 0; k < outcome.blocks; ++k) {
    const bool scheduled = k < steps_.size();
    const LevelId level = scheduled ? levels_[k] : last_level_;
    const Nanos end = scheduled ? steps_[k].end : start + last_duration_;
    trace.blocks.push_back(TraceBlock{level, to_seconds(start), to_seconds(end)});
    start = end;
  }
  trace.added_delay_s = outcome.wake_time_s - tau_s;
  trace.energy_j = outcome.energy_j;
  trace.switches = outcome.switches;
  return trace;
}

IdleTrace simulate_idle_period(const Policy& policy, const ValidConfig& config,
                               RandomStream& stream) {
  const BlockSchedule schedule(policy, config);
  return schedule.trace(sample(config.off_time(), stream));
}

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  Estimate estimate(double n) const {
    const double m = sum / n;
    if (n < 2.0) return {m, 0.0};
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
    return {m, std::sqrt(var / n)};
  }
};

struct Partial {
  std::uint64_t count = 0;
  Moments delay, wake, energy, switches, cost;
  double energy_wake = 0.0;  // sum of energy * T_X
  std::array<double, 4> level_time{};

  void merge(const Partial& o) {
    count += o.count;
    delay.merge(o.delay);
    wake.merge(o.wake);
    energy.merge(o.energy);
    switches.merge(o.switches);
    cost.merge(o.cost);
    energy_wake += o.energy_wake;
    for (std::size_t k = 0; k < level_time.size(); ++k) level_time[k] += o.level_time[k];
  }
};

constexpr std::uint64_t kReplicationsPerChunk = 8192;

}  // namespace

SimMetrics run_experiment(const Policy& policy, const ValidConfig& config,
                          std::uint64_t n_periods, std::uint64_t master_seed,
                          const ExperimentOptions& options) {
  if (n_periods == 0) throw std::invalid_argument("n_periods must be >= 1");
  const BlockSchedule schedule(policy, config);
  const HyperExp& dist = config.off_time();

  const std::uint64_t chunks =
      (n_periods + kReplicationsPerChunk - 1) / kReplicationsPerChunk;
  std::vector<Partial> partials(chunks);
  for_each_chunk(chunks, options.threads, [&](std::size_t c) {
    Partial& p = partials[c];
    const std::uint64_t begin = c * kReplicationsPerChunk;
    const std::uint64_t end = std::min(n_periods, begin + kReplicationsPerChunk);
    for (std::uint64_t r = begin; r < end; ++r) {
      RandomStream stream = RandomStream::substream(master_seed, r);
      const double tau = sample(dist, stream);
      const BlockSchedule::Outcome o = schedule.settle(tau);
      const double delay = o.wake_time_s - tau;
      const auto sw = static_cast<double>(o.switches);
      ++p.count;
      p.delay.add(delay);
      p.wake.add(o.wake_time_s);
      p.energy.add(o.energy_j);
      p.switches.add(sw);
      p.energy_wake += o.energy_j * o.wake_time_s;
      for (std::size_t k = 0; k < 4; ++k) p.level_time[k] += o.level_time_s[k];
      if (options.probe) {
        p.cost.add(combine_cost(options.probe->weights,
                                options.probe->normalization, delay, o.energy_j,
                                false) +
                   options.probe->weights.switching * sw);
      }
    }
  });

  Partial total;
  for (const Partial& p : partials) total.merge(p);

  const auto n = static_cast<double>(total.count);
  SimMetrics m;
  m.n_periods = total.count;
  m.mean_delay_s = total.delay.estimate(n);
  m.mean_wake_time_s = total.wake.estimate(n);
  m.mean_energy_j = total.energy.estimate(n);
  m.mean_switches = total.switches.estimate(n);
  if (options.probe) m.mean_cost = total.cost.estimate(n);

  const double idle_w = config.power_states().idle_w;
  const double ratio = total.energy.sum / (idle_w * total.wake.sum);
  m.energy_reduction.value = 1.0 - ratio;
  if (n >= 2.0) {
    // Delta method for a ratio of means: residuals e_i - ratio * P_idle * T_i.
    const double c = ratio * idle_w;
    const double ss = total.energy.sum_sq - 2.0 * c * total.energy_wake +
                      c * c * total.wake.sum_sq;
    const double var = std::max(0.0, ss / (n - 1.0));
    const double denom = idle_w * (total.wake.sum / n);
    m.energy_reduction.std_error = std::sqrt(var / n) / denom;
  }
  for (std::size_t k = 0; k < 4; ++k) {
    m.level_shares[k] = total.level_time[k] / total.wake.sum;
  }
  return m;
}

PolicySummary summarize(const Policy& policy) {
  PolicySummary s;
  s.blocks = policy.blocks.size();
  s.switches = policy.switch_count();

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash ^= (v >> (8 * i)) & 0xffu;
      hash *= 0x100000001b3ULL;
    }
  };
  std::ostringstream runs;
  std::size_t k = 0;
  while (k < policy.blocks.size()) {
    std::size_t j = k;
    while (j < policy.blocks.size() && policy.blocks[j].level == policy.blocks[k].level) ++j;
    if (k > 0) runs << ' ';
    runs << to_string(policy.blocks[k].level) << 'x' << (j - k);
    k = j;
  }
  for (const PolicyBlock& b : policy.blocks) {
    feed(static_cast<std::uint64_t>(b.start.count()));
    feed(static_cast<std::uint64_t>(b.level));
  }
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << hash;
  s.digest = hex.str();
  s.runs = runs.str();
  return s;
}

std::vector<SweepRow> sweep(const ValidConfig& config,
                            std::span<const CostWeights> grid,
                            std::uint64_t n_periods, std::uint64_t master_seed,
                            const SweepSettings& settings) {
  const CostNormalization norm = make_normalization(config, settings.normalization);
  SolverSettings solver = settings.solver;
  solver.threads = settings.threads;

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const CostWeights& w : grid) {
    SweepRow row{w, "ok", std::nullopt, std::nullopt};
    try {
      const CostWeights checked = CostWeights::make(w.delay, w.energy, w.switching);
      const StateSpace space = build_state_space(config, checked);
      const ValueTable table = value_iteration(space, checked, norm, solver);
      const Policy policy = extract_policy(space, table, checked, norm);
      row.policy = summarize(policy);
      ExperimentOptions options;
      options.threads = settings.threads;
      options.probe = CostProbe{checked, norm};
      row.metrics = run_experiment(policy, config, n_periods, master_seed, options);
    } catch (const std::exception& e) {
      row.status = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace asmsleep
