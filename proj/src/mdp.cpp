#include "asmsleep/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "asmsleep/errors.hpp"
#include "asmsleep/parallel.hpp"

namespace asmsleep {

CostWeights CostWeights::make(double eps1, double eps2, double eps3) {
  for (double e : {eps1, eps2, eps3}) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::invalid_argument("cost weights must lie in [0, 1]");
    }
  }
  if (std::abs(eps1 + eps2 + eps3 - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "cost weights must sum to 1, got " << eps1 << " + " << eps2
        << " + " << eps3;
    throw std::invalid_argument(msg.str());
  }
  return CostWeights{eps1, eps2, eps3};
}

std::string_view to_string(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::max_stage_energy: return "max_stage_energy";
    case NormalizationMode::idle_power: return "idle_power";
  }
  return "?";
}

std::optional<NormalizationMode> parse_normalization(std::string_view text) {
  if (text == "max_stage_energy") return NormalizationMode::max_stage_energy;
  if (text == "idle_power") return NormalizationMode::idle_power;
  return std::nullopt;
}

CostNormalization make_normalization(const ValidConfig& config,
                                     NormalizationMode mode) {
  const double b_max = to_seconds(config.max_level_duration());
  double energy = 0.0;
  switch (mode) {
    case NormalizationMode::max_stage_energy:
      for (const auto& level : config.levels()) {
        energy = std::max(energy, level.power() * to_seconds(off_duration(level)));
      }
      break;
    case NormalizationMode::idle_power:
      energy = config.power_states().idle_w * b_max;
      break;
  }
  return CostNormalization{b_max, energy};
}

DpState root_state(const ValidConfig& config) {
  return DpState{config.off_time().initial(), Nanos{0}, std::nullopt};
}

Transition transition(const HyperExp& base, const DpState& state,
                      const SleepLevel& level) {
  const Nanos b = off_duration(level);
  const double b_s = to_seconds(b);
  return Transition{
      DpState{residual(base, state.residual, b_s), state.elapsed + b, level.id},
      tail_from(base, state.residual, b_s)};
}

double stage_cost(const ValidConfig& config, const DpState& state,
                  LevelId level_id, const CostWeights& w,
                  const CostNormalization& norm) {
  const SleepLevel& level = config.level(level_id);
  const double b = to_seconds(off_duration(level));
  const bool switches = state.prev_level && *state.prev_level != level_id;
  return combine_cost(w, norm,
                      expected_overshoot(config.off_time(), state.residual, b),
                      level.power() * b, switches);
}

namespace {

std::uint64_t state_key(Nanos elapsed, std::optional<LevelId> prev) {
  const auto tag = prev ? static_cast<std::uint64_t>(*prev) : 0u;
  return (static_cast<std::uint64_t>(elapsed.count()) << 3) | tag;
}

Nanos round_to_grain(Nanos t, Nanos grain) {
  if (grain == Nanos{1}) return t;
  return grain * ((t.count() + grain.count() / 2) / grain.count());
}

}  // namespace

std::optional<std::size_t> StateSpace::find(Nanos elapsed,
                                            std::optional<LevelId> prev) const {
  if (!track_prev_) prev.reset();
  const auto it = index_.find(state_key(elapsed, prev));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string state_space_digest(const ValidConfig& config,
                               bool track_previous_level) {
  std::ostringstream canon;
  canon << std::hexfloat;
  for (double r : config.off_time().rates()) canon << 'r' << r;
  for (double q : config.off_time().weights()) canon << 'q' << q;
  for (const SleepLevel& l : config.levels()) {
    canon << 'L' << static_cast<int>(l.id) << ':' << l.deactivation.count()
          << ',' << l.min_sleep.count() << ',' << l.activation.count();
  }
  canon << 'd' << config.limits().tail_threshold << 'g'
        << config.limits().time_grain.count() << 'p' << track_previous_level;

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon.str()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << hash;
  return hex.str();
}

StateSpace build_state_space(const ValidConfig& config, const CostWeights& w) {
  return build_state_space(config, w.switching > 0.0);
}

StateSpace build_state_space(const ValidConfig& config,
                             bool track_previous_level) {
  const HyperExp& base = config.off_time();
  const StateSpaceLimits& limits = config.limits();

  StateSpace space;
  space.track_prev_ = track_previous_level;
  space.actions_ = config.levels();
  const std::size_t n_actions = space.actions_.size();

  space.states_.push_back(root_state(config));
  space.index_.emplace(state_key(Nanos{0}, std::nullopt), 0);

  // Breadth-first: states_ doubles as the queue.
  for (std::size_t i = 0; i < space.states_.size(); ++i) {
    for (const SleepLevel& level : space.actions_) {
      const DpState& from = space.states_[i];
      const Nanos b = off_duration(level);
      const double b_s = to_seconds(b);
      const Nanos next_elapsed =
          round_to_grain(from.elapsed + b, limits.time_grain);

      Edge edge{kTruncated, tail_from(base, from.residual, b_s),
                expected_overshoot(base, from.residual, b_s),
                level.power() * b_s,
                from.prev_level && *from.prev_level != level.id};

      if (tail(base, to_seconds(next_elapsed)) >= limits.tail_threshold) {
        const std::optional<LevelId> prev =
            track_previous_level ? std::optional<LevelId>(level.id)
                                 : std::nullopt;
        const auto [it, inserted] =
            space.index_.try_emplace(state_key(next_elapsed, prev),
                                     space.states_.size());
        if (inserted) {
          if (space.states_.size() >= limits.max_states) {
            std::ostringstream msg;
            msg << "state space exceeds the cap of " << limits.max_states
                << " states (tail threshold " << limits.tail_threshold
                << "); raise max_states or the tail threshold";
            throw ResourceError(msg.str());
          }
          // From q0 directly, so equal elapsed gives bit-equal residuals.
          ResidualWeights next_residual =
              residual(base, base.initial(), to_seconds(next_elapsed));
          space.states_.push_back(
              DpState{std::move(next_residual), next_elapsed, prev});
        }
        edge.next = static_cast<StateIndex>(it->second);
      }
      space.edges_.push_back(edge);
    }
  }

  // Longest chain: every edge strictly increases elapsed time.
  std::vector<std::size_t> order(space.states_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return space.states_[a].elapsed < space.states_[b].elapsed;
  });
  std::vector<std::size_t> chain(space.states_.size(), 1);
  for (std::size_t i : order) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      const Edge& e = space.edges_[i * n_actions + a];
      if (e.next != kTruncated) chain[e.next] = std::max(chain[e.next], chain[i] + 1);
    }
  }
  space.depth_ = *std::max_element(chain.begin(), chain.end());
  return space;
}

namespace {

void require_compatible(const StateSpace& space, const CostWeights& w) {
  if (w.switching > 0.0 && !space.tracks_previous_level()) {
    throw std::invalid_argument(
        "switching weight > 0 needs a state space that tracks the previous level");
  }
}

std::vector<double> stage_costs(const StateSpace& space, const CostWeights& w,
                                const CostNormalization& norm) {
  const std::size_t n_actions = space.actions().size();
  std::vector<double> costs(space.size() * n_actions);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto edges = space.edges(i);
    for (std::size_t a = 0; a < n_actions; ++a) {
      costs[i * n_actions + a] = combine_cost(
          w, norm, edges[a].overshoot_s, edges[a].energy_j, edges[a].switches);
    }
  }
  return costs;
}

double continuation(const Edge& e, std::span<const double> values) {
  return e.next == kTruncated ? 0.0 : e.survival * values[e.next];
}

constexpr std::size_t kChunk = 1024;

}  // namespace

ValueTable value_iteration(const StateSpace& space, const CostWeights& w,
                           const CostNormalization& norm,
                           const SolverSettings& settings) {
  require_compatible(space, w);
  if (!(settings.theta > 0.0)) {
    throw std::invalid_argument("theta must be > 0");
  }
  const std::size_t n = space.size();
  const std::size_t n_actions = space.actions().size();
  const std::vector<double> costs = stage_costs(space, w, norm);
  const std::size_t chunks = (n + kChunk - 1) / kChunk;

  ValueTable table;
  std::vector<double> current(n, 0.0);
  std::vector<double> next(n, 0.0);
  std::vector<double> chunk_delta(chunks, 0.0);

  while (table.iterations < settings.max_iterations) {
    for_each_chunk(chunks, settings.threads, [&](std::size_t c) {
      double delta = 0.0;
      const std::size_t end = std::min(n, (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        const auto edges = space.edges(i);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n_actions; ++a) {
          best = std::min(best, costs[i * n_actions + a] +
                                    continuation(edges[a], current));
        }
        next[i] = best;
        delta = std::max(delta, std::abs(best - current[i]));
      }
      chunk_delta[c] = delta;
    });
    current.swap(next);
    ++table.iterations;
    table.final_delta = *std::max_element(chunk_delta.begin(), chunk_delta.end());
    if (table.final_delta < settings.theta) {
      table.converged = true;
      table.values = std::move(current);
      return table;
    }
  }
  std::ostringstream msg;
  msg << "value iteration did not converge in " << table.iterations
      << " sweeps (final delta " << table.final_delta << ", theta "
      << settings.theta << ")";
  throw ConvergenceError(msg.str(), table.final_delta, table.iterations);
}

double bellman_residual(const StateSpace& space,
                        std::span<const double> values, const CostWeights& w,
                        const CostNormalization& norm) {
  require_compatible(space, w);
  double worst = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto edges = space.edges(i);
    double best = std::numeric_limits<double>::infinity();
    for (const Edge& e : edges) {
      best = std::min(best, combine_cost(w, norm, e.overshoot_s, e.energy_j,
                                         e.switches) +
                                continuation(e, values));
    }
    worst = std::max(worst, std::abs(values[i] - best));
  }
  return worst;
}

std::size_t Policy::switch_count() const {
  std::size_t switches = 0;
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    if (blocks[k].level != blocks[k - 1].level) ++switches;
  }
  return switches;
}

namespace {

Policy assemble(const StateSpace& space, const std::vector<std::size_t>& action,
                std::span<const double> values) {
  Policy policy;
  policy.entries.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const DpState& s = space.state(i);
    policy.entries.push_back(PolicyEntry{s.elapsed, s.prev_level,
                                         space.actions()[action[i]].id,
                                         values[i]});
  }
  std::size_t i = StateSpace::kRoot;
  while (true) {
    const std::size_t a = action[i];
    policy.blocks.push_back(PolicyBlock{space.state(i).elapsed,
                                        space.actions()[a].id});
    const StateIndex next = space.edges(i)[a].next;
    if (next == kTruncated) break;
    i = next;
  }
  return policy;
}

std::vector<std::size_t> policy_actions(const StateSpace& space,
                                        const Policy& policy) {
  if (policy.entries.size() != space.size()) {
    throw std::invalid_argument("policy does not cover the state space");
  }
  std::vector<std::size_t> action(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const PolicyEntry& entry = policy.entries[i];
    if (entry.elapsed != space.state(i).elapsed ||
        entry.prev_level != space.state(i).prev_level) {
      throw std::invalid_argument("policy entry does not match state " +
                                  std::to_string(i));
    }
    const auto& actions = space.actions();
    const auto it = std::find_if(actions.begin(), actions.end(),
                                 [&](const SleepLevel& l) { return l.id == entry.choice; });
    if (it == actions.end()) {
      throw std::invalid_argument("policy chooses a level that is not enabled");
    }
    action[i] = static_cast<std::size_t>(it - actions.begin());
  }
  return action;
}

// Fixed-policy evaluation. States are visited by decreasing elapsed time,
// so every successor is final before it is read.
std::vector<double> evaluate_actions(const StateSpace& space,
                                     const std::vector<std::size_t>& action,
                                     const CostWeights& w,
                                     const CostNormalization& norm) {
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return space.state(a).elapsed > space.state(b).elapsed;
  });
  std::vector<double> values(space.size(), 0.0);
  for (std::size_t i : order) {
    const Edge& e = space.edges(i)[action[i]];
    values[i] = combine_cost(w, norm, e.overshoot_s, e.energy_j, e.switches) +
                continuation(e, values);
  }
  return values;
}

}  // namespace

Policy extract_policy(const StateSpace& space, const ValueTable& table,
                      const CostWeights& w, const CostNormalization& norm) {
  require_compatible(space, w);
  if (table.values.size() != space.size()) {
    throw std::invalid_argument("value table does not match the state space");
  }
  std::vector<std::size_t> action(space.size(), 0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto edges = space.edges(i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < edges.size(); ++a) {
      const double q = combine_cost(w, norm, edges[a].overshoot_s,
                                    edges[a].energy_j, edges[a].switches) +
                       continuation(edges[a], table.values);
      if (q < best) {
        best = q;
        action[i] = a;
      }
    }
  }
  return assemble(space, action, table.values);
}

Policy constant_policy(const StateSpace& space, LevelId level,
                       const CostWeights& w, const CostNormalization& norm) {
  require_compatible(space, w);
  const auto& actions = space.actions();
  const auto it = std::find_if(actions.begin(), actions.end(),
                               [&](const SleepLevel& l) { return l.id == level; });
  if (it == actions.end()) {
    throw DomainError("sleep level " + std::string(to_string(level)) +
                      " is not enabled");
  }
  const std::vector<std::size_t> action(
      space.size(), static_cast<std::size_t>(it - actions.begin()));
  return assemble(space, action, evaluate_actions(space, action, w, norm));
}

std::vector<double> evaluate_policy(const StateSpace& space,
                                    const Policy& policy, const CostWeights& w,
                                    const CostNormalization& norm) {
  require_compatible(space, w);
  return evaluate_actions(space, policy_actions(space, policy), w, norm);
}

AnalyticSummary analytic_cost(const Policy& policy, const ValidConfig& config,
                              const CostWeights& w,
                              const CostNormalization& norm) {
  if (policy.blocks.empty()) {
    throw std::invalid_argument("policy has no block sequence");
  }
  constexpr double kSeriesCutoff = 1e-15;
  const HyperExp& dist = config.off_time();

  AnalyticSummary out{};
  out.expected_off_time_s = mean(dist);

  double wake = 0.0;
  double energy = 0.0;
  double overshoot = 0.0;
  double switches = 0.0;
  std::array<double, 4> level_time{};

  // T_k is tracked in integer nanoseconds; the survival mass P(tau > T_k)
  // weights each block.
  Nanos t{0};
  std::optional<LevelId> prev;
  auto add_block = [&](LevelId id) {
    const SleepLevel& level = config.level(id);
    const double b = to_seconds(off_duration(level));
    const double survive = tail(dist, to_seconds(t));
    const ResidualWeights g = residual(dist, dist.initial(), to_seconds(t));
    wake += survive * b;
    energy += survive * level.power() * b;
    overshoot += survive * expected_overshoot(dist, g, b);
    level_time[level_index(id)] += survive * b;
    if (prev && *prev != id) switches += survive;
    prev = id;
    t += off_duration(level);
    return survive;
  };

  for (const PolicyBlock& block : policy.blocks) {
    if (block.start != t) {
      throw std::invalid_argument("policy block sequence is not contiguous");
    }
    add_block(block.level);
  }
  const LevelId last = policy.blocks.back().level;
  while (tail(dist, to_seconds(t)) >= kSeriesCutoff) add_block(last);

  out.expected_wake_time_s = wake;
  out.mean_added_delay_s = wake - out.expected_off_time_s;
  out.expected_energy_j = energy;
  out.expected_switches = switches;
  double weighted_power = 0.0;
  for (LevelId id : kAllLevels) {
    const std::size_t k = level_index(id);
    out.level_shares[k] = level_time[k] / wake;
    if (out.level_shares[k] > 0.0) {
      weighted_power += out.level_shares[k] * config.level(id).power();
    }
  }
  out.eta = w.delay + w.energy * weighted_power;
  out.cost = -w.delay * out.expected_off_time_s + out.eta * wake;
  out.normalized_cost = w.delay * overshoot / norm.delay_s +
                        w.energy * energy / norm.energy_j +
                        w.switching * switches;
  out.energy_reduction = 1.0 - energy / (config.power_states().idle_w * wake);
  return out;
}

}  // namespace asmsleep
