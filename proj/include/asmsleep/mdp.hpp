#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asmsleep/asm_model.hpp"
#include "asmsleep/hyperexp.hpp"

namespace asmsleep {

// Weights of the delay, energy and switching terms of the stage cost.
struct CostWeights {
  double delay = 0.0;      // eps1
  double energy = 0.0;     // eps2
  double switching = 0.0;  // eps3

  // Throws std::invalid_argument unless each weight is in [0, 1] and they
  // sum to 1 within 1e-12.
  static CostWeights make(double eps1, double eps2, double eps3 = 0.0);

  friend bool operator==(const CostWeights&, const CostWeights&) = default;
};

// Divisors that put the delay and energy stage terms on a [0, 1] scale.
struct CostNormalization {
  double delay_s;
  double energy_j;
};

enum class NormalizationMode {
  // delay / b_max, energy / max_l(P_l * b_l)
  max_stage_energy,
  // delay / b_max, energy / (P_idle * b_max)
  idle_power,
};

std::string_view to_string(NormalizationMode mode);
std::optional<NormalizationMode> parse_normalization(std::string_view text);

CostNormalization make_normalization(
    const ValidConfig& config,
    NormalizationMode mode = NormalizationMode::max_stage_energy);

// A decision point: the residual off-time law after `elapsed` without an
// arrival, plus the level of the block that just ended.
struct DpState {
  ResidualWeights residual;
  Nanos elapsed{0};
  std::optional<LevelId> prev_level;
};

DpState root_state(const ValidConfig& config);

struct Transition {
  DpState next;
  double survival;  // P(no arrival during the block)
};

Transition transition(const HyperExp& base, const DpState& state,
                      const SleepLevel& level);

inline double combine_cost(const CostWeights& w, const CostNormalization& norm,
                           double overshoot_s, double energy_j,
                           bool switches) {
  return w.delay * (overshoot_s / norm.delay_s) +
         w.energy * (energy_j / norm.energy_j) +
         (switches ? w.switching : 0.0);
}

// Throws DomainError if `level` is not enabled in `config`.
double stage_cost(const ValidConfig& config, const DpState& state,
                  LevelId level, const CostWeights& w,
                  const CostNormalization& norm);

using StateIndex = std::uint32_t;
inline constexpr StateIndex kTruncated = static_cast<StateIndex>(-1);

// One (state, action) pair with its stage-cost ingredients.
struct Edge {
  StateIndex next;  // kTruncated: survival below the tail threshold
  double survival;
  double overshoot_s;
  double energy_j;
  bool switches;
};

// Reachable decision states of one idle period, merged on
// (elapsed, previous level). The root is index 0 and indices follow
// breadth-first discovery order.
class StateSpace {
 public:
  static constexpr std::size_t kRoot = 0;

  std::size_t size() const noexcept { return states_.size(); }
  const DpState& state(std::size_t i) const { return states_[i]; }
  const std::vector<DpState>& states() const noexcept { return states_; }

  // Enabled levels, ascending off duration. Same action set in every state.
  const std::vector<SleepLevel>& actions() const noexcept { return actions_; }
  std::span<const Edge> edges(std::size_t i) const {
    return {edges_.data() + i * actions_.size(), actions_.size()};
  }

  bool tracks_previous_level() const noexcept { return track_prev_; }
  // Decision states on the longest chain from the root.
  std::size_t depth() const noexcept { return depth_; }

  std::optional<std::size_t> find(Nanos elapsed,
                                  std::optional<LevelId> prev) const;

 private:
  friend StateSpace build_state_space(const ValidConfig&, bool);

  std::vector<DpState> states_;
  std::vector<SleepLevel> actions_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  bool track_prev_ = false;
  std::size_t depth_ = 0;
};

// Fingerprint of everything that shapes the state space: distribution,
// enabled level durations, truncation limits and prev-level tracking.
std::string state_space_digest(const ValidConfig& config,
                               bool track_previous_level);

// Previous level is part of the state only when switching carries weight.
StateSpace build_state_space(const ValidConfig& config, const CostWeights& w);
// Throws ResourceError when the state count exceeds limits().max_states.
StateSpace build_state_space(const ValidConfig& config,
                             bool track_previous_level);

struct SolverSettings {
  double theta = 1e-10;  // stop once the max value change is below this
  std::size_t max_iterations = 100'000;
  unsigned threads = 1;  // 0: hardware concurrency
};

struct ValueTable {
  std::vector<double> values;
  bool converged = false;
  std::size_t iterations = 0;
  double final_delta = 0.0;
};

// Synchronous (Jacobi) sweeps of the Bellman operator from V = 0. Throws
// ConvergenceError after max_iterations sweeps.
ValueTable value_iteration(const StateSpace& space, const CostWeights& w,
                           const CostNormalization& norm,
                           const SolverSettings& settings = {});

// max_q |V(q) - min_b {c(q,b) + P(survive) V(g(q,b))}|
double bellman_residual(const StateSpace& space,
                        std::span<const double> values, const CostWeights& w,
                        const CostNormalization& norm);

struct PolicyBlock {
  Nanos start;
  LevelId level;
  friend bool operator==(const PolicyBlock&, const PolicyBlock&) = default;
};

struct PolicyEntry {
  Nanos elapsed;
  std::optional<LevelId> prev_level;
  LevelId choice;
  double value;
};

// Deterministic state -> level map (entries in StateSpace index order) and
// the block sequence it induces from the root up to the truncation horizon.
struct Policy {
  std::vector<PolicyEntry> entries;
  std::vector<PolicyBlock> blocks;

  std::size_t switch_count() const;
};

// Per-state argmin; exact ties go to the lightest level.
Policy extract_policy(const StateSpace& space, const ValueTable& table,
                      const CostWeights& w, const CostNormalization& norm);

// Every state picks `level`; values are that policy's expected cost.
Policy constant_policy(const StateSpace& space, LevelId level,
                       const CostWeights& w, const CostNormalization& norm);

// Expected cost-to-go of a fixed policy at every state. Throws
// std::invalid_argument if the policy does not match the space.
std::vector<double> evaluate_policy(const StateSpace& space,
                                    const Policy& policy, const CostWeights& w,
                                    const CostNormalization& norm);

// Closed-form evaluation of a policy's block sequence B_1, B_2, ... (the last
// block repeats past the truncation horizon until survival < 1e-15).
struct AnalyticSummary {
  double expected_off_time_s;   // E[tau]
  double expected_wake_time_s;  // E[T_X]
  double mean_added_delay_s;    // E[T_X] - E[tau]
  double expected_energy_j;
  std::array<double, 4> level_shares;  // w_l, indexed by level_index()
  double expected_switches;
  double eta;             // eps1 + eps2 * sum_l w_l P_l
  double cost;            // -eps1 E[tau] + eta E[T_X]  (no switching term)
  double normalized_cost; // expectation of the normalized stage costs
  double energy_reduction;
};

AnalyticSummary analytic_cost(const Policy& policy, const ValidConfig& config,
                              const CostWeights& w,
                              const CostNormalization& norm);

}  // namespace asmsleep
