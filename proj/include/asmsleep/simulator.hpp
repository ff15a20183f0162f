#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asmsleep/asm_model.hpp"
#include "asmsleep/mdp.hpp"
#include "asmsleep/rng.hpp"

namespace asmsleep {

struct TraceBlock {
  LevelId level;
  double start_s;
  double end_s;
};

// One idle period: sleep blocks run back to back until the first wake-up
// check at or after the arrival time tau.
struct IdleTrace {
  double tau_s = 0.0;
  std::vector<TraceBlock> blocks;
  double added_delay_s = 0.0;  // T_X - tau
  double energy_j = 0.0;
  std::uint64_t switches = 0;

  double wake_time_s() const { return blocks.empty() ? 0.0 : blocks.back().end_s; }
};

// A policy's root block sequence with running totals, so an idle period is
// resolved by one binary search. Past the policy horizon the last level
// repeats.
class BlockSchedule {
 public:
  BlockSchedule(const Policy& policy, const ValidConfig& config);

  struct Outcome {
    double wake_time_s;
    double energy_j;
    std::array<double, 4> level_time_s;
    std::uint64_t switches;
    std::size_t blocks;
  };

  Outcome settle(double tau_s) const;
  IdleTrace trace(double tau_s) const;

 private:
  struct Step {
    Nanos end;
    double end_s;
    double energy_j;  // cumulative through this block
    std::array<double, 4> level_time_s;
    std::uint64_t switches;
  };

  std::size_t blocks_to_cover(double tau_s) const;

  std::vector<Step> steps_;
  std::vector<LevelId> levels_;
  LevelId last_level_;
  Nanos last_duration_;
  double last_power_w_;
};

IdleTrace simulate_idle_period(const Policy& policy, const ValidConfig& config,
                               RandomStream& stream);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Optional per-period cost: w.delay * delay / D + w.energy * energy / E +
// w.switching * switches.
struct CostProbe {
  CostWeights weights;
  CostNormalization normalization;
};

struct SimMetrics {
  std::uint64_t n_periods = 0;
  Estimate energy_reduction;  // 1 - sum energy / (P_idle * sum T_X)
  Estimate mean_delay_s;
  Estimate mean_wake_time_s;
  Estimate mean_energy_j;
  Estimate mean_switches;
  std::array<double, 4> level_shares{};  // time share, indexed by level_index()
  std::optional<Estimate> mean_cost;
};

struct ExperimentOptions {
  unsigned threads = 1;  // 0: hardware concurrency
  std::optional<CostProbe> probe;
};

// Replication i draws from RandomStream::substream(master_seed, i); partial
// sums are reduced in a fixed order, so results do not depend on `threads`.
SimMetrics run_experiment(const Policy& policy, const ValidConfig& config,
                          std::uint64_t n_periods, std::uint64_t master_seed,
                          const ExperimentOptions& options = {});

struct SweepSettings {
  SolverSettings solver;
  NormalizationMode normalization = NormalizationMode::max_stage_energy;
  unsigned threads = 1;
};

struct PolicySummary {
  std::string digest;  // FNV-1a of the block sequence
  std::size_t blocks = 0;
  std::size_t switches = 0;
  std::string runs;  // e.g. "SM2x5 SM3x65 SM2x2"
};

PolicySummary summarize(const Policy& policy);

struct SweepRow {
  CostWeights weights;
  std::string status;  // "ok" or the failure message
  std::optional<PolicySummary> policy;
  std::optional<SimMetrics> metrics;
};

// Solves and simulates every grid point with the same master seed. A failing
// point yields a row with a non-"ok" status.
std::vector<SweepRow> sweep(const ValidConfig& config,
                            std::span<const CostWeights> grid,
                            std::uint64_t n_periods, std::uint64_t master_seed,
                            const SweepSettings& settings = {});

}  // namespace asmsleep
