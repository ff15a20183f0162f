#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>

#include "asmsleep/mdp.hpp"
#include "asmsleep/simulator.hpp"

namespace asmsleep {

inline constexpr const char* kPolicyFormat = "asmsleep-policy/1";
inline constexpr const char* kResultsFormat = "asmsleep-results/1";

// Solved policy as exported by `solve` and consumed by `simulate`.
struct PolicyDocument {
  std::string state_space_digest;
  CostWeights weights;
  NormalizationMode normalization_mode = NormalizationMode::max_stage_energy;
  CostNormalization normalization{1.0, 1.0};
  Policy policy;
};

// JSON object: format, state_space_digest, weights, normalization, states
// [{elapsed_ns, prev_level, chosen_level, value}], block_sequence
// [{start_ns, level}].
void write_policy_json(std::ostream& out, const PolicyDocument& doc);
// Throws IoError on malformed documents.
PolicyDocument read_policy_json(std::istream& in);

// start_s,level -- one row per block of the root sequence.
void write_timeline_csv(std::ostream& out, const Policy& policy);

// Fixed header, one row per sweep point. The first line is a
// "# format: asmsleep-results/1" marker.
void write_results_csv(std::ostream& out, std::span<const SweepRow> rows);

// One JSON object per line.
void write_trace_jsonl(std::ostream& out, const IdleTrace& trace);

}  // namespace asmsleep
