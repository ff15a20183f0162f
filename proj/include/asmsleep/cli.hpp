#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmsleep/mdp.hpp"

namespace asmsleep::cli {

enum class ExitCode : int {
  ok = 0,
  usage = 1,
  config = 2,
  solver = 3,
  io = 4,
  digest_mismatch = 5,
};

struct RunConfig {
  std::string command;  // solve | simulate | sweep | validate
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::filesystem::path policy;  // simulate; defaults to <out>/policy.json
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> periods;
  std::optional<double> eps1, eps2, eps3;
  std::optional<std::string> grid;
  std::optional<unsigned> threads;
  std::size_t trace_dump = 0;  // simulate: dump this many traces as JSONL
};

// Fills in whichever of eps1/eps2/eps3 is missing so they sum to 1
// (eps3 defaults to 0 when only one weight is given). Throws
// std::invalid_argument when underdetermined or out of range.
CostWeights resolve_weights(std::optional<double> eps1,
                            std::optional<double> eps2,
                            std::optional<double> eps3);

// Grid spec: ';'-separated axes "name=values" with name in {eps1, eps2,
// eps3} and values either "a,b,c" or "start:stop:step" (inclusive). Missing
// weights are derived per point as in resolve_weights; the result is the
// cartesian product in axis order. Points whose derived weight is invalid
// are kept, so the sweep reports them as failed rows.
std::vector<CostWeights> parse_grid(std::string_view spec);

ExitCode run(const RunConfig& rc, std::ostream& out, std::ostream& err);

}  // namespace asmsleep::cli
