#pragma once

// Independent reference computations for the test suites. Nothing here goes
// through StateSpace, value_iteration or the simulator.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "asmsleep/asm_model.hpp"
#include "asmsleep/hyperexp.hpp"
#include "asmsleep/mdp.hpp"

namespace oracle {

using big = boost::multiprecision::cpp_bin_float_50;

inline big pdf(const std::vector<double>& rates,
               const std::vector<double>& weights, const big& t) {
  big sum = 0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    sum += big(weights[i]) * big(rates[i]) * exp(-big(rates[i]) * t);
  }
  return sum;
}

inline big tail(const std::vector<double>& rates,
                const std::vector<double>& weights, const big& t) {
  big sum = 0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    sum += big(weights[i]) * exp(-big(rates[i]) * t);
  }
  return sum;
}

inline std::vector<big> residual(const std::vector<double>& rates,
                                 const std::vector<double>& weights,
                                 const big& t) {
  std::vector<big> g(rates.size());
  big total = 0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    g[i] = big(weights[i]) * exp(-big(rates[i]) * t);
    total += g[i];
  }
  for (auto& x : g) x /= total;
  return g;
}

// int_0^b (b - t) f(t) dt by adaptive Gauss-Kronrod.
inline double overshoot_by_quadrature(const std::vector<double>& rates,
                                      std::span<const double> weights,
                                      double b) {
  auto integrand = [&](double t) {
    double f = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      f += weights[i] * rates[i] * std::exp(-rates[i] * t);
    }
    return (b - t) * f;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, b, 15, 1e-14);
}

// Optimal cost-to-go by memoized recursion straight from the model: the
// residual law at elapsed t is rebuilt from q0, and every quantity comes from
// the hyperexp kernel. States with tail(q0, t) < delta have value 0.
class BackwardInduction {
 public:
  BackwardInduction(const asmsleep::ValidConfig& config,
                    const asmsleep::CostWeights& w,
                    const asmsleep::CostNormalization& norm, bool track_prev)
      : config_(config), w_(w), norm_(norm), track_prev_(track_prev) {}

  double value(asmsleep::Nanos elapsed,
               std::optional<asmsleep::LevelId> prev) {
    using namespace asmsleep;
    if (!track_prev_) prev.reset();
    const auto key = std::make_pair(elapsed.count(), prev ? int(*prev) : 0);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const HyperExp& dist = config_.off_time();
    const double t = to_seconds(elapsed);
    double best = std::numeric_limits<double>::infinity();
    if (tail(dist, t) >= config_.limits().tail_threshold) {
      const ResidualWeights g = asmsleep::residual(dist, dist.initial(), t);
      // Deepest first so the recursion depth stays small.
      for (auto it = config_.levels().rbegin(); it != config_.levels().rend(); ++it) {
        const double b = to_seconds(off_duration(*it));
        const double cost =
            w_.delay * expected_overshoot(dist, g, b) / norm_.delay_s +
            w_.energy * it->power() * b / norm_.energy_j +
            ((prev && *prev != it->id) ? w_.switching : 0.0);
        best = std::min(best, cost + tail_from(dist, g, b) *
                                         value(elapsed + off_duration(*it), it->id));
      }
    } else {
      best = 0.0;
    }
    memo_.emplace(key, best);
    return best;
  }

 private:
  const asmsleep::ValidConfig& config_;
  asmsleep::CostWeights w_;
  asmsleep::CostNormalization norm_;
  bool track_prev_;
  std::map<std::pair<std::int64_t, int>, double> memo_;
};

// sum_k sum_i q_i exp(-rate_i k b) b for a block length b repeated forever.
inline double repeated_block_wake_time(const std::vector<double>& rates,
                                       const std::vector<double>& weights,
                                       double b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    sum += weights[i] * b / (1.0 - std::exp(-rates[i] * b));
  }
  return sum;
}

}  // namespace oracle

namespace oracle {

// Boundary states for the deep-sleep regression: before one deepest block
// can complete, or where a deepest block would run past the truncation
// horizon.
inline bool is_boundary_state(const asmsleep::ValidConfig& config,
                              asmsleep::Nanos elapsed) {
  using namespace asmsleep;
  const Nanos b_max = config.max_level_duration();
  return elapsed < b_max ||
         tail(config.off_time(), to_seconds(elapsed + b_max)) <
             config.limits().tail_threshold;
}

}  // namespace oracle

namespace oracle {

// Integral of the density over [0, upper] by adaptive Gauss-Kronrod on
// doubling panels from the fastest time scale, so a sharp spike at zero is
// resolved.
inline double pdf_mass(const asmsleep::HyperExp& d, double upper) {
  const double fastest = *std::max_element(d.rates().begin(), d.rates().end());
  auto f = [&](double t) { return asmsleep::pdf(d, t); };
  double total = 0.0, a = 0.0, b = std::min(upper, 0.25 / fastest);
  while (a < upper) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-10);
    a = b;
    b = std::min(upper, 2.0 * b);
  }
  return total;
}

}  // namespace oracle
