#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asmsleep/rng.hpp"

namespace asmsleep {

// Mixing weights of a hyper-exponential over a fixed rate vector. Produced by
// HyperExp::initial() and residual(); always non-negative and summing to 1.
class ResidualWeights {
 public:
  // Throws std::invalid_argument unless all entries are >= 0 and the sum is
  // 1 within 1e-12.
  explicit ResidualWeights(std::vector<double> weights);

  std::span<const double> values() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

  friend bool operator==(const ResidualWeights&,
                         const ResidualWeights&) = default;

 private:
  struct Unchecked {};
  ResidualWeights(Unchecked, std::vector<double> weights)
      : weights_(std::move(weights)) {}

  friend ResidualWeights normalize_weights(std::vector<double> raw);

  std::vector<double> weights_;
};

// Off-time distribution f(t) = sum_i q_i * rate_i * exp(-rate_i * t).
class HyperExp {
 public:
  // Throws std::invalid_argument on empty/mismatched vectors, non-positive
  // rates, negative weights or weights not summing to 1 (abs tol 1e-12).
  HyperExp(std::vector<double> rates, std::vector<double> weights);

  std::span<const double> rates() const noexcept { return rates_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t phases() const noexcept { return rates_.size(); }

  ResidualWeights initial() const { return ResidualWeights(weights_); }

 private:
  std::vector<double> rates_;
  std::vector<double> weights_;
};

double pdf(const HyperExp& dist, double t);
double tail(const HyperExp& dist, double t);
double mean(const HyperExp& dist);

// Tail of the hyper-exponential with the dist's rates and arbitrary weights.
double tail_from(const HyperExp& base, const ResidualWeights& current,
                 double t);

// Weights of the conditional residual off-time after a further `dt` seconds
// without an arrival.
ResidualWeights residual(const HyperExp& base, const ResidualWeights& current,
                         double dt);

// E[(b - tau) 1{tau <= b}] for tau ~ (base rates, current weights).
double expected_overshoot(const HyperExp& base,
                          const ResidualWeights& current, double b);

// Phase i with probability q_i, then an inverse-CDF exponential draw.
double sample(const HyperExp& dist, RandomStream& stream);

}  // namespace asmsleep
