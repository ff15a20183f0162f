#include "asmsleep/hyperexp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "asmsleep/errors.hpp"

namespace asmsleep {

namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kClampBelow = 1e-300;

void require_time(double t, const char* what) {
  if (!(t >= 0.0)) {
    throw DomainError(std::string(what) + " must be >= 0, got " +
                      std::to_string(t));
  }
}

void require_paired(const HyperExp& base, const ResidualWeights& current) {
  if (current.size() != base.phases()) {
    throw std::invalid_argument("residual weights have " +
                                std::to_string(current.size()) +
                                " phases, distribution has " +
                                std::to_string(base.phases()));
  }
}

// x - (1 - exp(-x)), accurate for small x where the direct form cancels.
double overshoot_kernel(double x) {
  if (x < 1e-2) {
    const double x2 = x * x;
    return x2 * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x * (1.0 / 120.0 -
                                                               x / 720.0))));
  }
  return x + std::expm1(-x);
}

}  // namespace

ResidualWeights normalize_weights(std::vector<double> raw) {
  double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw std::logic_error("residual update produced an all-zero weight vector");
  }
  bool clamped = false;
  for (double& w : raw) {
    w /= sum;
    if (w < kClampBelow) {
      clamped = clamped || w != 0.0;
      w = 0.0;
    }
  }
  if (clamped) {
    sum = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (double& w : raw) w /= sum;
  }
  return ResidualWeights(ResidualWeights::Unchecked{}, std::move(raw));
}

ResidualWeights::ResidualWeights(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw std::invalid_argument("residual weights must be non-empty");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("residual weight < 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("residual weights sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

HyperExp::HyperExp(std::vector<double> rates, std::vector<double> weights)
    : rates_(std::move(rates)), weights_(std::move(weights)) {
  if (rates_.empty()) {
    throw std::invalid_argument("hyper-exponential needs at least one phase");
  }
  if (rates_.size() != weights_.size()) {
    throw std::invalid_argument("rates and weights differ in length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!(rates_[i] > 0.0) || !std::isfinite(rates_[i])) {
      throw std::invalid_argument("rate " + std::to_string(i) +
                                  " must be positive and finite");
    }
    if (!(weights_[i] >= 0.0)) {
      throw std::invalid_argument("weight " + std::to_string(i) +
                                  " must be >= 0");
    }
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("weights sum to " + std::to_string(sum) +
                                ", expected 1");
  }
}

double pdf(const HyperExp& dist, double t) {
  require_time(t, "t");
  double density = 0.0;
  for (std::size_t i = 0; i < dist.phases(); ++i) {
    density += dist.weights()[i] * dist.rates()[i] *
               std::exp(-dist.rates()[i] * t);
  }
  return density;
}

double tail(const HyperExp& dist, double t) {
  return tail_from(dist, dist.initial(), t);
}

double tail_from(const HyperExp& base, const ResidualWeights& current,
                 double t) {
  require_time(t, "t");
  require_paired(base, current);
  double survival = 0.0;
  for (std::size_t i = 0; i < base.phases(); ++i) {
    survival += current[i] * std::exp(-base.rates()[i] * t);
  }
  return survival;
}

double mean(const HyperExp& dist) {
  double m = 0.0;
  for (std::size_t i = 0; i < dist.phases(); ++i) {
    m += dist.weights()[i] / dist.rates()[i];
  }
  return m;
}

ResidualWeights residual(const HyperExp& base, const ResidualWeights& current,
                         double dt) {
  require_time(dt, "dt");
  require_paired(base, current);
  if (dt == 0.0) return current;

  // Shift by the slowest live phase so the largest factor is exactly 1.
  double slowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < base.phases(); ++i) {
    if (current[i] > 0.0) slowest = std::min(slowest, base.rates()[i]);
  }
  std::vector<double> raw(base.phases());
  for (std::size_t i = 0; i < base.phases(); ++i) {
    raw[i] = current[i] == 0.0
                 ? 0.0
                 : current[i] * std::exp(-(base.rates()[i] - slowest) * dt);
  }
  return normalize_weights(std::move(raw));
}

double expected_overshoot(const HyperExp& base,
                          const ResidualWeights& current, double b) {
  require_time(b, "b");
  require_paired(base, current);
  double overshoot = 0.0;
  for (std::size_t i = 0; i < base.phases(); ++i) {
    const double rate = base.rates()[i];
    overshoot += current[i] * overshoot_kernel(rate * b) / rate;
  }
  return std::clamp(overshoot, 0.0, b);
}

double sample(const HyperExp& dist, RandomStream& stream) {
  const double u_phase = stream.uniform();
  std::size_t phase = dist.phases() - 1;
  while (phase > 0 && dist.weights()[phase] == 0.0) --phase;
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < dist.phases(); ++i) {
    cumulative += dist.weights()[i];
    if (u_phase < cumulative) {
      phase = i;
      break;
    }
  }
  const double u = stream.uniform();
  return -std::log(u) / dist.rates()[phase];
}

}  // namespace asmsleep
