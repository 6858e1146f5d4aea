#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "deepc/dataset.hpp"

namespace deepc {

/// Excitation input design: a sum of sinusoids plus a multi-level
/// pseudo-random sequence, clamped to bounds.
///
/// The pseudo-random level choice is steered so the running integral of the
/// signal stays inside walk_band around a linear ramp of total area
/// drift_total (both in (A/m^2) * samples). Steering keeps the plant's state
/// of charge wandering over its range instead of drifting into saturation
/// during a long record; it is a deterministic function of the seed alone.
struct ExcitationConfig {
  long length = 1920;
  double i_min = -60.0;
  double i_max = 60.0;
  double rate_limit = 0.0;  // max |u(k+1)-u(k)|; <= 0 disables rate limiting
  double center = 0.0;
  std::vector<double> sine_amplitudes{8.0, 8.0, 8.0};
  std::vector<double> sine_periods{40.0, 130.0, 400.0};  // samples
  std::vector<double> prbs_levels{-60.0, -30.0, 0.0, 30.0, 60.0};
  long prbs_dwell = 8;
  double drift_total = 5940.0;
  double walk_band = 1080.0;  // <= 0 disables steering
  std::uint64_t seed = 1;
};

namespace detail {
// Uniform draws derived from the raw engine output; std::uniform_*
// distributions are not bit-identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline std::size_t pick_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}
}  // namespace detail

inline Vec design_excitation(const ExcitationConfig& cfg) {
  if (cfg.length < 1) throw std::invalid_argument("design_excitation: length must be >= 1");
  if (!(cfg.i_min < cfg.i_max))
    throw std::invalid_argument("design_excitation: infeasible bounds, i_min >= i_max");
  if (cfg.sine_amplitudes.size() != cfg.sine_periods.size())
    throw std::invalid_argument("design_excitation: one period per sine amplitude required");
  if (!cfg.prbs_levels.empty() && cfg.prbs_dwell < 1)
    throw std::invalid_argument("design_excitation: prbs_dwell must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::vector<double> phases(cfg.sine_amplitudes.size());
  for (auto& p : phases) p = 2.0 * M_PI * detail::unit_uniform(rng);

  const double slope = cfg.drift_total / static_cast<double>(cfg.length);
  std::vector<double> pull_down, pull_up;
  for (double l : cfg.prbs_levels) {
    if (l <= 0.0) pull_down.push_back(l);
    if (l >= 0.0) pull_up.push_back(l);
  }

  Vec u(cfg.length);
  double cum = 0.0;
  double level = 0.0;
  for (long k = 0; k < cfg.length; ++k) {
    if (!cfg.prbs_levels.empty() && k % cfg.prbs_dwell == 0) {
      const double dev = cum - slope * static_cast<double>(k);
      const std::vector<double>* pool = &cfg.prbs_levels;
      if (cfg.walk_band > 0.0) {
        if (dev > cfg.walk_band && !pull_down.empty()) pool = &pull_down;
        if (dev < -cfg.walk_band && !pull_up.empty()) pool = &pull_up;
      }
      level = (*pool)[detail::pick_index(rng, pool->size())];
    }
    double v = cfg.center + level;
    for (std::size_t s = 0; s < phases.size(); ++s)
      v += cfg.sine_amplitudes[s] *
           std::sin(2.0 * M_PI * static_cast<double>(k) / cfg.sine_periods[s] + phases[s]);
    v = std::clamp(v, cfg.i_min, cfg.i_max);
    u(k) = v;
    cum += v;
  }

  if (cfg.rate_limit > 0.0) {
    for (long k = 1; k < cfg.length; ++k)
      u(k) = std::clamp(u(k), u(k - 1) - cfg.rate_limit, u(k - 1) + cfg.rate_limit);
  }
  return u;
}

}  // namespace deepc
