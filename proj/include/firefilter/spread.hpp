#pragma once

#include <vector>

#include "firefilter/errors.hpp"
#include "firefilter/grid.hpp"
#include "firefilter/rng.hpp"

namespace firefilter {

/// Rate-of-spread parameters: s = beta + gamma * omega, with omega the wind
/// component along the front's outward normal.
struct RosParams {
    double beta = 0.0;   // m/s, no-wind baseline front speed
    double gamma = 0.0;  // dimensionless wind-coupling gain
};

/// Wind vector sample (direction the wind blows toward, world axes).
struct WindSample {
    double time = 0.0;  // s
    double wx = 0.0;    // m/s
    double wy = 0.0;    // m/s
};

/// Time-ordered wind record; times strictly increasing, non-empty.
struct WindSeries {
    std::vector<WindSample> samples;
};

void validate_wind_series(const WindSeries& series);

/// Zero-order hold: value of the latest sample with time <= t; before the
/// first sample, the first sample's value.
Vec2 wind_at(const WindSeries& series, double t);

/// Front-normal spread speed beta + gamma * max(0, wind . normal). The clamp
/// keeps the upwind flank from retreating; pass clamp_upwind=false for the
/// unclamped law. `normal` must be unit length within 1e-6.
double normal_speed(const RosParams& params, Vec2 wind, Vec2 normal, bool clamp_upwind = true);

/// Independent Gaussian priors on beta and gamma.
struct RosPrior {
    double mu_beta = 0.0;
    double sigma_beta = 0.0;
    double mu_gamma = 0.0;
    double sigma_gamma = 0.0;
};

void validate_prior(const RosPrior& prior);

/// Independent Gaussian draws; beta truncated at zero by max(0, .).
RosParams sample_prior(const RosPrior& prior, RngStream& rng);

}  // namespace firefilter
