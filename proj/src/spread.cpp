#include "firefilter/spread.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace firefilter {

void validate_wind_series(const WindSeries& series) {
    if (series.samples.empty()) throw ConfigError("wind series: no samples");
    for (std::size_t k = 0; k < series.samples.size(); ++k) {
        const WindSample& s = series.samples[k];
        if (!std::isfinite(s.time) || !std::isfinite(s.wx) || !std::isfinite(s.wy))
            throw ConfigError("wind series: non-finite sample at row " + std::to_string(k));
        if (k > 0 && !(s.time > series.samples[k - 1].time))
            throw ConfigError("wind series: times must be strictly increasing at row " +
                              std::to_string(k));
    }
}

Vec2 wind_at(const WindSeries& series, double t) {
    validate_wind_series(series);
    const auto& v = series.samples;
    if (t <= v.front().time) return {v.front().wx, v.front().wy};
    // Last sample with time <= t.
    auto it = std::upper_bound(v.begin(), v.end(), t,
                               [](double value, const WindSample& s) { return value < s.time; });
    --it;
    return {it->wx, it->wy};
}

double normal_speed(const RosParams& params, Vec2 wind, Vec2 normal, bool clamp_upwind) {
    const double len2 = normal[0] * normal[0] + normal[1] * normal[1];
    if (std::abs(len2 - 1.0) > 2e-6)
        throw ConfigError("normal_speed: normal must be unit length");
    double omega = wind[0] * normal[0] + wind[1] * normal[1];
    if (clamp_upwind) omega = std::max(0.0, omega);
    return params.beta + params.gamma * omega;
}

void validate_prior(const RosPrior& prior) {
    if (!std::isfinite(prior.mu_beta) || !std::isfinite(prior.mu_gamma) ||
        !std::isfinite(prior.sigma_beta) || !std::isfinite(prior.sigma_gamma))
        throw ConfigError("prior: parameters must be finite");
    if (prior.sigma_beta < 0.0 || prior.sigma_gamma < 0.0)
        throw ConfigError("prior: standard deviations must be >= 0");
}

RosParams sample_prior(const RosPrior& prior, RngStream& rng) {
    validate_prior(prior);
    RosParams p;
    p.beta = std::max(0.0, rng.normal(prior.mu_beta, prior.sigma_beta));
    p.gamma = rng.normal(prior.mu_gamma, prior.sigma_gamma);
    return p;
}

}  // namespace firefilter
