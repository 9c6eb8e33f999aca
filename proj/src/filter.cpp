#include "firefilter/filter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "firefilter/threading.hpp"

namespace firefilter {

namespace {

// Purpose tags for deterministic RNG substream derivation. Streams are keyed
// on (seed, epoch/cycle, index, tag), so results cannot depend on scheduling.
constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagPredict = 2;
constexpr std::uint64_t kTagResample = 3;
constexpr std::uint64_t kTagWalk = 4;
constexpr std::uint64_t kTagObsNoise = 5;

void check_weights(const std::vector<double>& weights, const char* op) {
    if (weights.empty()) throw ConfigError(std::string(op) + ": empty weight vector");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ConfigError(std::string(op) + ": weights must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ConfigError(std::string(op) + ": weights must sum to 1");
}

void check_observation_order(const std::vector<Observation>& observations, double t0) {
    for (std::size_t k = 0; k < observations.size(); ++k) {
        if (observations[k].time < t0)
            throw ConfigError("observation " + std::to_string(k) + " precedes the initial time");
        if (k > 0 && !(observations[k].time > observations[k - 1].time))
            throw ConfigError("observation times must be strictly increasing at index " +
                              std::to_string(k));
    }
}

std::vector<LevelSetField> collect_fields(const ParticleSet& ps) {
    std::vector<LevelSetField> fields;
    fields.reserve(ps.particles.size());
    for (const Particle& p : ps.particles) fields.push_back(p.phi);
    return fields;
}

std::vector<double> collect_weights(const ParticleSet& ps) {
    std::vector<double> w;
    w.reserve(ps.particles.size());
    for (const Particle& p : ps.particles) w.push_back(p.weight);
    return w;
}

}  // namespace

void validate_filter_config(const FilterConfig& config) {
    if (config.n_particles < 1) throw ConfigError("filter config: n_particles must be >= 1");
    if (config.n_members < 2) throw ConfigError("filter config: n_members must be >= 2");
    if (!(config.sigma_blur > 0.0)) throw ConfigError("filter config: sigma_blur must be > 0");
    if (!(config.q_beta >= 0.0) || !(config.q_gamma >= 0.0))
        throw ConfigError("filter config: q_beta and q_gamma must be >= 0");
    if (!(config.r_scale > 0.0)) throw ConfigError("filter config: r_scale must be > 0");
    if (config.downsample < 1) throw ConfigError("filter config: downsample must be >= 1");
    if (config.member_contours < 0)
        throw ConfigError("filter config: member_contours must be >= 0");
}

double likelihood_score(const RasterImage& truth, const RasterImage& predicted_blurred) {
    if (!(truth.grid == predicted_blurred.grid))
        throw ConfigError("likelihood_score: images live on different grids");
    double score = 0.0;
    for (std::size_t k = 0; k < truth.pixels.size(); ++k)
        score += truth.pixels[k] * predicted_blurred.pixels[k];
    return score;
}

double ess(const std::vector<double>& weights) {
    check_weights(weights, "ess");
    double sum_sq = 0.0;
    for (double w : weights) sum_sq += w * w;
    return 1.0 / sum_sq;
}

std::vector<int> systematic_copy_counts(const std::vector<double>& weights, int n, double u) {
    check_weights(weights, "systematic_copy_counts");
    if (n < 1) throw ConfigError("systematic_copy_counts: n must be >= 1");
    if (!(u >= 0.0) || !(u < 1.0))
        throw ConfigError("systematic_copy_counts: offset must lie in [0, 1)");
    const std::size_t m = weights.size();
    std::vector<int> counts(m, 0);
    std::size_t i = 0;
    double cum = weights[0];
    for (int k = 0; k < n; ++k) {
        const double point = (static_cast<double>(k) + u) / static_cast<double>(n);
        while (point >= cum && i + 1 < m) {
            ++i;
            cum += weights[i];
        }
        ++counts[i];
    }
    return counts;
}

ParticleSet resample_systematic(const ParticleSet& ps, RngStream& rng) {
    const std::size_t n = ps.particles.size();
    if (n == 0) throw ConfigError("resample_systematic: empty particle set");
    const std::vector<int> counts =
        systematic_copy_counts(collect_weights(ps), static_cast<int>(n), rng.uniform());

    ParticleSet out;
    out.time = ps.time;
    out.rng_seed = ps.rng_seed;
    out.epoch = ps.epoch;
    out.particles.reserve(n);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < counts[i]; ++c) {
            out.particles.push_back(ps.particles[i]);
            out.particles.back().weight = w;
        }
    }
    return out;
}

ParticleSet pf_init(const Grid& grid, const Ignition& ignition, const RosPrior& prior, int n,
                    const SolverConfig& solver_config, std::uint64_t seed) {
    if (n < 1) throw ConfigError("pf_init: n must be >= 1");
    validate_prior(prior);
    validate_solver_config(solver_config);

    const LevelSetField phi0 = ignition.signed_distance(grid);
    ParticleSet ps;
    ps.time = phi0.time;
    ps.rng_seed = seed;
    ps.epoch = 0;
    ps.particles.reserve(n);
    const double w = 1.0 / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        RngStream rng(derive_seed(seed, {0, static_cast<std::uint64_t>(i), kTagInit}));
        ps.particles.push_back({phi0, sample_prior(prior, rng), w});
    }
    return ps;
}

ParticleSet pf_predict(const ParticleSet& ps, double t_next, const WindSeries& wind_series,
                       const SolverConfig& solver_config, int threads, long* steps_out) {
    if (ps.particles.empty()) throw ConfigError("pf_predict: empty particle set");
    if (t_next < ps.time) throw ConfigError("pf_predict: t_next precedes the particle time");

    ParticleSet out = ps;
    out.time = t_next;
    out.epoch = ps.epoch + 1;
    std::vector<long> steps(ps.particles.size(), 0);
    parallel_for(ps.particles.size(), threads, [&](std::size_t i) {
        RngStream rng(derive_seed(ps.rng_seed, {ps.epoch, i, kTagPredict}));
        PropagateStats stats;
        try {
            out.particles[i].phi = propagate(ps.particles[i].phi, t_next, ps.particles[i].params,
                                             wind_series, solver_config, rng, &stats);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (particle " + std::to_string(i) + ")");
        }
        steps[i] = stats.steps;
    });
    if (steps_out) *steps_out = std::accumulate(steps.begin(), steps.end(), 0l);
    return out;
}

PfUpdateResult pf_update(const ParticleSet& ps, const Observation& obs, double sigma_blur,
                         bool resample_always, int threads) {
    const std::size_t n = ps.particles.size();
    if (n == 0) throw ConfigError("pf_update: empty particle set");
    if (!(sigma_blur > 0.0)) throw ConfigError("pf_update: sigma_blur must be > 0");
    if (std::abs(obs.time - ps.time) > 1e-6)
        throw ConfigError("pf_update: observation time does not match the particle time");

    const Grid& grid = ps.particles.front().phi.field.grid();
    const RasterImage truth = rasterize_contour(obs.front, grid);

    std::vector<double> scores(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        const FrontContour contour = extract_contour(ps.particles[i].phi);
        const RasterImage raster = rasterize_contour(contour, grid);
        const RasterImage blurred = gaussian_blur(raster, sigma_blur, true);
        scores[i] = likelihood_score(truth, blurred);
    });

    PfUpdateResult result;
    result.set = ps;
    result.set.epoch = ps.epoch + 1;

    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    if (!(total > 0.0)) {
        // Observation disjoint from every prediction: resetting to uniform
        // keeps the filter alive instead of collapsing it to zeros.
        for (Particle& p : result.set.particles) p.weight = 1.0 / static_cast<double>(n);
        result.degenerate = true;
        return result;
    }

    for (std::size_t i = 0; i < n; ++i) result.set.particles[i].weight = scores[i] / total;

    const bool trigger =
        resample_always || ess(collect_weights(result.set)) < static_cast<double>(n) / 2.0;
    if (trigger) {
        RngStream rng(derive_seed(ps.rng_seed, {ps.epoch, 0, kTagResample}));
        result.set = resample_systematic(result.set, rng);
        result.resampled = true;
    }
    return result;
}

FilterOutput pf_run(const Grid& grid, const Ignition& ignition, const RosPrior& prior,
                    const std::vector<Observation>& observations, const WindSeries& wind_series,
                    const FilterRunConfig& config, int threads) {
    validate_filter_config(config.filter);
    validate_solver_config(config.solver);
    validate_wind_series(wind_series);

    ParticleSet ps = pf_init(grid, ignition, prior, config.filter.n_particles, config.solver,
                             config.seed);
    check_observation_order(observations, ps.time);

    FilterOutput out;
    out.initial_front = extract_contour(ps.particles.front().phi);

    for (std::size_t k = 0; k < observations.size(); ++k) {
        const Observation& obs = observations[k];
        try {
            long steps = 0;
            ps = pf_predict(ps, obs.time, wind_series, config.solver, threads, &steps);
            out.total_steps += steps;

            CycleOutput cycle;
            cycle.time = obs.time;
            cycle.forecast_mean =
                extract_contour(mean_field(collect_fields(ps), collect_weights(ps)));

            PfUpdateResult updated = pf_update(ps, obs, config.filter.sigma_blur,
                                               config.filter.resample_always, threads);
            ps = std::move(updated.set);
            cycle.degenerate = updated.degenerate;
            cycle.resampled = updated.resampled;

            const std::vector<LevelSetField> fields = collect_fields(ps);
            const std::vector<double> weights = collect_weights(ps);
            cycle.analysis_mean = extract_contour(mean_field(fields, weights));
            cycle.variance = variance_field(fields, weights);
            cycle.weights = weights;
            for (const Particle& p : ps.particles) {
                cycle.params.push_back(p.params);
                cycle.members.push_back(extract_contour(p.phi));
            }
            out.cycles.push_back(std::move(cycle));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (observation " + std::to_string(k) + ")");
        }
    }
    return out;
}

std::vector<double> downsample_image(const RasterImage& image, int factor) {
    if (factor < 1) throw ConfigError("downsample_image: factor must be >= 1");
    const int nx = image.grid.nx(), ny = image.grid.ny();
    const int bnx = (nx + factor - 1) / factor;
    const int bny = (ny + factor - 1) / factor;
    std::vector<double> out(std::size_t(bnx) * bny, 0.0);
    for (int bj = 0; bj < bny; ++bj) {
        for (int bi = 0; bi < bnx; ++bi) {
            double sum = 0.0;
            int count = 0;
            for (int j = bj * factor; j < std::min((bj + 1) * factor, ny); ++j)
                for (int i = bi * factor; i < std::min((bi + 1) * factor, nx); ++i) {
                    sum += image(i, j);
                    ++count;
                }
            out[std::size_t(bj) * bnx + bi] = sum / count;
        }
    }
    return out;
}

std::vector<RosParams> enkf_update(const std::vector<RosParams>& members,
                                   const std::vector<std::vector<double>>& predictions,
                                   const std::vector<std::vector<double>>& perturbed,
                                   double r_scale) {
    const std::size_t m = members.size();
    if (m < 2) throw ConfigError("enkf_update: at least 2 members required");
    if (predictions.size() != m || perturbed.size() != m)
        throw ConfigError("enkf_update: member, prediction, and observation counts must match");
    if (!(r_scale > 0.0)) throw ConfigError("enkf_update: r_scale must be > 0");
    const std::size_t p = predictions.front().size();
    if (p == 0) throw ConfigError("enkf_update: empty observation vector");
    for (std::size_t i = 0; i < m; ++i)
        if (predictions[i].size() != p || perturbed[i].size() != p)
            throw ConfigError("enkf_update: observation vectors must share one length");

    Eigen::MatrixXd A(2, m);  // parameter ensemble, rows (beta, gamma)
    Eigen::MatrixXd Y(p, m);  // predicted-observation ensemble
    Eigen::MatrixXd D(p, m);  // innovations, perturbed truth minus prediction
    for (std::size_t i = 0; i < m; ++i) {
        A(0, i) = members[i].beta;
        A(1, i) = members[i].gamma;
        for (std::size_t r = 0; r < p; ++r) {
            Y(r, i) = predictions[i][r];
            D(r, i) = perturbed[i][r] - predictions[i][r];
        }
    }
    const Eigen::VectorXd a_mean = A.rowwise().mean();
    const Eigen::VectorXd y_mean = Y.rowwise().mean();
    const Eigen::MatrixXd X = A.colwise() - a_mean;
    Y = Y.colwise() - y_mean;

    // Zero parameter spread carries no information; the gain is exactly zero,
    // so return unchanged rather than solving a vacuous system.
    if (X.lpNorm<Eigen::Infinity>() == 0.0) return members;

    // K = X (Y^T Y + (m-1) r I)^-1 Y^T: the p x p innovation covariance is
    // never formed, only the m x m Gram matrix.
    const double md = static_cast<double>(m);
    Eigen::MatrixXd S = Y.transpose() * Y;
    S.diagonal().array() += (md - 1.0) * r_scale;
    const Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw NumericError("enkf_update: degenerate innovation covariance");
    const Eigen::MatrixXd delta = X * llt.solve(Y.transpose() * D);
    if (!delta.allFinite()) throw NumericError("enkf_update: non-finite Kalman gain");

    std::vector<RosParams> updated(m);
    for (std::size_t i = 0; i < m; ++i) {
        updated[i].beta = std::max(0.0, members[i].beta + delta(0, i));
        updated[i].gamma = members[i].gamma + delta(1, i);
    }
    return updated;
}

FilterOutput enkf_run(const Grid& grid, const Ignition& ignition, const RosPrior& prior,
                      const std::vector<Observation>& observations, const WindSeries& wind_series,
                      const FilterRunConfig& config, int threads) {
    validate_filter_config(config.filter);
    validate_solver_config(config.solver);
    validate_wind_series(wind_series);
    validate_prior(prior);

    const std::size_t m = static_cast<std::size_t>(config.filter.n_members);
    LevelSetField reference = ignition.signed_distance(grid);
    check_observation_order(observations, reference.time);

    std::vector<RosParams> members(m);
    for (std::size_t i = 0; i < m; ++i) {
        RngStream rng(derive_seed(config.seed, {0, i, kTagInit}));
        members[i] = sample_prior(prior, rng);
    }

    FilterOutput out;
    out.initial_front = extract_contour(reference);
    const double sd_beta = std::sqrt(config.filter.q_beta);
    const double sd_gamma = std::sqrt(config.filter.q_gamma);
    const double sd_obs = std::sqrt(config.filter.r_scale);

    for (std::size_t k = 0; k < observations.size(); ++k) {
        const Observation& obs = observations[k];
        const std::uint64_t cycle_key = k + 1;
        try {
            // (1) random-walk prediction of the parameter members.
            for (std::size_t i = 0; i < m; ++i) {
                RngStream rng(derive_seed(config.seed, {cycle_key, i, kTagWalk}));
                members[i].beta = std::max(0.0, members[i].beta + rng.normal(0.0, sd_beta));
                members[i].gamma += rng.normal(0.0, sd_gamma);
            }

            // (2) measurement function: propagate a copy of the reference per
            // member and flatten its blurred front image.
            auto predict_members = [&](const std::vector<RosParams>& params,
                                       std::vector<LevelSetField>& fields,
                                       std::vector<std::vector<double>>& images, long& steps) {
                fields.assign(m, LevelSetField{});
                images.assign(m, {});
                std::vector<long> per_member(m, 0);
                parallel_for(m, threads, [&](std::size_t i) {
                    RngStream rng(derive_seed(config.seed, {cycle_key, i, kTagPredict}));
                    PropagateStats stats;
                    fields[i] = propagate(reference, obs.time, params[i], wind_series,
                                          config.solver, rng, &stats);
                    per_member[i] = stats.steps;
                    const RasterImage raster = rasterize_contour(extract_contour(fields[i]), grid);
                    const RasterImage blurred =
                        gaussian_blur(raster, config.filter.sigma_blur, true);
                    images[i] = downsample_image(blurred, config.filter.downsample);
                });
                steps += std::accumulate(per_member.begin(), per_member.end(), 0l);
            };

            std::vector<LevelSetField> forecast_fields;
            std::vector<std::vector<double>> predicted;
            predict_members(members, forecast_fields, predicted, out.total_steps);

            CycleOutput cycle;
            cycle.time = obs.time;
            const std::vector<double> uniform(m, 1.0 / static_cast<double>(m));
            cycle.forecast_mean = extract_contour(mean_field(forecast_fields, uniform));

            // (3) stochastic update against per-member perturbed copies of the
            // rasterized (unblurred) truth.
            const std::vector<double> truth_vec =
                downsample_image(rasterize_contour(obs.front, grid), config.filter.downsample);
            std::vector<std::vector<double>> perturbed(m, truth_vec);
            for (std::size_t i = 0; i < m; ++i) {
                RngStream rng(derive_seed(config.seed, {cycle_key, i, kTagObsNoise}));
                for (double& v : perturbed[i]) v += rng.normal(0.0, sd_obs);
            }
            try {
                members = enkf_update(members, predicted, perturbed, config.filter.r_scale);
            } catch (const NumericError&) {
                cycle.skipped = true;
            }

            // Member contours re-propagated at the updated parameters (same
            // noise substreams, so a skipped update reuses the forecast).
            std::vector<LevelSetField> analysis_fields;
            std::vector<std::vector<double>> unused;
            if (cycle.skipped) {
                analysis_fields = std::move(forecast_fields);
            } else {
                predict_members(members, analysis_fields, unused, out.total_steps);
            }
            for (const LevelSetField& f : analysis_fields)
                cycle.members.push_back(extract_contour(f));
            cycle.variance = variance_field(analysis_fields, uniform);
            cycle.params = members;

            // (4) advance the reference with the post-update ensemble mean.
            RosParams mean_params{0.0, 0.0};
            for (const RosParams& p : members) {
                mean_params.beta += p.beta;
                mean_params.gamma += p.gamma;
            }
            mean_params.beta /= static_cast<double>(m);
            mean_params.gamma /= static_cast<double>(m);
            RngStream ref_rng(derive_seed(config.seed, {cycle_key, m, kTagPredict}));
            PropagateStats stats;
            reference = propagate(reference, obs.time, mean_params, wind_series, config.solver,
                                  ref_rng, &stats);
            out.total_steps += stats.steps;
            cycle.analysis_mean = extract_contour(reference);

            out.cycles.push_back(std::move(cycle));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (observation " + std::to_string(k) + ")");
        }
    }
    return out;
}

}  // namespace firefilter
