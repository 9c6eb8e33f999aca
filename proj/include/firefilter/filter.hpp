#pragma once

#include <cstdint>
#include <vector>

#include "firefilter/contour.hpp"
#include "firefilter/level_set.hpp"
#include "firefilter/metrics.hpp"
#include "firefilter/solver.hpp"
#include "firefilter/spread.hpp"

namespace firefilter {

/// One particle: a full level-set field plus its own spread parameters.
struct Particle {
    LevelSetField phi;
    RosParams params;
    double weight = 0.0;
};

/// Particle population. All particle grids are identical and all particle
/// times are equal. `epoch` counts predict/update events and keys the
/// deterministic RNG substreams, so copies and resamples stay reproducible.
struct ParticleSet {
    std::vector<Particle> particles;
    double time = 0.0;
    std::uint64_t rng_seed = 0;
    std::uint64_t epoch = 0;
};

/// A mapped fire-front observation.
struct Observation {
    double time = 0.0;
    FrontContour front;
};

/// Filter tunables shared by the particle filter and the EnKF.
struct FilterConfig {
    int n_particles = 100;
    int n_members = 10;
    double sigma_blur = 2.0;      // likelihood blur, cells
    bool resample_always = true;  // resample at every update; else on ESS < n/2
    double q_beta = 1e-4;         // EnKF random-walk variance for beta, (m/s)^2
    double q_gamma = 4e-4;        // EnKF random-walk variance for gamma
    double r_scale = 0.01;        // observation-noise variance per pixel
    int downsample = 4;           // block-mean factor for the EnKF image vector
    int member_contours = 20;     // member contours written by the CLI
};

void validate_filter_config(const FilterConfig& config);

/// Image-overlap likelihood: sum_ij A_ij * B_ij of a binary truth image A
/// against a blurred prediction B on the same grid.
double likelihood_score(const RasterImage& truth, const RasterImage& predicted_blurred);

/// Effective sample size 1 / sum(w_i^2) of normalized weights.
double ess(const std::vector<double>& weights);

/// Copy counts of systematic resampling into n slots at offset u in [0, 1):
/// sample points (k + u) / n against the cumulative weights. Counts land in
/// [floor(n*w_i), ceil(n*w_i)].
std::vector<int> systematic_copy_counts(const std::vector<double>& weights, int n, double u);

/// Systematic resampling with a single uniform offset; weights reset to 1/n.
ParticleSet resample_systematic(const ParticleSet& ps, RngStream& rng);

/// Initial population: every particle carries the same ignition
/// signed-distance field, an independent prior draw, and weight 1/n.
ParticleSet pf_init(const Grid& grid, const Ignition& ignition, const RosPrior& prior, int n,
                    const SolverConfig& solver_config, std::uint64_t seed);

/// Propagates every particle to t_next with its own parameters and noise
/// substream; weights unchanged. Domain-guard failures are reported with the
/// offending particle index. `steps_out`, when given, receives the summed
/// solver step count across particles.
ParticleSet pf_predict(const ParticleSet& ps, double t_next, const WindSeries& wind_series,
                       const SolverConfig& solver_config, int threads = 1,
                       long* steps_out = nullptr);

struct PfUpdateResult {
    ParticleSet set;
    bool degenerate = false;  // all likelihoods were zero; weights reset to uniform
    bool resampled = false;
};

/// Weighting + sequential importance resampling against one observation.
/// Each particle is scored by extract -> rasterize -> blur(sigma_blur) vs the
/// rasterized (unblurred) observation. Resampling runs whenever
/// resample_always is set, otherwise when ESS < n/2. If every score is zero
/// the weights reset to uniform, nothing is resampled, and the degenerate
/// flag is raised.
PfUpdateResult pf_update(const ParticleSet& ps, const Observation& obs, double sigma_blur,
                         bool resample_always = true, int threads = 1);

/// Per-assimilation-cycle record shared by both filters.
struct CycleOutput {
    double time = 0.0;
    FrontContour forecast_mean;             // pre-update mean-field contour
    FrontContour analysis_mean;             // post-update mean-field contour
    std::vector<FrontContour> members;      // post-update member contours
    ScalarField variance;                   // cellwise phi variance, post-update
    std::vector<RosParams> params;          // per particle/member, post-update
    std::vector<double> weights;            // PF only
    bool degenerate = false;                // PF: zero-likelihood fallback taken
    bool skipped = false;                   // EnKF: update skipped (degenerate gain)
    bool resampled = false;
};

struct FilterOutput {
    FrontContour initial_front;
    std::vector<CycleOutput> cycles;
    long total_steps = 0;
};

struct FilterRunConfig {
    SolverConfig solver;
    FilterConfig filter;
    std::uint64_t seed = 0;
};

/// Full particle-filter loop: alternate pf_predict to each observation time
/// and pf_update, recording mean/member contours, the variance field, and
/// per-particle parameters at every observation.
FilterOutput pf_run(const Grid& grid, const Ignition& ignition, const RosPrior& prior,
                    const std::vector<Observation>& observations, const WindSeries& wind_series,
                    const FilterRunConfig& config, int threads = 1);

/// Stochastic (perturbed-observation) EnKF update of the parameter members.
/// `predictions` holds one flattened predicted image per column; `perturbed`
/// holds the per-member noisy truth vectors. The Kalman gain uses the
/// low-rank ensemble form X (Y^T Y + (m-1) r I)^-1 Y^T. Throws NumericError
/// if the update is degenerate (non-finite gain).
std::vector<RosParams> enkf_update(const std::vector<RosParams>& members,
                                   const std::vector<std::vector<double>>& predictions,
                                   const std::vector<std::vector<double>>& perturbed,
                                   double r_scale);

/// EnKF over (beta, gamma) with the level-set propagation as measurement
/// function. Keeps one reference field; per cycle the members random-walk,
/// each member re-propagates a copy of the reference over the window to
/// produce its predicted image, the stochastic update adjusts the members,
/// and the reference advances with the post-update ensemble-mean parameters.
/// Degenerate updates are skipped and flagged, never fatal.
FilterOutput enkf_run(const Grid& grid, const Ignition& ignition, const RosPrior& prior,
                      const std::vector<Observation>& observations, const WindSeries& wind_series,
                      const FilterRunConfig& config, int threads = 1);

/// Block-mean downsampling of an image by integer factor d (partial edge
/// blocks average over their actual cell count). Returns the flattened vector.
std::vector<double> downsample_image(const RasterImage& image, int factor);

}  // namespace firefilter
