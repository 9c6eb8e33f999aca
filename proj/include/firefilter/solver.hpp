#pragma once

#include "firefilter/contour.hpp"
#include "firefilter/grid.hpp"
#include "firefilter/level_set.hpp"
#include "firefilter/rng.hpp"
#include "firefilter/spread.hpp"

namespace firefilter {

enum class Boundary { extrapolate };

struct SolverConfig {
    double cfl = 0.5;             // in (0, 1]
    int eno_order = 2;            // 1 or 2
    int reinit_every = 10;        // steps between reinitializations, 0 = never
    int reinit_iterations = 20;   // pseudo-time iterations per reinitialization
    double noise_sigma = 0.0;     // per-step phi perturbation scale, meters
    Boundary boundary = Boundary::extrapolate;
    bool clamp_upwind = true;     // clamp negative normal wind component to 0
};

void validate_solver_config(const SolverConfig& config);

/// Godunov upwind gradient magnitude for an expanding front:
/// sqrt(max(D-x,0)^2 + min(D+x,0)^2 + max(D-y,0)^2 + min(D+y,0)^2)
/// with one-sided differences of the requested ENO order. Boundary cells use
/// one-sided interior differences via linear extrapolation ghosts.
ScalarField grad_mag_upwind(const LevelSetField& phi, int order);

/// Sign-aware Godunov gradient magnitude (the reinitialization form): picks
/// the one-sided differences that point away from the front on each side.
/// This is the operator that equals 1 on an exact signed-distance field,
/// including at interior ridge cells where the central gradient vanishes.
ScalarField grad_mag_reinit(const LevelSetField& phi);

/// CFL-stable step size: cfl * min(dx, dy) / u_max with
/// u_max = beta + gamma * max(0, |wind|). Never exceeds `remaining`; a static
/// front (u_max = 0) returns the full remaining budget.
double stable_dt(const LevelSetField& phi, const RosParams& params, Vec2 wind,
                 const SolverConfig& config, double remaining);

/// One forward-Euler update phi' = phi - dt * u * |grad phi|_upwind. The
/// speed u per cell uses the local central-difference normal (cells with
/// vanishing central gradient use u = beta). If noise_sigma > 0, adds an
/// i.i.d. Gaussian field smoothed by a one-cell Gaussian so the perturbation
/// moves the front coherently rather than pixelwise. Advances time by dt.
/// A dt above the CFL bound is a hard error, never a silent clamp.
LevelSetField step(const LevelSetField& phi, double dt, const RosParams& params, Vec2 wind,
                   const SolverConfig& config, RngStream& rng);

struct PropagateStats {
    long steps = 0;
    long reinits = 0;
};

/// Integrates phi to t_end, splitting steps at wind-sample boundaries so each
/// step sees constant wind, reinitializing every `reinit_every` steps, and
/// erroring out ("domain too small") if the front comes within 2 cells of
/// the grid border. The returned field carries time == t_end exactly.
LevelSetField propagate(const LevelSetField& phi, double t_end, const RosParams& params,
                        const WindSeries& wind_series, const SolverConfig& config, RngStream& rng,
                        PropagateStats* stats = nullptr);

/// Restores the signed-distance property without moving the zero level-set,
/// by iterating d(phi)/d(tau) = S(phi0) * (1 - |grad phi|) with the smoothed
/// sign S(phi0) = phi0 / sqrt(phi0^2 + dx^2) frozen at the input field and
/// pseudo-time step 0.5 * min(dx, dy).
LevelSetField reinitialize(const LevelSetField& phi, int iterations);

/// True if any zero crossing lies within `band` cells of the grid border.
bool front_touches_border(const LevelSetField& phi, int band = 2);

}  // namespace firefilter
