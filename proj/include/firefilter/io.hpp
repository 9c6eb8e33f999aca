#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "firefilter/filter.hpp"
#include "firefilter/level_set.hpp"
#include "firefilter/solver.hpp"
#include "firefilter/spread.hpp"

namespace firefilter {

/// Synthetic-scenario knobs: the per-second wind record and the optional
/// observation vertex jitter used by the truth generator.
struct SynthConfig {
    double wind_speed = 2.0;      // m/s
    double wind_dir_deg = 0.0;    // direction the wind blows toward, CCW from +x
    double gust_amplitude = 0.0;  // sinusoidal speed modulation, m/s
    double gust_period_s = 30.0;
    double obs_jitter = 0.0;      // vertex displacement sigma, meters
};

/// One run configuration, mirrored 1:1 by config.json (snake_case keys).
struct RunConfig {
    Grid grid{200, 200, 0.5, 0.5, {0.0, 0.0}};
    Ignition ignition{CircleSpec{{25.0, 50.0}, 5.0}};
    std::optional<RosParams> params;
    std::optional<RosPrior> prior;
    SolverConfig solver;
    FilterConfig filter;
    SynthConfig synth;
    std::uint64_t seed = 0;
    double t_end = 90.0;
    double obs_interval = 10.0;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& config);

/// Tagged front set for serialization (tags: truth, forecast, analysis,
/// member-k, mean).
struct FrontRecord {
    double time = 0.0;
    std::vector<Polygon> polygons;
    std::string tag;
};

/// Reads `time_s,wx_mps,wy_mps` or `time_s,speed_mps,dir_deg` CSV (direction
/// the wind blows toward, degrees CCW from +x). Errors carry the line number.
WindSeries load_wind_csv(const std::string& path);
void write_wind_csv(const WindSeries& series, const std::string& path);

std::vector<Observation> load_fronts_json(const std::string& path);
void write_fronts_json(const std::vector<FrontRecord>& records, const std::string& path);
std::vector<FrontRecord> load_front_records(const std::string& path);

/// Desk-scale stand-in for a mapped fire record: builds the per-second wind
/// series, propagates the truth field, and returns fronts at every
/// obs_interval (optionally jittered along vertex normals to emulate mapping
/// error). `stats`, when given, accumulates solver step counts.
std::pair<std::vector<Observation>, WindSeries> generate_synthetic(const RunConfig& config,
                                                                   const RosParams& true_params,
                                                                   RngStream& rng,
                                                                   PropagateStats* stats = nullptr);

}  // namespace firefilter
