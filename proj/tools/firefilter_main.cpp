#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "firefilter/filter.hpp"
#include "firefilter/io.hpp"
#include "firefilter/metrics.hpp"
#include "firefilter/threading.hpp"

namespace ff = firefilter;
using json = nlohmann::ordered_json;

namespace {

struct Args {
    std::string config_path;
    std::string fronts_path;
    std::string wind_path;
    std::string truth_path;
    std::string out_dir = "output";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

// Stream key separating the CLI's truth/simulation RNG from filter substreams.
constexpr std::uint64_t kCliPropagationStream = 0x51;

int resolve_cli_threads(const Args& args) {
    if (args.threads) {
        if (*args.threads < 0) throw ff::ConfigError("--threads: must be >= 0");
        return ff::resolve_threads(*args.threads);
    }
    if (const char* env = std::getenv("FIREFILTER_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n < 0) throw ff::ConfigError("FIREFILTER_THREADS: must be >= 0");
            return ff::resolve_threads(n);
        } catch (const ff::ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ff::ConfigError("FIREFILTER_THREADS: not an integer");
        }
    }
    return 1;
}

ff::RunConfig load_config(const Args& args) {
    if (args.config_path.empty()) throw ff::ConfigError("--config is required");
    ff::RunConfig config = ff::load_run_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    return config;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ff::IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_run_meta(const std::string& out_dir, const std::string& command,
                    const ff::RunConfig& config, int threads, json extra, double wall_time_s) {
    json meta;
    meta["command"] = command;
    meta["seed"] = config.seed;
    meta["threads"] = threads;
    for (auto& [key, value] : extra.items()) meta[key] = value;
    meta["config"] = json::parse(ff::run_config_to_json(config));
    meta["wall_time_s"] = wall_time_s;
    std::ofstream out(join(out_dir, "run_meta.json"), std::ios::binary);
    if (!out) throw ff::IoError("cannot write run_meta.json in " + out_dir);
    out << meta.dump(2) << "\n";
}

class WallClock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ff::RosParams require_params(const ff::RunConfig& config, const char* command) {
    if (!config.params)
        throw ff::ConfigError(std::string("config: 'params' is required for ") + command);
    return *config.params;
}

ff::RosPrior require_prior(const ff::RunConfig& config, const char* command) {
    if (!config.prior)
        throw ff::ConfigError(std::string("config: 'prior' is required for ") + command);
    return *config.prior;
}

std::vector<ff::FrontRecord> forecast_records(const ff::RunConfig& config,
                                              const ff::RosParams& params,
                                              const ff::WindSeries* wind_override,
                                              ff::PropagateStats& stats) {
    std::vector<ff::FrontRecord> records;
    const ff::LevelSetField initial = config.ignition.signed_distance(config.grid);
    records.push_back({0.0, ff::extract_contour(initial).polylines, "forecast"});

    ff::RngStream rng(ff::derive_seed(config.seed, {kCliPropagationStream}));
    if (wind_override) {
        // Observation-free filter runs reduce to plain simulation driven by
        // the supplied wind record.
        ff::LevelSetField phi = initial;
        long k = 1;
        while (k * config.obs_interval <= config.t_end + 1e-9) {
            const double t_obs = k * config.obs_interval;
            ff::PropagateStats leg;
            phi = ff::propagate(phi, t_obs, params, *wind_override, config.solver, rng, &leg);
            stats.steps += leg.steps;
            stats.reinits += leg.reinits;
            records.push_back({t_obs, ff::extract_contour(phi).polylines, "forecast"});
            ++k;
        }
    } else {
        ff::RunConfig plain = config;
        plain.synth.obs_jitter = 0.0;
        const auto [observations, wind] = ff::generate_synthetic(plain, params, rng, &stats);
        for (const ff::Observation& obs : observations)
            records.push_back({obs.time, obs.front.polylines, "forecast"});
    }
    return records;
}

int cmd_simulate(const Args& args) {
    const WallClock clock;
    const ff::RunConfig config = load_config(args);
    const ff::RosParams params = require_params(config, "simulate");
    ensure_out_dir(args.out_dir);

    ff::PropagateStats stats;
    const std::vector<ff::FrontRecord> records = forecast_records(config, params, nullptr, stats);
    ff::write_fronts_json(records, join(args.out_dir, "fronts.json"));

    json extra;
    extra["records"] = records.size();
    extra["total_steps"] = stats.steps;
    extra["reinits"] = stats.reinits;
    write_run_meta(args.out_dir, "simulate", config, 1, std::move(extra), clock.seconds());
    return 0;
}

int cmd_synth(const Args& args) {
    const WallClock clock;
    const ff::RunConfig config = load_config(args);
    const ff::RosParams params = require_params(config, "synth");
    ensure_out_dir(args.out_dir);

    ff::RngStream rng(ff::derive_seed(config.seed, {kCliPropagationStream}));
    ff::PropagateStats stats;
    const auto [observations, wind] = ff::generate_synthetic(config, params, rng, &stats);

    std::vector<ff::FrontRecord> records;
    for (const ff::Observation& obs : observations)
        records.push_back({obs.time, obs.front.polylines, "truth"});
    ff::write_fronts_json(records, join(args.out_dir, "truth_fronts.json"));
    ff::write_wind_csv(wind, join(args.out_dir, "wind.csv"));

    json true_params = {{"beta", params.beta}, {"gamma", params.gamma}};
    std::ofstream out(join(args.out_dir, "true_params.json"), std::ios::binary);
    if (!out) throw ff::IoError("cannot write true_params.json in " + args.out_dir);
    out << true_params.dump(2) << "\n";

    json extra;
    extra["records"] = records.size();
    extra["total_steps"] = stats.steps;
    extra["reinits"] = stats.reinits;
    write_run_meta(args.out_dir, "synth", config, 1, std::move(extra), clock.seconds());
    return 0;
}

// Weighted parameter mean; uniform when the weight list is empty (EnKF).
ff::RosParams mean_params(const std::vector<ff::RosParams>& params,
                          const std::vector<double>& weights) {
    ff::RosParams mean{0.0, 0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        mean.beta += w * params[i].beta;
        mean.gamma += w * params[i].gamma;
        total += w;
    }
    mean.beta /= total;
    mean.gamma /= total;
    return mean;
}

void write_filter_outputs(const Args& args, const ff::RunConfig& config,
                          const ff::FilterOutput& output,
                          const std::vector<ff::Observation>& observations) {
    std::vector<ff::FrontRecord> records;
    records.push_back({0.0, output.initial_front.polylines, "mean"});
    for (const ff::CycleOutput& cycle : output.cycles) {
        records.push_back({cycle.time, cycle.forecast_mean.polylines, "forecast"});
        records.push_back({cycle.time, cycle.analysis_mean.polylines, "analysis"});
        const std::size_t shown =
            std::min<std::size_t>(cycle.members.size(), config.filter.member_contours);
        for (std::size_t m = 0; m < shown; ++m)
            records.push_back(
                {cycle.time, cycle.members[m].polylines, "member-" + std::to_string(m)});
    }
    ff::write_fronts_json(records, join(args.out_dir, "fronts.json"));

    json trace = json::array();
    for (const ff::CycleOutput& cycle : output.cycles) {
        json entry;
        entry["time_s"] = cycle.time;
        const ff::RosParams mean = mean_params(cycle.params, cycle.weights);
        entry["mean"] = {{"beta", mean.beta}, {"gamma", mean.gamma}};
        json plist = json::array();
        for (const ff::RosParams& p : cycle.params)
            plist.push_back({{"beta", p.beta}, {"gamma", p.gamma}});
        entry["params"] = std::move(plist);
        if (!cycle.weights.empty()) entry["weights"] = cycle.weights;
        entry["degenerate"] = cycle.degenerate;
        entry["skipped"] = cycle.skipped;
        entry["resampled"] = cycle.resampled;
        trace.push_back(std::move(entry));
    }
    {
        std::ofstream out(join(args.out_dir, "params_trace.json"), std::ios::binary);
        if (!out) throw ff::IoError("cannot write params_trace.json in " + args.out_dir);
        out << trace.dump(2) << "\n";
    }

    json variance = json::array();
    for (const ff::CycleOutput& cycle : output.cycles) {
        double sum = 0.0, peak = 0.0;
        for (double v : cycle.variance.values()) {
            sum += v;
            peak = std::max(peak, v);
        }
        variance.push_back({{"time_s", cycle.time},
                            {"mean_variance", sum / cycle.variance.values().size()},
                            {"max_variance", peak}});
    }
    {
        std::ofstream out(join(args.out_dir, "variance.json"), std::ios::binary);
        if (!out) throw ff::IoError("cannot write variance.json in " + args.out_dir);
        out << variance.dump(2) << "\n";
    }

    // Skill vs the assimilated observations themselves (truth proxy).
    std::string skill =
        "time_s,forecast_jaccard,forecast_sym_diff_m2,analysis_jaccard,analysis_sym_diff_m2\n";
    for (std::size_t k = 0; k < output.cycles.size(); ++k) {
        const ff::CycleOutput& cycle = output.cycles[k];
        const ff::RasterImage truth = ff::burned_mask(observations[k].front, config.grid);
        const ff::RasterImage forecast = ff::burned_mask(cycle.forecast_mean, config.grid);
        const ff::RasterImage analysis = ff::burned_mask(cycle.analysis_mean, config.grid);
        skill += format_double(cycle.time);
        skill += ',' + format_double(ff::jaccard(forecast, truth));
        skill += ',' + format_double(ff::symmetric_difference_area(forecast, truth));
        skill += ',' + format_double(ff::jaccard(analysis, truth));
        skill += ',' + format_double(ff::symmetric_difference_area(analysis, truth));
        skill += '\n';
    }
    {
        std::ofstream out(join(args.out_dir, "skill.csv"), std::ios::binary);
        if (!out) throw ff::IoError("cannot write skill.csv in " + args.out_dir);
        out << skill;
    }
}

int cmd_filter(const Args& args, bool enkf) {
    const WallClock clock;
    const char* name = enkf ? "enkf" : "pf";
    const ff::RunConfig config = load_config(args);
    const ff::RosPrior prior = require_prior(config, name);
    if (args.fronts_path.empty()) throw ff::ConfigError("--fronts is required");
    if (args.wind_path.empty()) throw ff::ConfigError("--wind is required");
    const int threads = resolve_cli_threads(args);
    ensure_out_dir(args.out_dir);

    const std::vector<ff::Observation> observations = ff::load_fronts_json(args.fronts_path);
    const ff::WindSeries wind = ff::load_wind_csv(args.wind_path);

    if (observations.empty()) {
        // No observations: run open loop at the prior mean.
        ff::PropagateStats stats;
        const ff::RosParams params{std::max(0.0, prior.mu_beta), prior.mu_gamma};
        const std::vector<ff::FrontRecord> records =
            forecast_records(config, params, &wind, stats);
        ff::write_fronts_json(records, join(args.out_dir, "fronts.json"));
        json extra;
        extra["observations"] = 0;
        extra["records"] = records.size();
        extra["total_steps"] = stats.steps;
        write_run_meta(args.out_dir, name, config, threads, std::move(extra), clock.seconds());
        return 0;
    }

    ff::FilterRunConfig run{config.solver, config.filter, config.seed};
    const ff::FilterOutput output =
        enkf ? ff::enkf_run(config.grid, config.ignition, prior, observations, wind, run, threads)
             : ff::pf_run(config.grid, config.ignition, prior, observations, wind, run, threads);

    write_filter_outputs(args, config, output, observations);

    json degenerate = json::array(), skipped = json::array();
    long resampled = 0;
    for (std::size_t k = 0; k < output.cycles.size(); ++k) {
        if (output.cycles[k].degenerate) degenerate.push_back(k);
        if (output.cycles[k].skipped) skipped.push_back(k);
        if (output.cycles[k].resampled) ++resampled;
    }
    json extra;
    extra["observations"] = observations.size();
    extra["cycles"] = output.cycles.size();
    extra["total_steps"] = output.total_steps;
    extra["degenerate_cycles"] = std::move(degenerate);
    extra["skipped_cycles"] = std::move(skipped);
    extra["resampled_cycles"] = resampled;
    write_run_meta(args.out_dir, name, config, threads, std::move(extra), clock.seconds());
    return 0;
}

// Records used for scoring: prefer analysis fronts, then forecasts, then all.
std::vector<ff::FrontRecord> scoring_subset(std::vector<ff::FrontRecord> records) {
    for (const char* tag : {"analysis", "forecast"}) {
        std::vector<ff::FrontRecord> subset;
        for (const ff::FrontRecord& r : records)
            if (r.tag == tag) subset.push_back(r);
        if (!subset.empty()) return subset;
    }
    return records;
}

int cmd_score(const Args& args) {
    const ff::RunConfig config = load_config(args);
    if (args.fronts_path.empty()) throw ff::ConfigError("--fronts is required");
    if (args.truth_path.empty()) throw ff::ConfigError("--truth is required");

    const std::vector<ff::FrontRecord> predicted =
        scoring_subset(ff::load_front_records(args.fronts_path));
    std::vector<ff::FrontRecord> truth;
    for (const ff::FrontRecord& r : ff::load_front_records(args.truth_path))
        if (r.tag == "truth" || r.tag.empty()) truth.push_back(r);

    if (predicted.size() != truth.size()) {
        throw ff::ConfigError("score: prediction has " + std::to_string(predicted.size()) +
                              " records but truth has " + std::to_string(truth.size()));
    }
    std::string out = "time_s,jaccard,sym_diff_m2\n";
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        if (std::abs(predicted[k].time - truth[k].time) > 1e-6)
            throw ff::ConfigError("score: time mismatch at record " + std::to_string(k) +
                                  ": prediction t=" + format_double(predicted[k].time) +
                                  " vs truth t=" + format_double(truth[k].time));
        ff::FrontContour a{predicted[k].polygons, predicted[k].time};
        ff::FrontContour b{truth[k].polygons, truth[k].time};
        const ff::RasterImage ma = ff::burned_mask(a, config.grid);
        const ff::RasterImage mb = ff::burned_mask(b, config.grid);
        out += format_double(predicted[k].time);
        out += ',' + format_double(ff::jaccard(ma, mb));
        out += ',' + format_double(ff::symmetric_difference_area(ma, mb));
        out += '\n';
    }
    std::cout << out;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Level-set fire-front simulation with Bayesian data assimilation"};
    app.require_subcommand(1);

    Args args;
    auto add_common = [&](CLI::App* sub, bool wants_fronts, bool wants_wind, bool wants_truth) {
        sub->add_option("--config", args.config_path, "Run configuration JSON")->required();
        sub->add_option("--out", args.out_dir, "Output directory (default: output)");
        sub->add_option("--seed", args.seed, "Seed override");
        sub->add_option("--threads", args.threads, "Worker threads (0 = auto)");
        if (wants_fronts) sub->add_option("--fronts", args.fronts_path, "Front observations JSON");
        if (wants_wind) sub->add_option("--wind", args.wind_path, "Wind record CSV");
        if (wants_truth) sub->add_option("--truth", args.truth_path, "Truth fronts JSON");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "Open-loop level-set simulation");
    add_common(simulate, false, false, false);
    CLI::App* pf = app.add_subcommand("pf", "Particle-filter assimilation run");
    add_common(pf, true, true, false);
    CLI::App* enkf = app.add_subcommand("enkf", "Ensemble-Kalman assimilation run");
    add_common(enkf, true, true, false);
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic truth scenario");
    add_common(synth, false, false, false);
    CLI::App* score = app.add_subcommand("score", "Score prediction fronts against truth");
    add_common(score, true, false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (pf->parsed()) return cmd_filter(args, false);
        if (enkf->parsed()) return cmd_filter(args, true);
        if (synth->parsed()) return cmd_synth(args);
        if (score->parsed()) return cmd_score(args);
        throw ff::ConfigError("no subcommand given");
    } catch (const ff::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ff::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ff::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
