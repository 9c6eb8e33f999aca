#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "firefilter/filter.hpp"
#include "firefilter/io.hpp"
#include "firefilter/metrics.hpp"

namespace py = pybind11;
namespace ff = firefilter;

namespace {

ff::WindSeries wind_from_rows(const std::vector<std::tuple<double, double, double>>& rows) {
    ff::WindSeries series;
    for (const auto& [t, wx, wy] : rows) series.samples.push_back({t, wx, wy});
    ff::validate_wind_series(series);
    return series;
}

std::vector<ff::Observation> observations_from_rows(
    const std::vector<std::pair<double, std::vector<ff::Polygon>>>& rows) {
    std::vector<ff::Observation> observations;
    for (const auto& [t, polys] : rows) {
        ff::Observation obs;
        obs.time = t;
        obs.front.time = t;
        obs.front.polylines = polys;
        observations.push_back(std::move(obs));
    }
    return observations;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Level-set fire-front simulation with Bayesian data assimilation";

    py::register_exception<ff::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ff::NumericError>(m, "NumericError", PyExc_RuntimeError);
    py::register_exception<ff::IoError>(m, "IoError", PyExc_OSError);

    py::class_<ff::Grid>(m, "Grid")
        .def(py::init<int, int, double, double, ff::Vec2>(), py::arg("nx"), py::arg("ny"),
             py::arg("dx"), py::arg("dy"), py::arg("origin") = ff::Vec2{0.0, 0.0})
        .def_property_readonly("nx", &ff::Grid::nx)
        .def_property_readonly("ny", &ff::Grid::ny)
        .def_property_readonly("dx", &ff::Grid::dx)
        .def_property_readonly("dy", &ff::Grid::dy)
        .def_property_readonly("origin", &ff::Grid::origin);

    py::class_<ff::LevelSetField>(m, "LevelSetField")
        .def_readonly("time", &ff::LevelSetField::time)
        .def_property_readonly(
            "grid", [](const ff::LevelSetField& f) { return f.field.grid(); })
        .def_property_readonly(
            "values", [](const ff::LevelSetField& f) { return f.field.values(); });

    py::class_<ff::RosParams>(m, "RosParams")
        .def(py::init<double, double>(), py::arg("beta"), py::arg("gamma"))
        .def_readwrite("beta", &ff::RosParams::beta)
        .def_readwrite("gamma", &ff::RosParams::gamma);

    py::class_<ff::RosPrior>(m, "RosPrior")
        .def(py::init<double, double, double, double>(), py::arg("mu_beta"),
             py::arg("sigma_beta"), py::arg("mu_gamma"), py::arg("sigma_gamma"))
        .def_readwrite("mu_beta", &ff::RosPrior::mu_beta)
        .def_readwrite("sigma_beta", &ff::RosPrior::sigma_beta)
        .def_readwrite("mu_gamma", &ff::RosPrior::mu_gamma)
        .def_readwrite("sigma_gamma", &ff::RosPrior::sigma_gamma);

    py::class_<ff::SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("cfl", &ff::SolverConfig::cfl)
        .def_readwrite("eno_order", &ff::SolverConfig::eno_order)
        .def_readwrite("reinit_every", &ff::SolverConfig::reinit_every)
        .def_readwrite("reinit_iterations", &ff::SolverConfig::reinit_iterations)
        .def_readwrite("noise_sigma", &ff::SolverConfig::noise_sigma)
        .def_readwrite("clamp_upwind", &ff::SolverConfig::clamp_upwind);

    py::class_<ff::FilterConfig>(m, "FilterConfig")
        .def(py::init<>())
        .def_readwrite("n_particles", &ff::FilterConfig::n_particles)
        .def_readwrite("n_members", &ff::FilterConfig::n_members)
        .def_readwrite("sigma_blur", &ff::FilterConfig::sigma_blur)
        .def_readwrite("resample_always", &ff::FilterConfig::resample_always)
        .def_readwrite("q_beta", &ff::FilterConfig::q_beta)
        .def_readwrite("q_gamma", &ff::FilterConfig::q_gamma)
        .def_readwrite("r_scale", &ff::FilterConfig::r_scale)
        .def_readwrite("downsample", &ff::FilterConfig::downsample)
        .def_readwrite("member_contours", &ff::FilterConfig::member_contours);

    py::class_<ff::Ignition>(m, "Ignition")
        .def_static("circle",
                    [](ff::Vec2 center, double radius) {
                        return ff::Ignition{ff::CircleSpec{center, radius}};
                    },
                    py::arg("center"), py::arg("radius"))
        .def_static("polygons",
                    [](std::vector<ff::Polygon> polys) { return ff::Ignition{std::move(polys)}; },
                    py::arg("polygons"))
        .def("signed_distance", &ff::Ignition::signed_distance, py::arg("grid"));

    py::class_<ff::CycleOutput>(m, "CycleOutput")
        .def_readonly("time", &ff::CycleOutput::time)
        .def_readonly("params", &ff::CycleOutput::params)
        .def_readonly("weights", &ff::CycleOutput::weights)
        .def_readonly("degenerate", &ff::CycleOutput::degenerate)
        .def_readonly("skipped", &ff::CycleOutput::skipped)
        .def_readonly("resampled", &ff::CycleOutput::resampled)
        .def_property_readonly(
            "forecast_mean",
            [](const ff::CycleOutput& c) { return c.forecast_mean.polylines; })
        .def_property_readonly(
            "analysis_mean",
            [](const ff::CycleOutput& c) { return c.analysis_mean.polylines; });

    py::class_<ff::FilterOutput>(m, "FilterOutput")
        .def_readonly("cycles", &ff::FilterOutput::cycles)
        .def_readonly("total_steps", &ff::FilterOutput::total_steps)
        .def_property_readonly(
            "initial_front",
            [](const ff::FilterOutput& o) { return o.initial_front.polylines; });

    m.def("signed_distance_circle", &ff::signed_distance_circle, py::arg("grid"),
          py::arg("center"), py::arg("radius"));
    m.def("signed_distance_polygon", &ff::signed_distance_polygon, py::arg("grid"),
          py::arg("polygons"));

    m.def(
        "extract_contour",
        [](const ff::LevelSetField& phi) { return ff::extract_contour(phi).polylines; },
        py::arg("phi"));
    m.def("polygon_area", &ff::polygon_area, py::arg("polygon"));

    m.def(
        "reinitialize",
        [](const ff::LevelSetField& phi, int iterations) {
            return ff::reinitialize(phi, iterations);
        },
        py::arg("phi"), py::arg("iterations") = 20);

    m.def(
        "propagate",
        [](const ff::LevelSetField& phi, double t_end, const ff::RosParams& params,
           const std::vector<std::tuple<double, double, double>>& wind,
           const ff::SolverConfig& solver, std::uint64_t seed) {
            ff::RngStream rng(seed);
            return ff::propagate(phi, t_end, params, wind_from_rows(wind), solver, rng);
        },
        py::arg("phi"), py::arg("t_end"), py::arg("params"), py::arg("wind"),
        py::arg("solver") = ff::SolverConfig{}, py::arg("seed") = 0,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "jaccard_fronts",
        [](const std::vector<ff::Polygon>& a, const std::vector<ff::Polygon>& b,
           const ff::Grid& grid) {
            const ff::RasterImage ma = ff::burned_mask(ff::FrontContour{a, 0.0}, grid);
            const ff::RasterImage mb = ff::burned_mask(ff::FrontContour{b, 0.0}, grid);
            return ff::jaccard(ma, mb);
        },
        py::arg("a"), py::arg("b"), py::arg("grid"));

    const auto run_filter = [](bool enkf, const ff::Grid& grid, const ff::Ignition& ignition,
                               const ff::RosPrior& prior,
                               const std::vector<std::pair<double, std::vector<ff::Polygon>>>& obs,
                               const std::vector<std::tuple<double, double, double>>& wind,
                               const ff::SolverConfig& solver, const ff::FilterConfig& filter,
                               std::uint64_t seed, int threads) {
        const ff::FilterRunConfig config{solver, filter, seed};
        const auto observations = observations_from_rows(obs);
        const auto series = wind_from_rows(wind);
        return enkf ? ff::enkf_run(grid, ignition, prior, observations, series, config, threads)
                    : ff::pf_run(grid, ignition, prior, observations, series, config, threads);
    };
    m.def(
        "pf_run",
        [run_filter](const ff::Grid& grid, const ff::Ignition& ignition, const ff::RosPrior& prior,
                     const std::vector<std::pair<double, std::vector<ff::Polygon>>>& obs,
                     const std::vector<std::tuple<double, double, double>>& wind,
                     const ff::SolverConfig& solver, const ff::FilterConfig& filter,
                     std::uint64_t seed, int threads) {
            return run_filter(false, grid, ignition, prior, obs, wind, solver, filter, seed,
                              threads);
        },
        py::arg("grid"), py::arg("ignition"), py::arg("prior"), py::arg("observations"),
        py::arg("wind"), py::arg("solver") = ff::SolverConfig{},
        py::arg("filter") = ff::FilterConfig{}, py::arg("seed") = 0, py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "enkf_run",
        [run_filter](const ff::Grid& grid, const ff::Ignition& ignition, const ff::RosPrior& prior,
                     const std::vector<std::pair<double, std::vector<ff::Polygon>>>& obs,
                     const std::vector<std::tuple<double, double, double>>& wind,
                     const ff::SolverConfig& solver, const ff::FilterConfig& filter,
                     std::uint64_t seed, int threads) {
            return run_filter(true, grid, ignition, prior, obs, wind, solver, filter, seed,
                              threads);
        },
        py::arg("grid"), py::arg("ignition"), py::arg("prior"), py::arg("observations"),
        py::arg("wind"), py::arg("solver") = ff::SolverConfig{},
        py::arg("filter") = ff::FilterConfig{}, py::arg("seed") = 0, py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());

    m.def("parse_run_config", &ff::parse_run_config, py::arg("json_text"));
    m.def("run_config_to_json", &ff::run_config_to_json, py::arg("config"));

    py::class_<ff::RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("grid", &ff::RunConfig::grid)
        .def_readwrite("solver", &ff::RunConfig::solver)
        .def_readwrite("filter", &ff::RunConfig::filter)
        .def_readwrite("seed", &ff::RunConfig::seed)
        .def_readwrite("t_end", &ff::RunConfig::t_end)
        .def_readwrite("obs_interval", &ff::RunConfig::obs_interval);

    m.attr("__version__") = "0.1.0";
}
