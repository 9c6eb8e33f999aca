#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "firefilter/errors.hpp"
#include "firefilter/filter.hpp"
#include "test_support.hpp"

namespace ff = firefilter;
using fft::circle_field;
using fft::small_grid;

namespace {

const ff::WindSeries kCalm{{{0.0, 0.0, 0.0}}};

ff::RasterImage blurred_circle(const ff::Grid& grid, ff::Vec2 center, double radius,
                               double sigma) {
    const auto front = ff::extract_contour(circle_field(grid, center, radius));
    return ff::gaussian_blur(ff::rasterize_contour(front, grid), sigma, true);
}

ff::RasterImage raster_circle(const ff::Grid& grid, ff::Vec2 center, double radius) {
    return ff::rasterize_contour(ff::extract_contour(circle_field(grid, center, radius)), grid);
}

}  // namespace

TEST_CASE("filter config validation") {
    ff::FilterConfig config;
    CHECK_NOTHROW(ff::validate_filter_config(config));
    config.n_particles = 0;
    CHECK_THROWS_AS(ff::validate_filter_config(config), ff::ConfigError);
    config = {};
    config.n_members = 1;
    CHECK_THROWS_AS(ff::validate_filter_config(config), ff::ConfigError);
    config = {};
    config.sigma_blur = 0.0;
    CHECK_THROWS_AS(ff::validate_filter_config(config), ff::ConfigError);
    config = {};
    config.r_scale = 0.0;
    CHECK_THROWS_AS(ff::validate_filter_config(config), ff::ConfigError);
    config = {};
    config.downsample = 0;
    CHECK_THROWS_AS(ff::validate_filter_config(config), ff::ConfigError);
}

TEST_CASE("likelihood score is the image overlap sum") {
    const ff::Grid grid = small_grid(48, 48, 1.0);
    const auto truth = raster_circle(grid, {24.0, 24.0}, 8.0);
    const auto pred = blurred_circle(grid, {24.0, 24.0}, 8.0, 2.0);

    double expected = 0.0;
    for (std::size_t k = 0; k < truth.pixels.size(); ++k)
        expected += truth.pixels[k] * pred.pixels[k];
    CHECK(ff::likelihood_score(truth, pred) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected > 0.0);

    SUBCASE("grids must match") {
        const ff::RasterImage other(small_grid(47, 48, 1.0));
        CHECK_THROWS_AS(ff::likelihood_score(truth, other), ff::ConfigError);
    }
}

TEST_CASE("likelihood of well-separated fronts is negligible") {
    const ff::Grid grid = small_grid(64, 64, 1.0);
    const auto truth = raster_circle(grid, {16.0, 32.0}, 5.0);
    const auto far_pred = blurred_circle(grid, {48.0, 32.0}, 5.0, 2.0);
    // 32 cells apart with a 2-cell blur: beyond any kernel support.
    CHECK(ff::likelihood_score(truth, far_pred) < 1e-6);
}

TEST_CASE("likelihood decreases as the prediction slides away from truth") {
    const ff::Grid grid = small_grid(64, 64, 1.0);
    const auto truth = raster_circle(grid, {28.0, 32.0}, 8.0);
    double prev = ff::likelihood_score(truth, blurred_circle(grid, {28.0, 32.0}, 8.0, 2.0));
    for (double shift : {2.0, 4.0, 7.0, 11.0}) {
        const double s =
            ff::likelihood_score(truth, blurred_circle(grid, {28.0 + shift, 32.0}, 8.0, 2.0));
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("effective sample size closed forms") {
    CHECK(ff::ess({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(ff::ess({1.0, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ff::ess({0.5, 0.5, 0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-12));
    const std::vector<double> w(100, 0.01);
    CHECK(ff::ess(w) == doctest::Approx(100.0).epsilon(1e-9));

    CHECK_THROWS_AS(ff::ess({}), ff::ConfigError);
    CHECK_THROWS_AS(ff::ess({0.7, 0.7}), ff::ConfigError);   // not normalized
    CHECK_THROWS_AS(ff::ess({1.5, -0.5}), ff::ConfigError);  // negative weight
}

TEST_CASE("systematic copy counts") {
    SUBCASE("uniform weights copy every slot once, any offset") {
        for (double u : {0.0, 0.31, 0.77, 0.999}) {
            const auto counts = ff::systematic_copy_counts({0.25, 0.25, 0.25, 0.25}, 4, u);
            CHECK(counts == std::vector<int>{1, 1, 1, 1});
        }
    }
    SUBCASE("exact multiples are offset-independent") {
        for (double u : {0.0, 0.2, 0.5, 0.9}) {
            const auto counts = ff::systematic_copy_counts({0.75, 0.25}, 4, u);
            CHECK(counts == std::vector<int>{3, 1});
        }
    }
    SUBCASE("degenerate weight takes every slot") {
        const auto counts = ff::systematic_copy_counts({0.0, 1.0, 0.0}, 5, 0.4);
        CHECK(counts == std::vector<int>{0, 5, 0});
    }
    SUBCASE("counts stay within the floor/ceil band") {
        std::mt19937 gen(11);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            const int n = 100;
            std::vector<double> w(n);
            double total = 0.0;
            for (double& x : w) total += (x = uni(gen) < 0.2 ? 0.0 : uni(gen));
            for (double& x : w) x /= total;
            const auto counts = ff::systematic_copy_counts(w, n, uni(gen));
            int sum = 0;
            for (int i = 0; i < n; ++i) {
                CHECK(counts[i] >= static_cast<int>(std::floor(n * w[i])));
                CHECK(counts[i] <= static_cast<int>(std::ceil(n * w[i])));
                sum += counts[i];
            }
            CHECK(sum == n);
        }
    }
    SUBCASE("offset average is unbiased") {
        const std::vector<double> w{0.13, 0.41, 0.06, 0.4};
        const int n = 10;
        std::vector<double> mean(w.size(), 0.0);
        const int m = 2000;
        for (int k = 0; k < m; ++k) {
            const auto counts = ff::systematic_copy_counts(w, n, (k + 0.5) / m);
            for (std::size_t i = 0; i < w.size(); ++i) mean[i] += counts[i];
        }
        for (std::size_t i = 0; i < w.size(); ++i)
            CHECK(mean[i] / m == doctest::Approx(n * w[i]).epsilon(0.01));
    }
    SUBCASE("invalid arguments") {
        CHECK_THROWS_AS(ff::systematic_copy_counts({0.5, 0.5}, 4, 1.0), ff::ConfigError);
        CHECK_THROWS_AS(ff::systematic_copy_counts({0.5, 0.5}, 4, -0.1), ff::ConfigError);
        CHECK_THROWS_AS(ff::systematic_copy_counts({0.5, 0.5}, 0, 0.5), ff::ConfigError);
    }
}

TEST_CASE("particle initialization") {
    const ff::Grid grid = small_grid();
    const ff::Ignition ignition{ff::CircleSpec{{32.0, 32.0}, 6.0}};
    const ff::SolverConfig solver;

    SUBCASE("zero-variance prior pins the parameters") {
        const auto ps = ff::pf_init(grid, ignition, {0.12, 0.0, 0.3, 0.0}, 1, solver, 5);
        REQUIRE(ps.particles.size() == 1);
        CHECK(ps.particles[0].params.beta == 0.12);
        CHECK(ps.particles[0].params.gamma == 0.3);
        CHECK(ps.particles[0].weight == 1.0);
        CHECK(ps.time == 0.0);
    }

    SUBCASE("all particles share the ignition field and uniform weight") {
        const auto ps = ff::pf_init(grid, ignition, {0.1, 0.05, 0.2, 0.1}, 100, solver, 5);
        REQUIRE(ps.particles.size() == 100);
        const auto& ref = ps.particles.front().phi.field.values();
        for (const auto& p : ps.particles) {
            CHECK(p.weight == doctest::Approx(0.01).epsilon(1e-12));
            CHECK(p.phi.field.values() == ref);
        }
        // Draws differ across particles.
        CHECK(ps.particles[0].params.beta != ps.particles[1].params.beta);
    }

    SUBCASE("identical seeds give identical populations") {
        const auto a = ff::pf_init(grid, ignition, {0.1, 0.05, 0.2, 0.1}, 10, solver, 42);
        const auto b = ff::pf_init(grid, ignition, {0.1, 0.05, 0.2, 0.1}, 10, solver, 42);
        const auto c = ff::pf_init(grid, ignition, {0.1, 0.05, 0.2, 0.1}, 10, solver, 43);
        for (std::size_t i = 0; i < a.particles.size(); ++i) {
            CHECK(a.particles[i].params.beta == b.particles[i].params.beta);
            CHECK(a.particles[i].params.gamma == b.particles[i].params.gamma);
        }
        bool any_diff = false;
        for (std::size_t i = 0; i < a.particles.size(); ++i)
            any_diff = any_diff || a.particles[i].params.beta != c.particles[i].params.beta;
        CHECK(any_diff);
    }

    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(ff::pf_init(grid, ignition, {0.1, 0.05, 0.2, 0.1}, 0, solver, 5),
                        ff::ConfigError);
        const ff::Ignition outside{ff::CircleSpec{{500.0, 500.0}, 3.0}};
        CHECK_THROWS_AS(ff::pf_init(grid, outside, {0.1, 0.05, 0.2, 0.1}, 4, solver, 5),
                        ff::ConfigError);
    }
}

TEST_CASE("particle prediction") {
    const ff::Grid grid(120, 120, 0.5, 0.5, {0.0, 0.0});
    const ff::Ignition ignition{ff::CircleSpec{{30.0, 30.0}, 5.0}};
    const ff::SolverConfig solver;

    SUBCASE("predicting to the current time changes nothing") {
        const auto ps = ff::pf_init(grid, ignition, {0.1, 0.02, 0.2, 0.05}, 4, solver, 9);
        const auto out = ff::pf_predict(ps, 0.0, kCalm, solver);
        for (std::size_t i = 0; i < ps.particles.size(); ++i)
            CHECK(out.particles[i].phi.field.values() == ps.particles[i].phi.field.values());
        CHECK(out.epoch == ps.epoch + 1);
    }

    SUBCASE("an earlier target time is rejected") {
        auto ps = ff::pf_init(grid, ignition, {0.1, 0.0, 0.2, 0.0}, 2, solver, 9);
        ps.time = 5.0;
        CHECK_THROWS_AS(ff::pf_predict(ps, 1.0, kCalm, solver), ff::ConfigError);
    }

    SUBCASE("identical parameters and no noise move in lockstep") {
        const auto ps = ff::pf_init(grid, ignition, {0.2, 0.0, 0.1, 0.0}, 5, solver, 9);
        long steps = 0;
        const auto out = ff::pf_predict(ps, 10.0, kCalm, solver, 1, &steps);
        CHECK(steps > 0);
        CHECK(out.time == 10.0);
        const auto& ref = out.particles.front().phi.field.values();
        for (const auto& p : out.particles) CHECK(p.phi.field.values() == ref);
    }

    SUBCASE("parameter spread widens the front spread") {
        const ff::WindSeries wind{{{0.0, 2.0, 0.0}}};
        auto spread_of = [&](double sigma_gamma) {
            const auto ps =
                ff::pf_init(grid, ignition, {0.1, 0.0, 0.2, sigma_gamma}, 16, solver, 9);
            const auto out = ff::pf_predict(ps, 12.0, wind, solver);
            double lo = 1e300, hi = -1e300;
            for (const auto& p : out.particles) {
                const auto front = ff::extract_contour(p.phi);
                for (const auto& poly : front.polylines)
                    for (const auto& v : poly) {
                        lo = std::min(lo, v[0]);
                        hi = std::max(hi, v[0]);
                    }
            }
            return hi - lo;
        };
        CHECK(spread_of(0.08) > spread_of(0.005));
    }

    SUBCASE("domain errors name the offending particle") {
        const auto ps = ff::pf_init(grid, ignition, {1.0, 0.0, 0.0, 0.0}, 3, solver, 9);
        CHECK_THROWS_WITH_AS(ff::pf_predict(ps, 120.0, kCalm, solver),
                             doctest::Contains("particle"), ff::NumericError);
    }
}

TEST_CASE("particle update weights, resampling, and degeneracy") {
    const ff::Grid grid = small_grid(64, 64, 1.0);
    const ff::SolverConfig solver;
    const ff::Ignition ignition{ff::CircleSpec{{24.0, 32.0}, 6.0}};

    auto make_set = [&](const std::vector<ff::Vec2>& centers) {
        ff::ParticleSet ps;
        ps.time = 0.0;
        ps.rng_seed = 7;
        for (const auto& c : centers)
            ps.particles.push_back({circle_field(grid, c, 6.0), {0.1, 0.2}, 0.0});
        const double w = 1.0 / static_cast<double>(ps.particles.size());
        for (auto& p : ps.particles) p.weight = w;
        return ps;
    };

    SUBCASE("identical particles keep uniform weights") {
        auto ps = make_set({{24.0, 32.0}, {24.0, 32.0}, {24.0, 32.0}, {24.0, 32.0}});
        const ff::Observation obs{0.0, ff::extract_contour(circle_field(grid, {24.0, 32.0}, 6.0))};
        const auto result = ff::pf_update(ps, obs, 2.0, true);
        CHECK(result.resampled);
        CHECK_FALSE(result.degenerate);
        for (const auto& p : result.set.particles)
            CHECK(p.weight == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("the matching particle absorbs the population") {
        auto ps = make_set({{24.0, 32.0}, {52.0, 52.0}});
        ps.particles[0].params = {0.5, 0.5};  // marker for the matching particle
        const ff::Observation obs{0.0, ff::extract_contour(circle_field(grid, {24.0, 32.0}, 6.0))};
        const auto result = ff::pf_update(ps, obs, 2.0, true);
        REQUIRE(result.set.particles.size() == 2);
        CHECK(result.resampled);
        for (const auto& p : result.set.particles) {
            CHECK(p.params.beta == 0.5);
            CHECK(p.weight == doctest::Approx(0.5).epsilon(1e-12));
        }
    }

    SUBCASE("an observation no particle explains resets weights and skips resampling") {
        auto ps = make_set({{18.0, 18.0}, {20.0, 44.0}});
        ps.particles[0].weight = 0.9;
        ps.particles[1].weight = 0.1;
        // Empty observation contour: zero overlap with every prediction.
        const ff::Observation obs{0.0, {{}, 0.0}};
        const auto result = ff::pf_update(ps, obs, 2.0, true);
        CHECK(result.degenerate);
        CHECK_FALSE(result.resampled);
        for (const auto& p : result.set.particles)
            CHECK(p.weight == doctest::Approx(0.5).epsilon(1e-12));
        // Fields and parameters are untouched.
        CHECK(result.set.particles[0].phi.field.values() == ps.particles[0].phi.field.values());
    }

    SUBCASE("ESS-triggered resampling only fires on skewed weights") {
        auto ps = make_set({{24.0, 32.0}, {25.0, 32.0}, {23.0, 32.0}, {24.0, 33.0}});
        const ff::Observation obs{0.0, ff::extract_contour(circle_field(grid, {24.0, 32.0}, 6.0))};
        const auto gentle = ff::pf_update(ps, obs, 2.0, false);
        CHECK_FALSE(gentle.resampled);  // near-uniform scores keep ESS above n/2

        auto skewed = make_set({{24.0, 32.0}, {52.0, 12.0}, {52.0, 52.0}, {12.0, 52.0}});
        const auto forced = ff::pf_update(skewed, obs, 2.0, false);
        CHECK(forced.resampled);
    }

    SUBCASE("observation time must match the particle time") {
        auto ps = make_set({{24.0, 32.0}, {25.0, 32.0}});
        const ff::Observation obs{1.0, ff::extract_contour(circle_field(grid, {24.0, 32.0}, 6.0))};
        CHECK_THROWS_AS(ff::pf_update(ps, obs, 2.0, true), ff::ConfigError);
    }
}

TEST_CASE("systematic resampling of a particle set") {
    const ff::Grid grid = small_grid(16, 16, 1.0);
    ff::ParticleSet ps;
    ps.rng_seed = 31;
    for (int i = 0; i < 4; ++i)
        ps.particles.push_back(
            {circle_field(grid, {8.0, 8.0}, 2.0 + i), {0.1 * (i + 1), 0.0}, 0.0});

    SUBCASE("a certain particle fills every slot") {
        for (auto& p : ps.particles) p.weight = 0.0;
        ps.particles[2].weight = 1.0;
        ff::RngStream rng(3);
        const auto out = ff::resample_systematic(ps, rng);
        REQUIRE(out.particles.size() == 4);
        for (const auto& p : out.particles) {
            CHECK(p.params.beta == doctest::Approx(0.3).epsilon(1e-12));
            CHECK(p.weight == doctest::Approx(0.25).epsilon(1e-12));
        }
    }

    SUBCASE("uniform weights reproduce the population") {
        for (auto& p : ps.particles) p.weight = 0.25;
        ff::RngStream rng(3);
        const auto out = ff::resample_systematic(ps, rng);
        REQUIRE(out.particles.size() == 4);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(out.particles[i].params.beta ==
                  doctest::Approx(ps.particles[i].params.beta).epsilon(1e-12));
    }
}

TEST_CASE("enkf update: closed forms") {
    SUBCASE("zero ensemble spread is an exact no-op") {
        const std::vector<ff::RosParams> members{{0.2, 0.3}, {0.2, 0.3}, {0.2, 0.3}};
        const std::vector<std::vector<double>> preds{{1.0, 2.0}, {1.3, 2.2}, {0.9, 1.7}};
        const std::vector<std::vector<double>> obs{{1.1, 2.1}, {1.2, 2.0}, {1.0, 1.9}};
        const auto out = ff::enkf_update(members, preds, obs, 0.01);
        for (std::size_t i = 0; i < members.size(); ++i) {
            CHECK(out[i].beta == members[i].beta);
            CHECK(out[i].gamma == members[i].gamma);
        }
    }

    SUBCASE("scalar observation matches the closed-form Kalman gain") {
        const std::vector<ff::RosParams> members{{1.0, 0.5}, {2.0, 1.5}};
        const std::vector<std::vector<double>> preds{{3.0}, {5.0}};
        const std::vector<std::vector<double>> obs{{4.2}, {3.8}};
        const double r = 0.25;
        const auto out = ff::enkf_update(members, preds, obs, r);

        // K = X Y^T (Y Y^T + (m-1) r)^-1 for a single observed scalar.
        const double mb = 1.5, mg = 1.0, my = 4.0;
        const double xb[2] = {1.0 - mb, 2.0 - mb};
        const double xg[2] = {0.5 - mg, 1.5 - mg};
        const double y[2] = {3.0 - my, 5.0 - my};
        const double s = y[0] * y[0] + y[1] * y[1] + 1.0 * r;
        const double kb = (xb[0] * y[0] + xb[1] * y[1]) / s;
        const double kg = (xg[0] * y[0] + xg[1] * y[1]) / s;
        for (int i = 0; i < 2; ++i) {
            const double d = obs[i][0] - preds[i][0];
            CHECK(out[i].beta == doctest::Approx(std::max(0.0, members[i].beta + kb * d))
                                     .epsilon(1e-9));
            CHECK(out[i].gamma == doctest::Approx(members[i].gamma + kg * d).epsilon(1e-9));
        }
    }

    SUBCASE("updated beta never goes negative") {
        const std::vector<ff::RosParams> members{{0.01, 0.5}, {0.02, 1.5}};
        const std::vector<std::vector<double>> preds{{0.0}, {10.0}};
        const std::vector<std::vector<double>> obs{{-50.0}, {-50.0}};
        const auto out = ff::enkf_update(members, preds, obs, 0.01);
        for (const auto& p : out) CHECK(p.beta >= 0.0);
    }

    SUBCASE("shape errors") {
        const std::vector<ff::RosParams> members{{1.0, 0.5}, {2.0, 1.5}};
        CHECK_THROWS_AS(ff::enkf_update({{1.0, 1.0}}, {{1.0}}, {{1.0}}, 0.1), ff::ConfigError);
        CHECK_THROWS_AS(ff::enkf_update(members, {{1.0}}, {{1.0}, {2.0}}, 0.1), ff::ConfigError);
        CHECK_THROWS_AS(ff::enkf_update(members, {{1.0}, {2.0, 3.0}}, {{1.0}, {2.0}}, 0.1),
                        ff::ConfigError);
        CHECK_THROWS_AS(ff::enkf_update(members, {{1.0}, {2.0}}, {{1.0}, {2.0}}, 0.0),
                        ff::ConfigError);
    }
}

TEST_CASE("image downsampling block means") {
    const ff::Grid grid(8, 8, 1.0, 1.0, {0.0, 0.0});
    ff::RasterImage image(grid);
    for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) image(i, j) = (i < 4 && j < 4) ? 1.0 : 0.0;

    SUBCASE("factor 4 averages 4x4 blocks") {
        const auto v = ff::downsample_image(image, 4);
        REQUIRE(v.size() == 4);
        CHECK(v[0] == 1.0);
        CHECK(v[1] == 0.0);
        CHECK(v[2] == 0.0);
        CHECK(v[3] == 0.0);
    }

    SUBCASE("factor 1 flattens unchanged") {
        const auto v = ff::downsample_image(image, 1);
        REQUIRE(v.size() == 64);
        CHECK(v[0] == 1.0);
        CHECK(v[63] == 0.0);
    }

    SUBCASE("partial edge blocks average over their own size") {
        const ff::Grid g5(5, 4, 1.0, 1.0, {0.0, 0.0});
        ff::RasterImage im(g5, 1.0);
        im(4, 0) = 0.0;
        const auto v = ff::downsample_image(im, 4);
        // Blocks: 4x4 full and 1x4 edge strip.
        REQUIRE(v.size() == 2);
        CHECK(v[0] == 1.0);
        CHECK(v[1] == doctest::Approx(0.75).epsilon(1e-12));
    }

    SUBCASE("factor must be positive") {
        CHECK_THROWS_AS(ff::downsample_image(image, 0), ff::ConfigError);
    }
}
