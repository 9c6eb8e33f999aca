#include <doctest.h>

#include <cmath>
#include <random>

#include "firefilter/errors.hpp"
#include "firefilter/metrics.hpp"
#include "test_support.hpp"

namespace ff = firefilter;
using fft::small_grid;

namespace {

ff::RasterImage rect_mask(const ff::Grid& grid, int i0, int i1, int j0, int j1) {
    ff::RasterImage mask(grid);
    for (int j = j0; j < j1; ++j)
        for (int i = i0; i < i1; ++i) mask(i, j) = 1.0;
    return mask;
}

double mask_sum(const ff::RasterImage& mask) {
    double s = 0.0;
    for (double p : mask.pixels) s += p;
    return s;
}

}  // namespace

TEST_CASE("burned mask of a square matches the even-odd oracle") {
    const ff::Grid grid = small_grid(32, 32, 1.0);
    const ff::FrontContour front{{fft::square_polygon(15.0, 15.0, 5.0)}, 0.0};
    const auto mask = ff::burned_mask(front, grid);

    // Side 10 on a unit lattice covers between 9x9 and 11x11 cell centers.
    const double count = mask_sum(mask);
    CHECK(count >= 81.0);
    CHECK(count <= 121.0);

    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const bool inside = fft::oracle_inside(front.polylines, grid.x(i), grid.y(j));
            CHECK(mask(i, j) == (inside ? 1.0 : 0.0));
        }
}

TEST_CASE("burned mask of an empty contour is all zero") {
    const ff::Grid grid = small_grid(8, 8, 1.0);
    CHECK(mask_sum(ff::burned_mask({{}, 0.0}, grid)) == 0.0);
}

TEST_CASE("nested polygons burn an annulus") {
    const ff::Grid grid = small_grid(32, 32, 1.0);
    const ff::FrontContour front{
        {fft::square_polygon(15.0, 15.0, 8.0), fft::square_polygon(15.0, 15.0, 3.0)}, 0.0};
    const auto mask = ff::burned_mask(front, grid);
    CHECK(mask(15, 15) == 0.0);  // the island is unburned
    CHECK(mask(15, 10) == 1.0);
    CHECK(mask(15, 25) == 0.0);
    double expected = 0.0;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i)
            expected += fft::oracle_inside(front.polylines, grid.x(i), grid.y(j)) ? 1.0 : 0.0;
    CHECK(mask_sum(mask) == expected);
}

TEST_CASE("burned mask agrees with the field sign for a resolved circle") {
    const ff::Grid grid = small_grid();
    const auto phi = fft::circle_field(grid, {32.0, 32.0}, 12.0);
    const auto mask = ff::burned_mask(ff::extract_contour(phi), grid);
    std::size_t agree = 0;
    std::size_t burned = 0;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const bool neg = phi.field(i, j) < 0.0;
            if (neg == (mask(i, j) == 1.0)) ++agree;
            if (neg) ++burned;
        }
    CHECK(burned > 0);
    CHECK(static_cast<double>(agree) / grid.cell_count() >= 0.98);
}

TEST_CASE("jaccard closed forms") {
    const ff::Grid grid = small_grid(20, 20, 1.0);
    const auto a = rect_mask(grid, 2, 12, 2, 12);

    CHECK(ff::jaccard(a, a) == 1.0);
    CHECK(ff::jaccard(a, rect_mask(grid, 13, 19, 2, 12)) == 0.0);

    // Shift by half the width: overlap 50, union 150.
    const auto b = rect_mask(grid, 7, 17, 2, 12);
    CHECK(ff::jaccard(a, b) == doctest::Approx(50.0 / 150.0).epsilon(1e-12));

    SUBCASE("two empty masks count as identical") {
        const ff::RasterImage zero(grid);
        CHECK(ff::jaccard(zero, zero) == 1.0);
        CHECK(ff::jaccard(a, zero) == 0.0);
    }

    SUBCASE("masks must share a grid") {
        const ff::RasterImage other(small_grid(21, 20, 1.0));
        CHECK_THROWS_AS(ff::jaccard(a, other), ff::ConfigError);
    }
}

TEST_CASE("symmetric difference closed forms") {
    const ff::Grid grid = small_grid(20, 20, 0.5);
    const auto a = rect_mask(grid, 0, 10, 0, 10);
    const auto b = rect_mask(grid, 10, 20, 0, 10);

    CHECK(ff::symmetric_difference_area(a, a) == 0.0);
    // Disjoint 100-cell masks at dx*dy = 0.25 m^2 per cell.
    CHECK(ff::symmetric_difference_area(a, b) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK_THROWS_AS(ff::symmetric_difference_area(a, ff::RasterImage(small_grid(8, 8, 1.0))),
                    ff::ConfigError);
}

TEST_CASE("jaccard and symmetric difference agree on random masks") {
    const ff::Grid grid = small_grid(16, 16, 0.5);
    std::mt19937 gen(123);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 50; ++trial) {
        ff::RasterImage a(grid);
        ff::RasterImage b(grid);
        for (std::size_t k = 0; k < a.pixels.size(); ++k) {
            a.pixels[k] = coin(gen) ? 1.0 : 0.0;
            b.pixels[k] = coin(gen) ? 1.0 : 0.0;
        }
        std::size_t inter = 0, uni = 0, sym = 0;
        for (std::size_t k = 0; k < a.pixels.size(); ++k) {
            const bool in_a = a.pixels[k] == 1.0, in_b = b.pixels[k] == 1.0;
            inter += in_a && in_b;
            uni += in_a || in_b;
            sym += in_a != in_b;
        }
        const double expected_j = uni == 0 ? 1.0 : double(inter) / double(uni);
        CHECK(ff::jaccard(a, b) == doctest::Approx(expected_j).epsilon(1e-12));
        CHECK(ff::symmetric_difference_area(a, b) ==
              doctest::Approx(sym * 0.25).epsilon(1e-12));
        CHECK(ff::jaccard(a, b) == doctest::Approx(ff::jaccard(b, a)).epsilon(1e-12));
        // jaccard == 1 exactly when the masks coincide.
        CHECK((ff::jaccard(a, b) == 1.0) == (a.pixels == b.pixels));
        CHECK((ff::symmetric_difference_area(a, b) == 0.0) == (a.pixels == b.pixels));
    }
}
