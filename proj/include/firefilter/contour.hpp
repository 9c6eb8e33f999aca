#pragma once

#include <vector>

#include "firefilter/grid.hpp"
#include "firefilter/level_set.hpp"

namespace firefilter {

/// Closed fire-front polylines in world coordinates. The first vertex is not
/// repeated at the end; closure is implicit.
struct FrontContour {
    std::vector<Polygon> polylines;
    double time = 0.0;
};

/// Greyscale image on a grid, one value per cell in [0, 1].
struct RasterImage {
    Grid grid;
    std::vector<double> pixels;

    RasterImage() = default;
    explicit RasterImage(const Grid& g, double fill = 0.0) : grid(g), pixels(g.cell_count(), fill) {}
    double operator()(int i, int j) const { return pixels[grid.index(i, j)]; }
    double& operator()(int i, int j) { return pixels[grid.index(i, j)]; }
};

/// Marching-squares extraction of the zero level-set, vertices linearly
/// interpolated between cell centers. Saddle cells are resolved by the sign
/// of the cell-center average. A uniform-sign field yields an empty contour.
FrontContour extract_contour(const LevelSetField& phi);

/// Burns every cell crossed by a contour segment to 1 (one-cell-thick line).
/// Out-of-range segments are clipped to the grid footprint; an empty contour
/// yields an all-zero image.
RasterImage rasterize_contour(const FrontContour& contour, const Grid& grid);

/// Discrete Gaussian convolution, kernel truncated at ceil(3*sigma) and
/// normalized to sum 1, zero padding at the boundary. When `renormalize` is
/// set the output is rescaled so its max matches the input max.
RasterImage gaussian_blur(const RasterImage& image, double sigma, bool renormalize = true);

/// In-place separable Gaussian smoothing of an arbitrary value array
/// (shared by the blur above and by the solver's coherent process noise).
void gaussian_smooth(std::vector<double>& values, const Grid& grid, double sigma);

/// Shoelace area of one polygon (absolute value, world units squared).
double polygon_area(const Polygon& poly);

}  // namespace firefilter
