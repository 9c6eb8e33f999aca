#include "firefilter/metrics.hpp"

#include <cmath>

namespace firefilter {

namespace {

// Even-odd crossing count of a horizontal ray from (px, py) toward +x.
bool point_in_polygons(const std::vector<Polygon>& polys, double px, double py) {
    bool inside = false;
    for (const Polygon& poly : polys) {
        const std::size_t n = poly.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Vec2& a = poly[k];
            const Vec2& b = poly[(k + 1) % n];
            if ((a[1] > py) != (b[1] > py)) {
                const double x_cross = a[0] + (py - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if (px < x_cross) inside = !inside;
            }
        }
    }
    return inside;
}

void require_same_grid(const RasterImage& a, const RasterImage& b, const char* op) {
    if (!(a.grid == b.grid)) throw ConfigError(std::string(op) + ": masks live on different grids");
}

}  // namespace

RasterImage burned_mask(const FrontContour& front, const Grid& grid) {
    RasterImage mask(grid, 0.0);
    if (front.polylines.empty()) return mask;
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i)
            if (point_in_polygons(front.polylines, grid.x(i), grid.y(j))) mask(i, j) = 1.0;
    return mask;
}

double jaccard(const RasterImage& a, const RasterImage& b) {
    require_same_grid(a, b, "jaccard");
    long both = 0, either = 0;
    for (std::size_t k = 0; k < a.pixels.size(); ++k) {
        const bool in_a = a.pixels[k] != 0.0;
        const bool in_b = b.pixels[k] != 0.0;
        if (in_a && in_b) ++both;
        if (in_a || in_b) ++either;
    }
    if (either == 0) return 1.0;
    return static_cast<double>(both) / static_cast<double>(either);
}

double symmetric_difference_area(const RasterImage& a, const RasterImage& b) {
    require_same_grid(a, b, "symmetric_difference_area");
    long mismatched = 0;
    for (std::size_t k = 0; k < a.pixels.size(); ++k) {
        const bool in_a = a.pixels[k] != 0.0;
        const bool in_b = b.pixels[k] != 0.0;
        if (in_a != in_b) ++mismatched;
    }
    return mismatched * a.grid.dx() * a.grid.dy();
}

}  // namespace firefilter
