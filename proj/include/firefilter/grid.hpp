#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "firefilter/errors.hpp"

namespace firefilter {

using Vec2 = std::array<double, 2>;

/// Uniform cell-centered grid. `origin` is the world coordinate of the
/// center of cell (0, 0); cell (i, j) sits at origin + (i*dx, j*dy).
class Grid {
public:
    Grid() = default;

    Grid(int nx, int ny, double dx, double dy, Vec2 origin = {0.0, 0.0})
        : nx_(nx), ny_(ny), dx_(dx), dy_(dy), origin_(origin) {
        if (nx < 4 || ny < 4) throw ConfigError("grid: nx and ny must be >= 4");
        if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("grid: dx and dy must be > 0");
        if (!std::isfinite(origin[0]) || !std::isfinite(origin[1]))
            throw ConfigError("grid: origin must be finite");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    const Vec2& origin() const { return origin_; }
    std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * ny_; }

    double x(int i) const { return origin_[0] + i * dx_; }
    double y(int j) const { return origin_[1] + j * dy_; }
    Vec2 index_to_world(int i, int j) const { return {x(i), y(j)}; }

    /// Nearest cell to a world position (unclamped; may fall outside lattice).
    std::array<int, 2> world_to_index(double wx, double wy) const {
        return {static_cast<int>(std::llround((wx - origin_[0]) / dx_)),
                static_cast<int>(std::llround((wy - origin_[1]) / dy_))};
    }

    bool contains(int i, int j) const { return i >= 0 && i < nx_ && j >= 0 && j < ny_; }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    bool operator==(const Grid& other) const = default;

    // World-space bounds of the cell lattice including the half-cell skirt
    // around boundary centers (the footprint used for clipping/rasterizing).
    double x_min() const { return origin_[0] - 0.5 * dx_; }
    double x_max() const { return origin_[0] + (nx_ - 0.5) * dx_; }
    double y_min() const { return origin_[1] - 0.5 * dy_; }
    double y_max() const { return origin_[1] + (ny_ - 0.5) * dy_; }

private:
    int nx_ = 0;
    int ny_ = 0;
    double dx_ = 0.0;
    double dy_ = 0.0;
    Vec2 origin_{0.0, 0.0};
};

/// Dense per-cell scalar values, row-major ny x nx.
class ScalarField {
public:
    ScalarField() = default;

    explicit ScalarField(const Grid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.cell_count(), fill) {}

    ScalarField(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.cell_count())
            throw ConfigError("scalar field: value count does not match grid");
        ensure_finite("construction");
    }

    const Grid& grid() const { return grid_; }
    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
    double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double min_value() const {
        double m = values_.empty() ? 0.0 : values_[0];
        for (double v : values_) m = std::min(m, v);
        return m;
    }

    double max_value() const {
        double m = values_.empty() ? 0.0 : values_[0];
        for (double v : values_) m = std::max(m, v);
        return m;
    }

    void ensure_finite(const char* op) const {
        for (double v : values_)
            if (!std::isfinite(v)) throw NumericError(std::string("non-finite field value after ") + op);
    }

private:
    Grid grid_{};
    std::vector<double> values_;
};

}  // namespace firefilter
