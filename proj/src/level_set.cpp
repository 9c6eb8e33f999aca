#include "firefilter/level_set.hpp"

#include <cmath>
#include <limits>

namespace firefilter {

LevelSetField signed_distance_circle(const Grid& grid, Vec2 center, double radius) {
    if (!(radius > 0.0)) throw ConfigError("signed_distance_circle: radius must be > 0");
    ScalarField field(grid);
    for (int j = 0; j < grid.ny(); ++j) {
        const double py = grid.y(j);
        for (int i = 0; i < grid.nx(); ++i) {
            const double px = grid.x(i);
            field(i, j) = std::hypot(px - center[0], py - center[1]) - radius;
        }
    }
    if (!(field.min_value() < 0.0 && field.max_value() > 0.0))
        throw ConfigError("signed_distance_circle: circle does not cross the grid interior");
    return {std::move(field), 0.0};
}

namespace {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const double abx = b[0] - a[0];
    const double aby = b[1] - a[1];
    const double len2 = abx * abx + aby * aby;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2;
        t = std::max(0.0, std::min(1.0, t));
    }
    return std::hypot(p[0] - (a[0] + t * abx), p[1] - (a[1] + t * aby));
}

bool point_in_polygons_even_odd(Vec2 p, const std::vector<Polygon>& polygons) {
    bool inside = false;
    for (const Polygon& poly : polygons) {
        const std::size_t n = poly.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Vec2& a = poly[k];
            const Vec2& b = poly[(k + 1) % n];
            if ((a[1] <= p[1]) != (b[1] <= p[1])) {
                const double xc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if (p[0] < xc) inside = !inside;
            }
        }
    }
    return inside;
}

}  // namespace

LevelSetField signed_distance_polygon(const Grid& grid, const std::vector<Polygon>& polygons) {
    if (polygons.empty()) throw ConfigError("signed_distance_polygon: no polygons");
    for (const Polygon& poly : polygons)
        if (poly.size() < 3) throw ConfigError("signed_distance_polygon: polygon with < 3 vertices");

    ScalarField field(grid);
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            const Vec2 p = grid.index_to_world(i, j);
            double d = std::numeric_limits<double>::infinity();
            for (const Polygon& poly : polygons) {
                const std::size_t n = poly.size();
                for (std::size_t k = 0; k < n; ++k)
                    d = std::min(d, point_segment_distance(p, poly[k], poly[(k + 1) % n]));
            }
            field(i, j) = point_in_polygons_even_odd(p, polygons) ? -d : d;
        }
    }
    if (!(field.min_value() < 0.0 && field.max_value() > 0.0))
        throw ConfigError("signed_distance_polygon: front does not cross the grid interior");
    return {std::move(field), 0.0};
}

LevelSetField Ignition::signed_distance(const Grid& grid) const {
    if (std::holds_alternative<CircleSpec>(shape)) {
        const auto& c = std::get<CircleSpec>(shape);
        return signed_distance_circle(grid, c.center, c.radius);
    }
    return signed_distance_polygon(grid, std::get<std::vector<Polygon>>(shape));
}

namespace {

std::vector<double> normalized_weights(const std::vector<LevelSetField>& fields,
                                       const std::vector<double>& weights) {
    if (fields.empty()) throw ConfigError("mean_field: empty field list");
    if (fields.size() != weights.size()) throw ConfigError("mean_field: field/weight count mismatch");
    for (const auto& f : fields)
        if (!(f.field.grid() == fields.front().field.grid()))
            throw ConfigError("mean_field: fields on mismatched grids");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("mean_field: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("mean_field: weights sum to zero");
    std::vector<double> norm(weights);
    for (double& w : norm) w /= total;
    return norm;
}

}  // namespace

LevelSetField mean_field(const std::vector<LevelSetField>& fields, const std::vector<double>& weights) {
    const std::vector<double> w = normalized_weights(fields, weights);
    ScalarField mean(fields.front().field.grid());
    auto& out = mean.values();
    for (std::size_t k = 0; k < fields.size(); ++k) {
        const auto& vals = fields[k].field.values();
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[k] * vals[c];
    }
    mean.ensure_finite("mean_field");
    return {std::move(mean), fields.front().time};
}

ScalarField variance_field(const std::vector<LevelSetField>& fields, const std::vector<double>& weights) {
    const std::vector<double> w = normalized_weights(fields, weights);
    const LevelSetField mean = mean_field(fields, weights);
    ScalarField var(fields.front().field.grid());
    auto& out = var.values();
    const auto& mu = mean.field.values();
    for (std::size_t k = 0; k < fields.size(); ++k) {
        const auto& vals = fields[k].field.values();
        for (std::size_t c = 0; c < out.size(); ++c) {
            const double d = vals[c] - mu[c];
            out[c] += w[k] * d * d;
        }
    }
    var.ensure_finite("variance_field");
    return var;
}

}  // namespace firefilter
