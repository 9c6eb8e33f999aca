#pragma once

#include <variant>
#include <vector>

#include "firefilter/grid.hpp"

namespace firefilter {

using Polygon = std::vector<Vec2>;

/// Level-set carrier. Sign convention: negative inside the burned region,
/// positive outside, zero on the front, so the outward normal is grad(phi)/|grad(phi)|.
struct LevelSetField {
    ScalarField field;
    double time = 0.0;
};

/// Exact signed distance to a circle of given center/radius.
/// Throws if the circle's zero level-set does not cross the grid interior.
LevelSetField signed_distance_circle(const Grid& grid, Vec2 center, double radius);

/// Signed distance to a polygon boundary (negative inside by even-odd rule).
LevelSetField signed_distance_polygon(const Grid& grid, const std::vector<Polygon>& polygons);

struct CircleSpec {
    Vec2 center{0.0, 0.0};
    double radius = 0.0;
};

/// Ignition geometry: either a circle spec or an explicit polygon set.
struct Ignition {
    std::variant<CircleSpec, std::vector<Polygon>> shape;
    LevelSetField signed_distance(const Grid& grid) const;
};

/// Cellwise weighted mean of level-set fields; weights are normalized
/// internally. All fields must share one grid and weights must not all be zero.
LevelSetField mean_field(const std::vector<LevelSetField>& fields, const std::vector<double>& weights);

/// Cellwise weighted variance of phi values (population form over normalized weights).
ScalarField variance_field(const std::vector<LevelSetField>& fields, const std::vector<double>& weights);

}  // namespace firefilter
