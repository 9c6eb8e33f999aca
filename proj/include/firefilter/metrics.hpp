#pragma once

#include "firefilter/contour.hpp"

namespace firefilter {

/// Even-odd point-in-polygon fill at cell centers; nested polygons make holes.
RasterImage burned_mask(const FrontContour& front, const Grid& grid);

/// Intersection-over-union of two binary masks; 1 when both masks are empty.
double jaccard(const RasterImage& a, const RasterImage& b);

/// (|a\b| + |b\a|) * dx * dy in square meters.
double symmetric_difference_area(const RasterImage& a, const RasterImage& b);

}  // namespace firefilter
