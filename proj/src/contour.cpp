#include "firefilter/contour.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <utility>

namespace firefilter {

namespace {

// Marching-squares edge identifiers. A horizontal edge H(i,j) joins cell
// centers (i,j)-(i+1,j); a vertical edge V(i,j) joins (i,j)-(i,j+1).
std::uint64_t h_edge(int i, int j) { return (std::uint64_t(j) << 31) | std::uint64_t(i); }
std::uint64_t v_edge(int i, int j) {
    return (1ull << 62) | (std::uint64_t(j) << 31) | std::uint64_t(i);
}

struct SegmentSoup {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> segments;
    std::unordered_map<std::uint64_t, Vec2> vertices;
};

void cut_h(const ScalarField& f, int i, int j, SegmentSoup& soup) {
    const std::uint64_t key = h_edge(i, j);
    if (soup.vertices.count(key)) return;
    const double a = f(i, j), b = f(i + 1, j);
    const double t = a / (a - b);
    soup.vertices[key] = {f.grid().x(i) + t * f.grid().dx(), f.grid().y(j)};
}

void cut_v(const ScalarField& f, int i, int j, SegmentSoup& soup) {
    const std::uint64_t key = v_edge(i, j);
    if (soup.vertices.count(key)) return;
    const double a = f(i, j), b = f(i, j + 1);
    const double t = a / (a - b);
    soup.vertices[key] = {f.grid().x(i), f.grid().y(j) + t * f.grid().dy()};
}

}  // namespace

FrontContour extract_contour(const LevelSetField& phi) {
    const ScalarField& f = phi.field;
    f.ensure_finite("extract_contour input");
    const Grid& g = f.grid();

    SegmentSoup soup;
    for (int j = 0; j + 1 < g.ny(); ++j) {
        for (int i = 0; i + 1 < g.nx(); ++i) {
            const double v00 = f(i, j), v10 = f(i + 1, j);
            const double v11 = f(i + 1, j + 1), v01 = f(i, j + 1);
            const int c = (v00 < 0.0 ? 1 : 0) | (v10 < 0.0 ? 2 : 0) | (v11 < 0.0 ? 4 : 0) |
                          (v01 < 0.0 ? 8 : 0);
            if (c == 0 || c == 15) continue;

            const std::uint64_t B = h_edge(i, j), T = h_edge(i, j + 1);
            const std::uint64_t L = v_edge(i, j), R = v_edge(i + 1, j);
            auto emit = [&](std::uint64_t a, std::uint64_t b) { soup.segments.emplace_back(a, b); };

            switch (c) {
                case 1: case 14: cut_v(f, i, j, soup); cut_h(f, i, j, soup); emit(L, B); break;
                case 2: case 13: cut_h(f, i, j, soup); cut_v(f, i + 1, j, soup); emit(B, R); break;
                case 3: case 12: cut_v(f, i, j, soup); cut_v(f, i + 1, j, soup); emit(L, R); break;
                case 4: case 11: cut_v(f, i + 1, j, soup); cut_h(f, i, j + 1, soup); emit(R, T); break;
                case 6: case 9:  cut_h(f, i, j, soup); cut_h(f, i, j + 1, soup); emit(B, T); break;
                case 7: case 8:  cut_v(f, i, j, soup); cut_h(f, i, j + 1, soup); emit(L, T); break;
                case 5: {  // saddle: v00 and v11 inside
                    cut_h(f, i, j, soup); cut_v(f, i + 1, j, soup);
                    cut_v(f, i, j, soup); cut_h(f, i, j + 1, soup);
                    if (0.25 * (v00 + v10 + v11 + v01) < 0.0) { emit(B, R); emit(L, T); }
                    else { emit(L, B); emit(R, T); }
                    break;
                }
                case 10: {  // saddle: v10 and v01 inside
                    cut_h(f, i, j, soup); cut_v(f, i + 1, j, soup);
                    cut_v(f, i, j, soup); cut_h(f, i, j + 1, soup);
                    if (0.25 * (v00 + v10 + v11 + v01) < 0.0) { emit(L, B); emit(R, T); }
                    else { emit(B, R); emit(L, T); }
                    break;
                }
                default: break;
            }
        }
    }

    // Stitch the segment soup into chains. Every edge vertex touches at most
    // two segments; boundary-exiting chains stay open and close implicitly.
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> incident;
    incident.reserve(soup.segments.size() * 2);
    for (std::size_t s = 0; s < soup.segments.size(); ++s) {
        incident[soup.segments[s].first].push_back(s);
        incident[soup.segments[s].second].push_back(s);
    }

    FrontContour contour;
    contour.time = phi.time;
    std::vector<bool> used(soup.segments.size(), false);
    const double merge_tol = 1e-12 * (g.dx() + g.dy());

    for (std::size_t s0 = 0; s0 < soup.segments.size(); ++s0) {
        if (used[s0]) continue;
        used[s0] = true;
        std::vector<std::uint64_t> chain{soup.segments[s0].first, soup.segments[s0].second};

        for (int dir = 0; dir < 2; ++dir) {
            while (true) {
                const std::uint64_t tip = dir == 0 ? chain.back() : chain.front();
                std::size_t next = SIZE_MAX;
                for (std::size_t s : incident[tip])
                    if (!used[s]) { next = s; break; }
                if (next == SIZE_MAX) break;
                used[next] = true;
                const auto& seg = soup.segments[next];
                const std::uint64_t other = seg.first == tip ? seg.second : seg.first;
                if (dir == 0) chain.push_back(other);
                else chain.insert(chain.begin(), other);
                if (chain.front() == chain.back()) break;
            }
            if (chain.front() == chain.back()) break;
        }

        const bool closed = chain.front() == chain.back();
        if (closed) chain.pop_back();

        Polygon poly;
        poly.reserve(chain.size());
        for (std::uint64_t key : chain) {
            const Vec2 p = soup.vertices.at(key);
            if (!poly.empty() && std::abs(p[0] - poly.back()[0]) <= merge_tol &&
                std::abs(p[1] - poly.back()[1]) <= merge_tol)
                continue;
            poly.push_back(p);
        }
        while (poly.size() > 1 && std::abs(poly.front()[0] - poly.back()[0]) <= merge_tol &&
               std::abs(poly.front()[1] - poly.back()[1]) <= merge_tol)
            poly.pop_back();
        if (poly.size() >= 3) contour.polylines.push_back(std::move(poly));
    }
    return contour;
}

namespace {

// Liang-Barsky clip of p0-p1 against [xlo,xhi]x[ylo,yhi]; false if fully outside.
bool clip_segment(Vec2& p0, Vec2& p1, double xlo, double xhi, double ylo, double yhi) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = p1[0] - p0[0], dy = p1[1] - p0[1];
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {p0[0] - xlo, xhi - p0[0], p0[1] - ylo, yhi - p0[1]};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0) return false;
        } else {
            const double r = q[k] / p[k];
            if (p[k] < 0.0) {
                if (r > t1) return false;
                if (r > t0) t0 = r;
            } else {
                if (r < t0) return false;
                if (r < t1) t1 = r;
            }
        }
    }
    const Vec2 a{p0[0] + t0 * dx, p0[1] + t0 * dy};
    const Vec2 b{p0[0] + t1 * dx, p0[1] + t1 * dy};
    p0 = a;
    p1 = b;
    return true;
}

}  // namespace

RasterImage rasterize_contour(const FrontContour& contour, const Grid& grid) {
    RasterImage image(grid, 0.0);
    const double xlo = grid.x_min(), xhi = grid.x_max();
    const double ylo = grid.y_min(), yhi = grid.y_max();

    auto cell_of = [&](double w, double lo, double step, int count) {
        int c = static_cast<int>(std::floor((w - lo) / step));
        return std::max(0, std::min(count - 1, c));
    };

    for (const Polygon& poly : contour.polylines) {
        const std::size_t n = poly.size();
        for (std::size_t k = 0; k < n; ++k) {
            Vec2 p0 = poly[k];
            Vec2 p1 = poly[(k + 1) % n];
            if (!clip_segment(p0, p1, xlo, xhi, ylo, yhi)) continue;

            int i = cell_of(p0[0], xlo, grid.dx(), grid.nx());
            int j = cell_of(p0[1], ylo, grid.dy(), grid.ny());
            const int ie = cell_of(p1[0], xlo, grid.dx(), grid.nx());
            const int je = cell_of(p1[1], ylo, grid.dy(), grid.ny());
            image(i, j) = 1.0;

            const double dx = p1[0] - p0[0], dy = p1[1] - p0[1];
            const int step_i = dx > 0.0 ? 1 : -1;
            const int step_j = dy > 0.0 ? 1 : -1;
            // Parametric distance to the next vertical/horizontal cell boundary.
            double t_max_x, t_delta_x;
            if (dx == 0.0) {
                t_max_x = std::numeric_limits<double>::infinity();
                t_delta_x = std::numeric_limits<double>::infinity();
            } else {
                const double next_bx = xlo + (i + (step_i > 0 ? 1 : 0)) * grid.dx();
                t_max_x = (next_bx - p0[0]) / dx;
                t_delta_x = grid.dx() / std::abs(dx);
            }
            double t_max_y, t_delta_y;
            if (dy == 0.0) {
                t_max_y = std::numeric_limits<double>::infinity();
                t_delta_y = std::numeric_limits<double>::infinity();
            } else {
                const double next_by = ylo + (j + (step_j > 0 ? 1 : 0)) * grid.dy();
                t_max_y = (next_by - p0[1]) / dy;
                t_delta_y = grid.dy() / std::abs(dy);
            }

            const long max_iters = static_cast<long>(grid.nx()) + grid.ny() + 4;
            for (long iter = 0; iter < max_iters; ++iter) {
                if (i == ie && j == je) break;
                if (t_max_x <= t_max_y) {
                    if (t_max_x > 1.0) break;
                    i += step_i;
                    t_max_x += t_delta_x;
                } else {
                    if (t_max_y > 1.0) break;
                    j += step_j;
                    t_max_y += t_delta_y;
                }
                if (!grid.contains(i, j)) break;
                image(i, j) = 1.0;
            }
            image(ie, je) = 1.0;
        }
    }
    return image;
}

void gaussian_smooth(std::vector<double>& values, const Grid& grid, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian_smooth: sigma must be > 0");
    const int h = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * h + 1);
    double sum = 0.0;
    for (int k = -h; k <= h; ++k) {
        kernel[k + h] = std::exp(-0.5 * (k * k) / (sigma * sigma));
        sum += kernel[k + h];
    }
    for (double& w : kernel) w /= sum;

    const int nx = grid.nx(), ny = grid.ny();
    std::vector<double> tmp(values.size(), 0.0);
    // Horizontal pass, zero padding outside the lattice.
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double acc = 0.0;
            const int klo = std::max(-h, -i), khi = std::min(h, nx - 1 - i);
            for (int k = klo; k <= khi; ++k) acc += kernel[k + h] * values[grid.index(i + k, j)];
            tmp[grid.index(i, j)] = acc;
        }
    }
    // Vertical pass.
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double acc = 0.0;
            const int klo = std::max(-h, -j), khi = std::min(h, ny - 1 - j);
            for (int k = klo; k <= khi; ++k) acc += kernel[k + h] * tmp[grid.index(i, j + k)];
            values[grid.index(i, j)] = acc;
        }
    }
}

RasterImage gaussian_blur(const RasterImage& image, double sigma, bool renormalize) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian_blur: sigma must be > 0");
    RasterImage out = image;
    double max_in = 0.0;
    for (double v : image.pixels) max_in = std::max(max_in, v);
    gaussian_smooth(out.pixels, out.grid, sigma);
    if (renormalize) {
        double max_out = 0.0;
        for (double v : out.pixels) max_out = std::max(max_out, v);
        if (max_out > 0.0) {
            const double scale = max_in / max_out;
            for (double& v : out.pixels) v *= scale;
        }
    }
    return out;
}

double polygon_area(const Polygon& poly) {
    double twice = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2& a = poly[k];
        const Vec2& b = poly[(k + 1) % n];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    return 0.5 * std::abs(twice);
}

}  // namespace firefilter
