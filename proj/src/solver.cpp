#include "firefilter/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace firefilter {

namespace {

// Field copy with two ghost layers per side, filled by linear extrapolation
// of the two outermost interior cells. row(j) points at interior column 0;
// valid columns are [-2, nx+1]. Buffers are reused per thread across calls.
struct Padded {
    int nx = 0, ny = 0;
    std::vector<double> v;

    double* row(int j) { return v.data() + std::size_t(j + 2) * (nx + 4) + 2; }
    const double* row(int j) const { return v.data() + std::size_t(j + 2) * (nx + 4) + 2; }
};

void extrapolate_ghosts(Padded& p) {
    const int nx = p.nx, ny = p.ny;
    for (int j = 0; j < ny; ++j) {
        double* r = p.row(j);
        r[-1] = 2.0 * r[0] - r[1];
        r[-2] = 3.0 * r[0] - 2.0 * r[1];
        r[nx] = 2.0 * r[nx - 1] - r[nx - 2];
        r[nx + 1] = 3.0 * r[nx - 1] - 2.0 * r[nx - 2];
    }
    double* rm1 = p.row(-1);
    double* rm2 = p.row(-2);
    double* rn0 = p.row(ny);
    double* rn1 = p.row(ny + 1);
    const double* r0 = p.row(0);
    const double* r1 = p.row(1);
    const double* ra = p.row(ny - 1);
    const double* rb = p.row(ny - 2);
    for (int i = -2; i < nx + 2; ++i) {
        rm1[i] = 2.0 * r0[i] - r1[i];
        rm2[i] = 3.0 * r0[i] - 2.0 * r1[i];
        rn0[i] = 2.0 * ra[i] - rb[i];
        rn1[i] = 3.0 * ra[i] - 2.0 * rb[i];
    }
}

void fill_padded(const ScalarField& f, Padded& p) {
    p.nx = f.grid().nx();
    p.ny = f.grid().ny();
    p.v.resize(std::size_t(p.nx + 4) * (p.ny + 4));
    const std::vector<double>& src = f.values();
    for (int j = 0; j < p.ny; ++j)
        std::copy_n(src.data() + std::size_t(j) * p.nx, p.nx, p.row(j));
    extrapolate_ghosts(p);
}

// One extrapolated ghost layer only; enough for the 3-point reinit stencil.
void extrapolate_edge_ghosts(Padded& p) {
    const int nx = p.nx, ny = p.ny;
    for (int j = 0; j < ny; ++j) {
        double* r = p.row(j);
        r[-1] = 2.0 * r[0] - r[1];
        r[nx] = 2.0 * r[nx - 1] - r[nx - 2];
    }
    double* rm1 = p.row(-1);
    double* rn0 = p.row(ny);
    const double* r0 = p.row(0);
    const double* r1 = p.row(1);
    const double* ra = p.row(ny - 1);
    const double* rb = p.row(ny - 2);
    for (int i = 0; i < nx; ++i) {
        rm1[i] = 2.0 * r0[i] - r1[i];
        rn0[i] = 2.0 * ra[i] - rb[i];
    }
}

double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
}

// Sweeps the interior calling body(i, j, rm1, rc, rp1, dmx, dpx, dmy, dpy)
// with one-sided differences of the requested ENO order. Second differences
// are computed once per row and rolled down the sweep.
template <int Order, class Body>
void eno_sweep(const Padded& p, double dx, double dy, Body&& body) {
    const int nx = p.nx, ny = p.ny;
    const double inv_dx = 1.0 / dx, inv_dy = 1.0 / dy;
    std::vector<double> d2x, ya, yb, yc;
    if constexpr (Order == 2) {
        d2x.resize(std::size_t(nx) + 2);
        ya.resize(nx);
        yb.resize(nx);
        yc.resize(nx);
        const double* rm2 = p.row(-2);
        const double* rm1 = p.row(-1);
        const double* r0 = p.row(0);
        const double* r1 = p.row(1);
        for (int i = 0; i < nx; ++i) {
            ya[i] = rm2[i] - 2.0 * rm1[i] + r0[i];
            yb[i] = rm1[i] - 2.0 * r0[i] + r1[i];
        }
    }
    for (int j = 0; j < ny; ++j) {
        const double* rm1 = p.row(j - 1);
        const double* rc = p.row(j);
        const double* rp1 = p.row(j + 1);
        if constexpr (Order == 2) {
            const double* rp2 = p.row(j + 2);
            for (int i = 0; i < nx; ++i) yc[i] = rc[i] - 2.0 * rp1[i] + rp2[i];
            for (int i = -1; i <= nx; ++i) d2x[i + 1] = rc[i - 1] - 2.0 * rc[i] + rc[i + 1];
        }
        for (int i = 0; i < nx; ++i) {
            double dmx = rc[i] - rc[i - 1];
            double dpx = rc[i + 1] - rc[i];
            double dmy = rc[i] - rm1[i];
            double dpy = rp1[i] - rc[i];
            if constexpr (Order == 2) {
                dmx += 0.5 * minmod(d2x[i], d2x[i + 1]);
                dpx -= 0.5 * minmod(d2x[i + 1], d2x[i + 2]);
                dmy += 0.5 * minmod(ya[i], yb[i]);
                dpy -= 0.5 * minmod(yb[i], yc[i]);
            }
            body(i, j, rm1, rc, rp1, dmx * inv_dx, dpx * inv_dx, dmy * inv_dy, dpy * inv_dy);
        }
        if constexpr (Order == 2) {
            std::swap(ya, yb);
            std::swap(yb, yc);
        }
    }
}

template <int Order>
void godunov_magnitude(const Padded& p, ScalarField& out) {
    double* dst = out.values().data();
    const int nx = p.nx;
    eno_sweep<Order>(p, out.grid().dx(), out.grid().dy(),
                     [&](int i, int j, const double*, const double*, const double*, double dmx,
                         double dpx, double dmy, double dpy) {
                         const double ax = std::max(dmx, 0.0), bx = std::min(dpx, 0.0);
                         const double ay = std::max(dmy, 0.0), by = std::min(dpy, 0.0);
                         dst[std::size_t(j) * nx + i] =
                             std::sqrt(ax * ax + bx * bx + ay * ay + by * by);
                     });
}

double max_front_speed(const RosParams& params, Vec2 wind) {
    const double w = std::hypot(wind[0], wind[1]);
    return params.beta + params.gamma * std::max(0.0, w);
}

}  // namespace

void validate_solver_config(const SolverConfig& config) {
    if (!(config.cfl > 0.0) || !(config.cfl <= 1.0))
        throw ConfigError("solver config: cfl must be in (0, 1]");
    if (config.eno_order != 1 && config.eno_order != 2)
        throw ConfigError("solver config: eno_order must be 1 or 2");
    if (config.reinit_every < 0)
        throw ConfigError("solver config: reinit_every must be >= 0");
    if (config.reinit_every > 0 && config.reinit_iterations < 1)
        throw ConfigError("solver config: reinit_iterations must be >= 1 when reinit_every > 0");
    if (!(config.noise_sigma >= 0.0) || !std::isfinite(config.noise_sigma))
        throw ConfigError("solver config: noise_sigma must be finite and >= 0");
}

ScalarField grad_mag_upwind(const LevelSetField& phi, int order) {
    if (order != 1 && order != 2) throw ConfigError("grad_mag_upwind: order must be 1 or 2");
    phi.field.ensure_finite("grad_mag_upwind input");
    thread_local Padded scratch;
    fill_padded(phi.field, scratch);
    ScalarField out(phi.field.grid(), 0.0);
    if (order == 1)
        godunov_magnitude<1>(scratch, out);
    else
        godunov_magnitude<2>(scratch, out);
    return out;
}

namespace {

// Sign-aware Godunov magnitude at one cell; `sgn` decides the upwind side.
// rm1/rc/rp1 are the rows at j-1, j, j+1.
inline double godunov_signed(const double* rm1, const double* rc, const double* rp1, int i,
                             double inv_dx, double inv_dy, double sgn) {
    if (sgn == 0.0) return 1.0;  // sign 0: the reinit update vanishes regardless
    const double c = rc[i];
    const double dmx = (c - rc[i - 1]) * inv_dx;
    const double dpx = (rc[i + 1] - c) * inv_dx;
    const double dmy = (c - rm1[i]) * inv_dy;
    const double dpy = (rp1[i] - c) * inv_dy;
    double gx2, gy2;
    if (sgn > 0.0) {
        const double a = std::max(dmx, 0.0), b = std::min(dpx, 0.0);
        const double cc = std::max(dmy, 0.0), d = std::min(dpy, 0.0);
        gx2 = std::max(a * a, b * b);
        gy2 = std::max(cc * cc, d * d);
    } else {
        const double a = std::min(dmx, 0.0), b = std::max(dpx, 0.0);
        const double cc = std::min(dmy, 0.0), d = std::max(dpy, 0.0);
        gx2 = std::max(a * a, b * b);
        gy2 = std::max(cc * cc, d * d);
    }
    return std::sqrt(gx2 + gy2);
}

}  // namespace

ScalarField grad_mag_reinit(const LevelSetField& phi) {
    phi.field.ensure_finite("grad_mag_reinit input");
    const Grid& g = phi.field.grid();
    thread_local Padded scratch;
    fill_padded(phi.field, scratch);
    ScalarField out(g, 0.0);
    const int nx = g.nx(), ny = g.ny();
    const double inv_dx = 1.0 / g.dx(), inv_dy = 1.0 / g.dy();
    for (int j = 0; j < ny; ++j) {
        const double* rm1 = scratch.row(j - 1);
        const double* rc = scratch.row(j);
        const double* rp1 = scratch.row(j + 1);
        for (int i = 0; i < nx; ++i)
            out(i, j) = godunov_signed(rm1, rc, rp1, i, inv_dx, inv_dy, phi.field(i, j));
    }
    return out;
}

double stable_dt(const LevelSetField& phi, const RosParams& params, Vec2 wind,
                 const SolverConfig& config, double remaining) {
    validate_solver_config(config);
    if (!(remaining >= 0.0) || !std::isfinite(remaining))
        throw ConfigError("stable_dt: remaining budget must be finite and >= 0");
    const double u_max = max_front_speed(params, wind);
    if (!(u_max > 0.0)) return remaining;
    const Grid& g = phi.field.grid();
    const double bound = config.cfl * std::min(g.dx(), g.dy()) / u_max;
    return std::min(bound, remaining);
}

LevelSetField step(const LevelSetField& phi, double dt, const RosParams& params, Vec2 wind,
                   const SolverConfig& config, RngStream& rng) {
    validate_solver_config(config);
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("step: dt must be finite and >= 0");
    if (dt == 0.0) return phi;

    const Grid& g = phi.field.grid();
    const double u_max = max_front_speed(params, wind);
    if (u_max > 0.0) {
        const double bound = config.cfl * std::min(g.dx(), g.dy()) / u_max;
        if (dt > bound * (1.0 + 1e-9))
            throw NumericError("step: dt " + std::to_string(dt) + " exceeds the CFL bound " +
                               std::to_string(bound));
    }

    phi.field.ensure_finite("step input");
    thread_local Padded scratch;
    fill_padded(phi.field, scratch);
    const double inv2dx = 0.5 / g.dx(), inv2dy = 0.5 / g.dy();

    LevelSetField out = phi;
    double* dst = out.field.values().data();
    const int nx = g.nx();
    const double wx = wind[0], wy = wind[1];
    const double beta = params.beta, gamma = params.gamma;
    const bool clamp = config.clamp_upwind;
    auto body = [&](int i, int j, const double* rm1, const double* rc, const double* rp1,
                    double dmx, double dpx, double dmy, double dpy) {
        const double gx = (rc[i + 1] - rc[i - 1]) * inv2dx;
        const double gy = (rp1[i] - rm1[i]) * inv2dy;
        const double norm = std::sqrt(gx * gx + gy * gy);
        double u;
        if (norm < 1e-9) {
            u = beta;
        } else {
            double omega = wx * (gx / norm) + wy * (gy / norm);
            if (clamp) omega = std::max(0.0, omega);
            u = beta + gamma * omega;
        }
        const double ax = std::max(dmx, 0.0), bx = std::min(dpx, 0.0);
        const double ay = std::max(dmy, 0.0), by = std::min(dpy, 0.0);
        const double grad = std::sqrt(ax * ax + bx * bx + ay * ay + by * by);
        dst[std::size_t(j) * nx + i] = rc[i] - dt * u * grad;
    };
    if (config.eno_order == 1)
        eno_sweep<1>(scratch, g.dx(), g.dy(), body);
    else
        eno_sweep<2>(scratch, g.dx(), g.dy(), body);

    if (config.noise_sigma > 0.0) {
        std::vector<double> noise(g.cell_count());
        for (double& n : noise) n = rng.normal(0.0, config.noise_sigma);
        gaussian_smooth(noise, g, 1.0);
        auto& vals = out.field.values();
        for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += noise[k];
    }

    out.field.ensure_finite("step");
    out.time = phi.time + dt;
    return out;
}

LevelSetField reinitialize(const LevelSetField& phi, int iterations) {
    if (iterations < 0) throw ConfigError("reinitialize: iterations must be >= 0");
    phi.field.ensure_finite("reinitialize input");
    const Grid& g = phi.field.grid();
    if (!(phi.field.min_value() < 0.0 && phi.field.max_value() > 0.0))
        throw ConfigError("reinitialize: field has no zero crossing");

    // Smoothed sign of the input field, frozen across iterations so the
    // upwind direction cannot flip while the field relaxes.
    const std::size_t n = g.cell_count();
    std::vector<double> smooth_sign(n);
    const double dx2 = g.dx() * g.dx();
    const std::vector<double>& v0 = phi.field.values();
    for (std::size_t k = 0; k < n; ++k) smooth_sign[k] = v0[k] / std::sqrt(v0[k] * v0[k] + dx2);

    const double dtau = 0.5 * std::min(g.dx(), g.dy());
    const int nx = g.nx(), ny = g.ny();
    const double inv_dx = 1.0 / g.dx(), inv_dy = 1.0 / g.dy();

    // Jacobi iteration ping-pongs between two padded buffers; ghost layers
    // are re-extrapolated from the freshly written interior each pass.
    thread_local Padded buf_a, buf_b;
    fill_padded(phi.field, buf_a);
    buf_b.nx = nx;
    buf_b.ny = ny;
    buf_b.v.resize(buf_a.v.size());
    Padded* a = &buf_a;
    Padded* b = &buf_b;
    for (int it = 0; it < iterations; ++it) {
        for (int j = 0; j < ny; ++j) {
            const double* rm1 = a->row(j - 1);
            const double* rc = a->row(j);
            const double* rp1 = a->row(j + 1);
            double* w = b->row(j);
            const double* sign_row = v0.data() + std::size_t(j) * nx;
            const double* smooth_row = smooth_sign.data() + std::size_t(j) * nx;
            for (int i = 0; i < nx; ++i) {
                const double grad = godunov_signed(rm1, rc, rp1, i, inv_dx, inv_dy, sign_row[i]);
                w[i] = rc[i] + dtau * smooth_row[i] * (1.0 - grad);
            }
        }
        extrapolate_edge_ghosts(*b);
        std::swap(a, b);
    }

    LevelSetField out = phi;
    double* dst = out.field.values().data();
    for (int j = 0; j < ny; ++j) std::copy_n(a->row(j), nx, dst + std::size_t(j) * nx);
    out.field.ensure_finite("reinitialize");
    return out;
}

bool front_touches_border(const LevelSetField& phi, int band) {
    if (band < 0) throw ConfigError("front_touches_border: band must be >= 0");
    const ScalarField& f = phi.field;
    const Grid& g = f.grid();
    const int nx = g.nx(), ny = g.ny();
    auto in_band = [&](int i, int j) {
        return i < band || j < band || i >= nx - band || j >= ny - band;
    };
    auto cell_trips = [&](int i, int j) {
        const double a = f(i, j);
        if (a == 0.0 && in_band(i, j)) return true;
        if (i + 1 < nx && (in_band(i, j) || in_band(i + 1, j)) && a * f(i + 1, j) < 0.0)
            return true;
        if (j + 1 < ny && (in_band(i, j) || in_band(i, j + 1)) && a * f(i, j + 1) < 0.0)
            return true;
        return false;
    };
    // Restrict the scan to cells whose checks can involve an in-band
    // endpoint: band rows/columns plus the interior row and column adjacent
    // to the far band edge.
    for (int j = 0; j < ny; ++j) {
        if (j <= band || j >= ny - band - 1) {
            for (int i = 0; i < nx; ++i)
                if (cell_trips(i, j)) return true;
        } else {
            for (int i = 0; i <= band && i < nx; ++i)
                if (cell_trips(i, j)) return true;
            for (int i = std::max(0, nx - band - 1); i < nx; ++i)
                if (cell_trips(i, j)) return true;
        }
    }
    return false;
}

LevelSetField propagate(const LevelSetField& phi, double t_end, const RosParams& params,
                        const WindSeries& wind_series, const SolverConfig& config, RngStream& rng,
                        PropagateStats* stats) {
    validate_solver_config(config);
    validate_wind_series(wind_series);
    if (!std::isfinite(t_end)) throw ConfigError("propagate: t_end must be finite");
    if (t_end < phi.time) throw ConfigError("propagate: t_end precedes the field's time");

    LevelSetField cur = phi;
    if (front_touches_border(cur))
        throw NumericError("propagate: domain too small (front within 2 cells of the border)");

    const double eps = 1e-9 * std::max(1.0, std::abs(t_end));
    long steps = 0, reinits = 0;
    while (cur.time < t_end - eps) {
        const Vec2 wind = wind_at(wind_series, cur.time);
        // Hold each step inside one wind sample so the wind it sees is constant.
        double seg_end = t_end;
        const auto& samples = wind_series.samples;
        auto it = std::upper_bound(
            samples.begin(), samples.end(), cur.time + eps,
            [](double value, const WindSample& s) { return value < s.time; });
        if (it != samples.end()) seg_end = std::min(seg_end, it->time);

        const double dt = stable_dt(cur, params, wind, config, seg_end - cur.time);
        cur = step(cur, dt, params, wind, config, rng);
        ++steps;
        if (config.reinit_every > 0 && steps % config.reinit_every == 0) {
            cur = reinitialize(cur, config.reinit_iterations);
            ++reinits;
        }
        if (front_touches_border(cur))
            throw NumericError("propagate: domain too small (front within 2 cells of the border)");
    }
    cur.time = t_end;
    if (stats) {
        stats->steps = steps;
        stats->reinits = reinits;
    }
    return cur;
}

}  // namespace firefilter
