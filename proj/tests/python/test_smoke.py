"""Smoke tests for the firefilter extension module."""

import math

import pytest

import firefilter as ff


def circle_polylines(sdf):
    return ff.extract_contour(sdf)


def test_module_surface():
    assert ff.__version__ == "0.1.0"
    grid = ff.Grid(64, 64, 0.5, 0.5)
    assert (grid.nx, grid.ny, grid.dx, grid.dy) == (64, 64, 0.5, 0.5)


def test_signed_distance_and_contour():
    grid = ff.Grid(64, 64, 0.5, 0.5)
    phi = ff.signed_distance_circle(grid, (16.0, 16.0), 6.0)
    assert phi.time == 0.0
    assert len(phi.values) == 64 * 64
    polylines = circle_polylines(phi)
    assert len(polylines) == 1
    area = sum(ff.polygon_area(p) for p in polylines)
    assert area == pytest.approx(math.pi * 36.0, rel=0.05)


def test_propagate_circle_growth():
    grid = ff.Grid(120, 120, 0.5, 0.5)
    phi = ff.signed_distance_circle(grid, (30.0, 30.0), 5.0)
    moved = ff.propagate(phi, 10.0, ff.RosParams(0.5, 0.0), [(0.0, 0.0, 0.0)])
    assert moved.time == 10.0
    for poly in circle_polylines(moved):
        for x, y in poly:
            assert math.hypot(x - 30.0, y - 30.0) == pytest.approx(10.0, abs=1.0)


def test_jaccard_fronts_self():
    grid = ff.Grid(64, 64, 0.5, 0.5)
    front = circle_polylines(ff.signed_distance_circle(grid, (16.0, 16.0), 5.0))
    assert ff.jaccard_fronts(front, front, grid) == 1.0


def test_pf_run_round_trip():
    grid = ff.Grid(96, 64, 0.5, 0.5)
    ignition = ff.Ignition.circle((12.0, 16.0), 3.0)
    wind = [(float(t), 1.5, 0.0) for t in range(21)]

    truth = ignition.signed_distance(grid)
    observations = []
    for t_obs in (10.0, 20.0):
        truth = ff.propagate(truth, t_obs, ff.RosParams(0.1, 0.1), wind)
        observations.append((t_obs, circle_polylines(truth)))

    config = ff.FilterConfig()
    config.n_particles = 10
    out = ff.pf_run(
        grid,
        ignition,
        ff.RosPrior(0.12, 0.03, 0.12, 0.04),
        observations,
        wind,
        filter=config,
        seed=5,
    )
    assert len(out.initial_front) >= 1
    assert len(out.cycles) == 2
    for cycle in out.cycles:
        assert len(cycle.params) == 10
        assert sum(cycle.weights) == pytest.approx(1.0, abs=1e-9)
        assert cycle.analysis_mean
    assert out.total_steps > 0

    rerun = ff.pf_run(
        grid,
        ignition,
        ff.RosPrior(0.12, 0.03, 0.12, 0.04),
        observations,
        wind,
        filter=config,
        seed=5,
    )
    last, relast = out.cycles[-1], rerun.cycles[-1]
    assert [p.beta for p in last.params] == [p.beta for p in relast.params]
    assert last.weights == relast.weights


def test_enkf_run_smoke():
    grid = ff.Grid(96, 64, 0.5, 0.5)
    ignition = ff.Ignition.circle((12.0, 16.0), 3.0)
    wind = [(0.0, 1.0, 0.0)]
    truth = ff.propagate(ignition.signed_distance(grid), 10.0, ff.RosParams(0.1, 0.1), wind)
    config = ff.FilterConfig()
    config.n_members = 4
    out = ff.enkf_run(
        grid,
        ignition,
        ff.RosPrior(0.12, 0.02, 0.12, 0.03),
        [(10.0, circle_polylines(truth))],
        wind,
        filter=config,
        seed=3,
    )
    assert len(out.cycles) == 1
    assert len(out.cycles[0].params) == 4
    assert not out.cycles[0].weights


def test_config_round_trip():
    config = ff.parse_run_config("{}")
    assert config.t_end == 90.0
    config.t_end = 30.0
    again = ff.parse_run_config(ff.run_config_to_json(config))
    assert again.t_end == 30.0


def test_exception_mapping():
    with pytest.raises(ValueError):
        ff.Grid(0, 10, 0.5, 0.5)
    with pytest.raises(ValueError):
        ff.parse_run_config('{"t_endd": 1}')

    grid = ff.Grid(32, 32, 0.5, 0.5)
    phi = ff.signed_distance_circle(grid, (8.0, 8.0), 3.0)
    with pytest.raises(RuntimeError):
        ff.propagate(phi, 60.0, ff.RosParams(0.5, 0.0), [(0.0, 0.0, 0.0)])
