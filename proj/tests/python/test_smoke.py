"""Smoke tests for the pybind11 module (run with PYTHONPATH=<build>/python)."""

import math

import numpy as np
import pytest

sida = pytest.importorskip("sida")


@pytest.fixture
def grid():
    return sida.Grid2D(0.0, 1.0, 0.0, 1.0, 11, 11)


def test_grid_and_flatten(grid):
    assert grid.nx == 11 and grid.ny == 11
    assert grid.dx == pytest.approx(0.1)
    assert sida.flatten(1, 1, grid) == 1
    assert sida.flatten(3, 2, grid) == 14
    i, j = sida.unflatten(14, grid)
    assert (i, j) == (3, 2)


def test_field_numpy_round_trip(grid):
    values = np.linspace(0.0, 1.0, grid.nx * grid.ny).reshape(grid.nx, grid.ny)
    field = sida.Field2D(grid, values)
    back = field.to_numpy()
    assert back.shape == (grid.nx, grid.ny)
    np.testing.assert_array_equal(back, values)
    flat = sida.flatten_field(field)
    # column-major stacking: m = i + j*nx
    assert flat[3 + 2 * grid.nx] == values[3, 2]


def test_central_diff_constant_is_zero(grid):
    field = sida.Field2D(grid, 3.5)
    gx = sida.central_diff(field, sida.Direction.X)
    assert np.abs(gx.to_numpy()).max() == 0.0


def test_advance_keeps_constants(grid):
    field = sida.Field2D(grid, 1.3)
    out = sida.advance(field, 10, 1e-3, sida.PdeModel.burgers())
    np.testing.assert_allclose(out.to_numpy(), 1.3, atol=1e-12)


def test_ensemble_statistics_and_weighting(grid):
    rng = sida.RngStream(7)
    u0 = sida.initial_condition("advection_box", grid)
    ens = sida.init_ensemble(u0, 8, 0.1, rng)
    assert ens.size() == 8

    mean = sida.ensemble_mean(ens)
    stacked = np.stack([m.to_numpy() for m in ens.members])
    np.testing.assert_allclose(mean.to_numpy(), stacked.mean(axis=0), atol=1e-12)

    var = sida.pointwise_variance(ens)
    np.testing.assert_allclose(var.to_numpy(), stacked.var(axis=0, ddof=1), atol=1e-12)

    stats = sida.gradient_stats(ens, 1.0, 1.0)
    np.testing.assert_allclose(
        stats.s_diag.to_numpy(), stats.s_x.to_numpy() + stats.s_y.to_numpy(), atol=1e-14
    )

    w = sida.assemble_W_S_diag(ens, 1.0, 1.0, 1e-3)
    assert w.shape == sida.WeightingMatrix.Shape.Diagonal
    assert w.diag.min() > 0.0
    assert w.diag.max() == pytest.approx(1e-3, rel=1e-9)


def test_analysis_step_pulls_toward_observations(grid):
    rng = sida.RngStream(11)
    u0 = sida.initial_condition("advection_box", grid)
    ens = sida.init_ensemble(u0, 20, 0.1, rng)
    obs = sida.ObservationModel.dense(grid, 0.01)
    truth = sida.initial_condition("advection_box", grid)
    y = sida.observe_truth(truth, obs, sida.RngStream(12))

    scheme = sida.WeightingConfig()
    scheme.kind = sida.WeightingConfig.Kind.GradDiag
    scheme.theta = 1.0
    scheme.phi = 1.0
    scheme.beta_tilde = 1e-3
    result = sida.analysis_step(ens, y, obs, scheme)

    prior_err = np.abs(sida.ensemble_mean(ens).to_numpy() - truth.to_numpy()).mean()
    post_err = np.abs(result.posterior_mean.to_numpy() - truth.to_numpy()).mean()
    assert post_err < prior_err
    assert not result.diagnostics.diagonal_fallback


def test_checkerboard_count():
    g = sida.Grid2D(0.0, 1.0, 0.0, 1.0, 101, 101)
    obs = sida.ObservationModel.checkerboard(g, 0.005)
    assert obs.m_obs() == 5101


def test_tiny_scenario_end_to_end():
    text = """schema_version = 1
pde.kind = linear_advection
pde.a_x = 0.5
pde.a_y = -1
init.name = advection_box
grid.x_min = 0
grid.x_max = 1
grid.y_min = 0
grid.y_max = 1
grid.n_x = 11
grid.n_y = 11
time.dt = 0.01
time.t_final = 0.1
time.obs_interval = 2
ensemble.size = 5
ensemble.init_noise_std = 0.1
ensemble.seed = 42
observation.pattern = dense
observation.gamma = 0.01
observation.seed = 43
weighting.scheme = grad_diag
weighting.theta = 1
weighting.phi = 1
weighting.beta_tilde = 1e-3
truth.source = analytic
"""
    cfg = sida.ScenarioConfig.from_text(text)
    assert cfg.n_cycles() == 5
    record = sida.run_scenario(cfg)
    assert record.series.size() == 5
    assert math.isfinite(record.summary.e_l1)
    rerun = sida.run_scenario(cfg)
    assert rerun.series.err_l1 == record.series.err_l1
    assert cfg.from_text(cfg.to_text()).to_text() == cfg.to_text()
