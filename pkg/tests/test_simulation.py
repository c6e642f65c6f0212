import math

import numpy as np
import pytest

from blendsim import HeatKernel, Mode, SimParams, SnapshotPolicy, l1_error, make_grid, run
from blendsim.analytic import exact_macro_trajectory
from blendsim.grid import CFLViolationError


def params(mode, theta=1.0, n=100, seed=0, **kw):
    return SimParams(theta=theta, n_particles=n, seed=seed, mode=mode, **kw)


def test_step_count_and_final_time(grid):
    r = run(params(Mode.PARTIAL_COUPLING_II, 0.5), grid, SnapshotPolicy(True, None))
    assert r.final_field.time_index == grid.n_steps
    assert r.diagnostics.times[-1] == grid.t_final
    assert r.trajectories.shape == (grid.n_steps + 1, 100)
    assert len(r.diagnostics.total_mass) == grid.n_steps + 1
    assert r.diagnostics.min_phi is not None
    assert r.psi_final is not None


def test_macro_only_ignores_particles(grid):
    r = run(SimParams(theta=0.7, n_particles=50, mode="MacroOnly"), grid)
    assert r.params.theta == 0.0 and r.params.n_particles == 0
    assert r.psi_final is None and r.final_positions is None


def test_micro_only_equals_partial_coupling_i_theta_one(grid):
    a = run(params(Mode.MICRO_ONLY, 0.3, 300, seed=4), grid)
    b = run(params(Mode.PARTIAL_COUPLING_I, 1.0, 300, seed=4), grid)
    assert a.params.theta == 1.0
    assert np.array_equal(a.final_positions, b.final_positions)


def test_full_coupling_theta_zero_is_macro_only(grid):
    macro = run(SimParams(mode=Mode.MACRO_ONLY), grid).final_field.values
    empty = run(params(Mode.FULL_COUPLING, 0.0, 0), grid).final_field.values
    loaded = run(params(Mode.FULL_COUPLING, 0.0, 100), grid).final_field.values
    assert np.array_equal(macro, empty)
    assert np.array_equal(macro, loaded)


def test_full_coupling_theta_one_is_partial_coupling_ii(grid):
    a = run(params(Mode.FULL_COUPLING, 1.0, 200, seed=7), grid)
    b = run(params(Mode.PARTIAL_COUPLING_II, 1.0, 200, seed=7), grid)
    assert np.array_equal(a.final_field.values, b.final_field.values)
    assert np.array_equal(a.final_positions, b.final_positions)


def test_determinism(grid):
    for mode, theta in [(Mode.FULL_COUPLING, 0.5), (Mode.PARTIAL_COUPLING_I, 0.2), (Mode.PARTIAL_COUPLING_I_CONVEX_DEMO, 0.5)]:
        a = run(params(mode, theta, 200, seed=1), grid)
        b = run(params(mode, theta, 200, seed=1), grid)
        assert np.array_equal(a.final_positions, b.final_positions)
        assert np.array_equal(a.solution.values, b.solution.values)


def test_particles_stay_finite(grid):
    r = run(params(Mode.FULL_COUPLING, 0.5, 300, seed=2), grid)
    assert np.all(np.isfinite(r.final_positions))
    assert len(r.final_positions) == 300


def test_needs_particles(grid):
    for mode in (Mode.MICRO_ONLY, Mode.PARTIAL_COUPLING_I, Mode.PARTIAL_COUPLING_I_CONVEX_DEMO):
        with pytest.raises(ValueError):
            run(params(mode, 0.5, 0), grid)
    for mode in (Mode.PARTIAL_COUPLING_II, Mode.FULL_COUPLING):
        with pytest.raises(ValueError):
            run(params(mode, 0.5, 0), grid)
        run(params(mode, 0.0, 0), make_grid(n_steps=5, t_final=0.545))


def test_cfl_policy():
    bad = make_grid(1.25, 50, 0.5, 5.0, 500)
    with pytest.raises(CFLViolationError):
        run(SimParams(mode=Mode.MACRO_ONLY), bad)
    with pytest.raises(CFLViolationError):
        run(params(Mode.PARTIAL_COUPLING_II, 0.5, 10), bad)
    short = make_grid(1.25, 50, 0.5, 0.518, 2)
    with pytest.warns(RuntimeWarning):
        run(params(Mode.FULL_COUPLING, 0.5, 10), short)
    run(params(Mode.MICRO_ONLY, 1.0, 10), short)


def test_bad_field_init(grid):
    with pytest.raises(ValueError):
        run(params(Mode.PARTIAL_COUPLING_II, 0.5, 10), grid, field_init="zero")


def test_theta_zero_trajectories_follow_sqrt_law(grid):
    r = run(params(Mode.PARTIAL_COUPLING_I, 0.0, 50, seed=3), grid, SnapshotPolicy(record_trajectories=True))
    y0 = r.trajectories[0]
    exact = exact_macro_trajectory(grid.t_init, y0, grid.t_final)
    np.testing.assert_allclose(r.trajectories[-1], exact, rtol=0.01)


def test_quadratic_variation_decreases_with_theta(grid):
    qv = [run(params(Mode.PARTIAL_COUPLING_I, th, 100, seed=0), grid).quadratic_variation.mean() for th in (1, 0.5, 0.2, 0)]
    assert qv[0] == pytest.approx(grid.n_steps * 2 * 0.5 * grid.dt)
    assert all(a > b for a, b in zip(qv, qv[1:]))


def test_snapshots(grid):
    r = run(params(Mode.PARTIAL_COUPLING_II, 0.5, 20), grid, SnapshotPolicy(False, (0, 10)))
    assert sorted(r.density_snapshots) == [0, 10, grid.n_steps]
    assert sorted(r.psi_snapshots) == [0, 10, grid.n_steps]
    assert r.density_snapshots[10].time_index == 10


def test_mass_diagnostics(grid):
    r = run(params(Mode.PARTIAL_COUPLING_II, 1.0, 1000, seed=5), grid, field_init="particles")
    d = r.diagnostics
    exits = d.out_of_domain[-1] - d.out_of_domain[0]
    assert d.mass_drift == pytest.approx(-exits / 1000, abs=1e-12)
    m = run(params(Mode.MICRO_ONLY, 1.0, 1000, seed=5), grid).diagnostics
    assert np.array_equal(m.particle_mass, (1000 - m.out_of_domain) / 1000)


def test_partial_coupling_ii_error_scale(grid, kernel):
    r = run(params(Mode.PARTIAL_COUPLING_II, 0.5, 1000, seed=0), grid)
    assert l1_error(r.solution, grid, kernel, grid.t_final) < 0.15
