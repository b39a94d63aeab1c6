import math

import numpy as np
import pytest

from burgerslab.core import SpatialGrid, TimeMesh, h_norm, sample_noise, sine_field
from burgerslab.coefficients import burgers_multiscale_family, make_burgers_set
from burgerslab.averaging import (
    increment_modulus,
    khasminskii_block_error,
    penalization_convergence_probe,
    run_averaging_experiment,
)
from burgerslab.solver import SchemeConfig, solve, solve_skeleton

GRID = SpatialGrid(16)
MESH = TimeMesh(1.0, 200)
CFG = SchemeConfig(grid=GRID, mesh=MESH)
U0 = sine_field(GRID)


class TestAveragingExperiment:
    def test_zero_amplitude_exact_coupling(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=0.0)
        rep = run_averaging_experiment(ms, avg, U0, [0.1, 0.01], 3, seed=1, cfg=CFG)
        assert all(r.mean_sq_dist == 0.0 for r in rep.rows)
        assert rep.coupling_seed == 1

    def test_distance_decreases_with_eps(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=1.0)
        rep = run_averaging_experiment(
            ms, avg, U0, [0.1, 0.01, 0.001], 8, seed=2, cfg=CFG
        )
        means = [r.mean_sq_dist for r in rep.rows]
        assert means[0] > means[1] > means[2]

    def test_repeat_identical(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=1.0)
        a = run_averaging_experiment(ms, avg, U0, [0.05], 1, seed=3, cfg=CFG)
        b = run_averaging_experiment(ms, avg, U0, [0.05], 1, seed=3, cfg=CFG)
        assert a == b

    def test_distinct_eps_required(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=1.0)
        with pytest.raises(ValueError):
            run_averaging_experiment(ms, avg, U0, [0.1, 0.1], 1, seed=4, cfg=CFG)

    def test_fourth_moment_no_superquartic_growth(self):
        cs = make_burgers_set(1.0, noise_profile="additive")
        cfg = SchemeConfig(grid=GRID, mesh=MESH, noise_scale=1.0)
        ratios = []
        for c in (1.0, 2.0, 4.0):
            u0c = c * U0
            sups4 = []
            for i in range(100):
                nz = sample_noise(31, MESH, 1, path_index=i)
                p = solve(cs, u0c, nz, None, cfg)
                sups4.append(float(np.max(p.h_sq)) ** 2)
            ratios.append(np.mean(sups4) / (1.0 + h_norm(u0c, GRID) ** 4))
        # bounded against 1 + |u0|^4, and not growing with the scaling
        assert max(ratios) < 2.0
        assert ratios[2] / ratios[1] < 1.5


class TestIncrementModulus:
    def _heat_path(self):
        cs = make_burgers_set(0.0, noise_profile="zero")
        cfg = SchemeConfig(grid=GRID, mesh=TimeMesh(0.5, 500), noise_scale=0.0)
        return solve_skeleton(cs, U0, None, cfg)

    def test_constant_path_zero(self):
        cs = make_burgers_set(0.0, noise_profile="zero")
        cfg = SchemeConfig(grid=GRID, mesh=MESH, noise_scale=0.0)
        p = solve_skeleton(cs, np.zeros(GRID.m), None, cfg)
        assert increment_modulus(p, 0.1) == 0.0

    def test_heat_flow_first_mode_bound(self):
        p = self._heat_path()
        bound = (1 - math.exp(-math.pi**2 * 0.01)) ** 2 * h_norm(U0, GRID) ** 2
        assert increment_modulus(p, 0.01) <= bound

    def test_smaller_window_never_larger(self):
        p = self._heat_path()
        assert increment_modulus(p, 0.01) <= increment_modulus(p, 0.04)

    def test_window_validated(self):
        p = self._heat_path()
        with pytest.raises(ValueError):
            increment_modulus(p, 0.0)
        with pytest.raises(ValueError):
            increment_modulus(p, 1.0)


class TestKhasminskiiBlocks:
    def test_zero_amplitude_zero_error(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=0.0)
        cfg = SchemeConfig(grid=GRID, mesh=MESH, time_scale=0.1)
        p = solve(ms, U0, sample_noise(5, MESH, 1), None, cfg)
        assert khasminskii_block_error(ms, avg, p, 0.1, 0.1) == 0.0

    def test_decreasing_in_eps(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=1.0)
        vals = []
        for eps in (0.1, 0.01):
            cfg = SchemeConfig(grid=GRID, mesh=MESH, time_scale=eps)
            p = solve(ms, U0, sample_noise(6, MESH, 1), None, cfg)
            vals.append(khasminskii_block_error(ms, avg, p, 0.1, eps))
        assert vals[1] < vals[0]

    def test_single_block_is_whole_horizon_average(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=1.0)
        eps = 0.05
        cfg = SchemeConfig(grid=GRID, mesh=MESH, time_scale=eps)
        p = solve(ms, U0, sample_noise(7, MESH, 1), None, cfg)
        got = khasminskii_block_error(ms, avg, p, MESH.t_final, eps)
        # independent recomputation: |u0|_H * sum_s |f(s/eps,.,u0)-f_bar(.,u0)|_H dt
        x = GRID.nodes
        acc = 0.0
        for k in range(MESH.steps):
            s = MESH.times[k]
            diff = np.asarray(ms.f(s / eps, x, p.u[0]) - avg.f_bar(x, p.u[0]))
            acc += math.sqrt(GRID.dx * float(np.dot(diff, diff))) * MESH.dt
        expected = h_norm(p.u[0], GRID) * acc
        assert got == pytest.approx(expected, rel=1e-12)

    def test_bad_block_length(self):
        ms, avg = burgers_multiscale_family(beta=0.5, amplitude=1.0)
        cfg = SchemeConfig(grid=GRID, mesh=MESH, time_scale=0.1)
        p = solve(ms, U0, sample_noise(8, MESH, 1), None, cfg)
        with pytest.raises(ValueError):
            khasminskii_block_error(ms, avg, p, 0.0, 0.1)
        with pytest.raises(ValueError):
            khasminskii_block_error(ms, avg, p, 2.0, 0.1)


class TestPenalizationProbe:
    def test_inactive_obstacle_gives_zero(self):
        # strong upward forcing keeps the state positive: schemes coincide
        cs = make_burgers_set(0.0, noise_profile="zero", c2=2.0)
        cfg = SchemeConfig(grid=GRID, mesh=MESH, noise_scale=0.0)
        rows = penalization_convergence_probe(
            cs, 2 * U0, [10.0, 100.0], None, cfg
        )
        assert all(d2 == 0.0 for _, d2 in rows)

    def test_distance_decreases_in_n(self):
        cs = make_burgers_set(0.0, noise_profile="additive", c2=-1.0, sigma_amp=0.5)
        mesh = TimeMesh(1.0, 2000)
        cfg = SchemeConfig(grid=GRID, mesh=mesh, noise_scale=1.0)
        nz = sample_noise(9, mesh, 1)
        rows = penalization_convergence_probe(cs, np.zeros(GRID.m), [10, 100, 1000], nz, cfg)
        d2s = [d2 for _, d2 in rows]
        assert d2s[0] > d2s[1] > d2s[2] > 0.0

    def test_repeat_identical(self):
        cs = make_burgers_set(0.0, noise_profile="additive", c2=-1.0, sigma_amp=0.5)
        cfg = SchemeConfig(grid=GRID, mesh=MESH, noise_scale=1.0)
        nz = sample_noise(10, MESH, 1)
        a = penalization_convergence_probe(cs, np.zeros(GRID.m), [50.0], nz, cfg)
        b = penalization_convergence_probe(cs, np.zeros(GRID.m), [50.0], nz, cfg)
        assert a == b

    def test_increasing_n_required(self):
        cs = make_burgers_set(0.0, noise_profile="zero", c2=-1.0)
        cfg = SchemeConfig(grid=GRID, mesh=MESH, noise_scale=0.0)
        with pytest.raises(ValueError):
            penalization_convergence_probe(cs, np.zeros(GRID.m), [100, 10], None, cfg)
