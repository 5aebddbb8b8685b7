import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divflow.datasets import AnalyticSpec, gen_analytic
from divflow.divof import (DivParams, SingularSystemError, assemble_coefficients, assemble_constraints,
                           coefficient_arrays, direct_pixel_solve, divflow_energy, divflow_interpolate_midslice,
                           divflow_iterate, divflow_solve, divflow_step, symmetric_hs_iterate)
from divflow.field import FlowField, GridSpec, VectorSlice, VolumeField
from divflow.metrics import mse
from divflow.reconstruct import linear_midpoint
from divflow.stencils import DerivKind, average_neighbours, derivative

from blobs import stream_blob
from conftest import random_vector_slice

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_params_validation():
    for bad in (dict(gamma=-1), dict(lam=0), dict(iterations=-1), dict(delta=0), dict(early_stop_tol=-1)):
        with pytest.raises(ValueError):
            DivParams(**bad)


class TestConstraints:
    def test_equal_slices(self, rng, grid):
        v = random_vector_slice(rng, grid)
        c = assemble_constraints(v, v, 1.0)
        assert not c.hz.values.any() and not c.dxf.values.any() and not c.dyf.values.any()
        # Dz reduces to twice the in-plane divergence of the common slice
        div2 = 2 * (derivative(v.vx.values, DerivKind.Dx, grid.dx, grid.dy)
                    + derivative(v.vy.values, DerivKind.Dy, grid.dx, grid.dy))
        assert np.allclose(c.dzf.values, div2, atol=1e-12)

    def test_analytic_pair_has_zero_dz(self):
        spec = AnalyticSpec(33, 33, (0.0, 1.0, 2.0))
        vol = gen_analytic(spec)
        c = assemble_constraints(vol[0], vol[2], 1.0)
        assert np.max(np.abs(c.dzf.values[1:-1, 1:-1])) <= 1e-10

    def test_quadratic_vx(self):
        g = GridSpec(9, 7, 0.25, 0.5)
        xs = (np.arange(9) * 0.25)[None, :].repeat(7, 0)
        zero = np.zeros(g.shape)
        up = VectorSlice.from_arrays(g, xs ** 2, zero, zero)
        c = assemble_constraints(VectorSlice.zeros(g), up, 1.0)
        inner = (slice(1, -1), slice(1, -1))
        assert np.allclose(c.dxf.values[inner], 2.0)
        assert np.allclose(c.dyf.values[inner], 0.0)
        assert np.allclose(c.dzf.values[inner], 2 * xs[inner])

    def test_vz_term_uses_delta(self):
        g = GridSpec(5, 5)
        z = np.zeros(g.shape)
        lo = VectorSlice.from_arrays(g, z, z, z)
        up = VectorSlice.from_arrays(g, z, z, np.full(g.shape, 3.0))
        assert np.allclose(assemble_constraints(lo, up, 1.5).dzf.values, 2.0)

    def test_bad_delta(self, grid):
        with pytest.raises(ValueError):
            assemble_constraints(VectorSlice.zeros(grid), VectorSlice.zeros(grid), 0.0)


class TestCoefficients:
    def test_gamma_zero_reduces_to_brightness_terms(self):
        hx, hy, hz = 2.0, 3.0, 5.0
        k = coefficient_arrays(*(np.array([v]) for v in (hx, hy, hz, 7.0, 11.0, 13.0)), gamma=0.0, lam=1.0)
        assert k.a1[0] == hx * hx and k.b1[0] == hx * hy and k.b2[0] == hy * hy
        assert k.c2[0] == hx * hz and k.c4[0] == hy * hz
        assert k.d2[0] == hx * hx + hy * hy + 1.0

    def test_no_brightness_terms(self):
        g2 = 4.0
        dx, dy, dz = 2.0, 3.0, 5.0
        z = np.zeros(1)
        k = coefficient_arrays(z, z, z, *(np.array([v]) for v in (dx, dy, dz)), gamma=2.0, lam=1.0)
        assert k.d1[0] == 0.0 and k.c1[0] == 0.0 and k.c3[0] == 0.0
        assert k.c2[0] == g2 * dx * dz and k.c4[0] == g2 * dy * dz
        assert k.d2[0] == 1.0 + g2 * (dx * dx + dy * dy)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(finite, min_size=6, max_size=6), st.floats(0, 500), st.floats(0.01, 10))
    def test_identities_bitwise(self, vals, gamma, lam):
        arrs = [np.array([v]) for v in vals]
        k = coefficient_arrays(*arrs, gamma=gamma, lam=lam)
        assert np.array_equal(k.a2, k.b1) and np.array_equal(k.d3, k.d1) and np.array_equal(k.d4, k.d2)

    def test_rejects_bad_weights(self, grid):
        c = assemble_constraints(VectorSlice.zeros(grid), VectorSlice.zeros(grid), 1.0)
        with pytest.raises(ValueError):
            assemble_coefficients(c, -1.0, 1.0)
        with pytest.raises(ValueError):
            assemble_coefficients(c, 1.0, 0.0)


class TestDirectSolve:
    def test_against_linalg(self, rng):
        for _ in range(50):
            h, d = rng.normal(size=3), rng.normal(size=3)
            abar, bbar = rng.normal(size=2)
            gamma, lam = rng.uniform(0, 5), rng.uniform(0.1, 3)
            m = (np.outer(h[:2], h[:2]) + gamma ** 2 * np.outer(d[:2], d[:2]) + lam ** 2 * np.eye(2))
            r = lam ** 2 * np.array([abar, bbar]) - (h[:2] * h[2] + gamma ** 2 * d[:2] * d[2])
            ref = np.linalg.solve(m, r)
            got = direct_pixel_solve(abar, bbar, h, d, gamma, lam)
            assert np.allclose(got, ref, rtol=1e-10, atol=1e-12)

    def test_hand_example(self):
        # h=(1,0,-1), no divergence term, lambda=1: alpha = 1 / 2
        a, b = direct_pixel_solve(0.0, 0.0, (1.0, 0.0, -1.0), (0.0, 0.0, 0.0), 0.0, 1.0)
        assert a == pytest.approx(0.5) and b == 0.0

    def test_singular(self):
        with pytest.raises(SingularSystemError):
            direct_pixel_solve(0.0, 0.0, (0, 0, 0), (0, 0, 0), 0.0, 1e-20)


def test_step_matches_direct_solve(rng):
    g = GridSpec(12, 10, 0.3, 0.7)
    lo, up = random_vector_slice(rng, g), random_vector_slice(rng, g)
    c = assemble_constraints(lo, up, 0.8)
    flow = FlowField.from_arrays(g, rng.normal(size=g.shape), rng.normal(size=g.shape))
    out = divflow_step(flow, c, 3.0, 1.2)
    abar = average_neighbours(flow.alpha.values * g.dx)
    bbar = average_neighbours(flow.beta.values * g.dy)
    ra, rb = direct_pixel_solve(abar, bbar, c.arrays()[:3], c.arrays()[3:], 3.0, 1.2)
    assert np.allclose(out.alpha.values, ra / g.dx, rtol=1e-9, atol=1e-12)
    assert np.allclose(out.beta.values, rb / g.dy, rtol=1e-9, atol=1e-12)


def test_gamma_zero_matches_symmetric_hs_each_iterate(noisy_volume):
    c = assemble_constraints(noisy_volume[1], noisy_volume[3], 1.0)
    ours, ref = [], []
    divflow_iterate(c, 0.0, 1.0, 40, callback=lambda n, a, b: ours.append((a, b)))
    symmetric_hs_iterate(c, 1.0, 40, callback=lambda n, a, b: ref.append((a, b)))
    for (a, b), (ra, rb) in zip(ours, ref):
        assert np.max(np.abs(a - ra)) < 1e-10 and np.max(np.abs(b - rb)) < 1e-10


def test_z_reflection_symmetry(noisy_volume):
    # swapping the slices and flipping Vz mirrors the problem in z, so the flow flips sign
    lo, up = noisy_volume[1], noisy_volume[3]
    flip = lambda v: VectorSlice.from_arrays(v.grid, v.vx.values, v.vy.values, -v.vz.values)  # noqa: E731
    p = DivParams(150.0, 1.0, 100, delta=1.0)
    f = divflow_solve(lo, up, p)
    r = divflow_solve(flip(up), flip(lo), p)
    assert np.allclose(r.alpha.values, -f.alpha.values, atol=1e-10)
    assert np.allclose(r.beta.values, -f.beta.values, atol=1e-10)


def test_energy_decreases(noisy_volume):
    c = assemble_constraints(noisy_volume[1], noisy_volume[3], 1.0)
    e0 = divflow_energy(np.zeros(c.grid.shape), np.zeros(c.grid.shape), c, 150.0, 1.0)
    a, b, _ = divflow_iterate(c, 150.0, 1.0, 300)
    assert divflow_energy(a, b, c, 150.0, 1.0) < e0


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6), st.floats(0, 500), st.floats(0.01, 10))
def test_denominator_bounded_below(vals, gamma, lam):
    k = coefficient_arrays(*(np.array([v]) for v in vals), gamma=gamma, lam=lam)
    den = gamma ** 2 * k.d1 + lam ** 2 * k.d2
    assert den[0] >= lam ** 4 * (1 - 1e-12)


def test_zero_iterations_is_linear(rng):
    g = GridSpec(8, 8)
    a, b = random_vector_slice(rng, g), random_vector_slice(rng, g)
    vol = VolumeField((a, b, b), 1.0)
    out = divflow_interpolate_midslice(VolumeField((a, b, b), 1.0), 1, 1, DivParams(iterations=0, delta=1.0))
    assert out == linear_midpoint(vol[0], vol[2])


def test_early_stop(noisy_volume):
    c = assemble_constraints(noisy_volume[1], noisy_volume[3], 1.0)
    _, _, n = divflow_iterate(c, 150.0, 1.0, 5000, early_stop_tol=1e-6)
    assert n < 5000


def test_interpolate_checks():
    g = GridSpec(4, 4)
    vol = VolumeField((VectorSlice.zeros(g),) * 3, 0.5)
    with pytest.raises(IndexError):
        divflow_interpolate_midslice(vol, 1, 2, DivParams(delta=1.0))
    with pytest.raises(ValueError):
        divflow_interpolate_midslice(vol, 1, 1, DivParams(delta=1.0))


def test_supra_pixel_translation_beats_linear():
    n = 64
    lo, mid, up = stream_blob(n, -1.0), stream_blob(n, 0.0), stream_blob(n, 1.0)
    out = divflow_interpolate_midslice(VolumeField((lo, mid, up), 1.0), 1, 1, DivParams(150.0, 1.0, 2000))
    assert mse(mid, out, n, n) < 0.2 * mse(mid, linear_midpoint(lo, up), n, n)
