import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from mhd2d.solver import (
    BLOWUP_THRESHOLD,
    RK_ORDER,
    BlowUpError,
    CflError,
    MhdParams,
    MhdState,
    MollifierSpec,
    analytic_reference,
    cfl_number,
    magnetic,
    mollify_initial_data,
    rhs,
    state_from_fields,
    state_from_vectors,
    step,
    taylor_green_vorticity,
    velocity,
)
from mhd2d.spectral import RealField, SpectralField, make_grid

from conftest import random_coeffs


def random_state(grid, seed, band=None, scale=1.0):
    return MhdState.from_coeffs(grid, scale * random_coeffs(grid, 2 * seed, band),
                                scale * random_coeffs(grid, 2 * seed + 1, band))


def l2_diff(grid, a, b):
    return math.sqrt(grid.l2sq(a.omega_hat.coeffs - b.omega_hat.coeffs)
                     + grid.l2sq(a.j_hat.coeffs - b.j_hat.coeffs))


# -- independent oracle: full complex FFT, primitive variables ---------------

def _d(v, k, axis):
    shape = [1, 1]
    shape[axis] = -1
    return np.real(np.fft.ifft2(1j * k.reshape(shape) * np.fft.fft2(v)))


def oracle_nonlinear(grid, w, j):
    """Nonlinear tendencies from the streamfunction/potential form.

    ``omega_t = -u.grad(omega) + b.grad(j)`` and ``j = lap(psi)`` with
    ``psi_t + u.grad(psi) = 0``, so the current tendency is ``-lap(u.grad psi)``.
    Built with numpy.fft on the full spectrum, independent of the solver.
    """
    nx, ny = grid.shape
    kx = 2 * np.pi / grid.Lx * np.fft.fftfreq(nx, 1 / nx)
    ky = 2 * np.pi / grid.Ly * np.fft.fftfreq(ny, 1 / ny)
    kx[nx // 2] = 0.0
    ky[ny // 2] = 0.0
    K2 = kx[:, None] ** 2 + ky[None, :] ** 2
    inv = np.where(K2 > 0, 1 / np.where(K2 > 0, K2, 1), 0.0)
    W, J = np.fft.fft2(w), np.fft.fft2(j)
    psi_u = np.real(np.fft.ifft2(-inv * W))
    psi_b = np.real(np.fft.ifft2(-inv * J))
    u1, u2 = -_d(psi_u, ky, 1), _d(psi_u, kx, 0)
    b1, b2 = -_d(psi_b, ky, 1), _d(psi_b, kx, 0)
    nw = -(u1 * _d(w, kx, 0) + u2 * _d(w, ky, 1)) + b1 * _d(j, kx, 0) + b2 * _d(j, ky, 1)
    adv = u1 * _d(psi_b, kx, 0) + u2 * _d(psi_b, ky, 1)
    nj_hat = K2 * np.fft.fft2(adv)  # -lap(adv)
    return np.fft.fft2(nw), nj_hat


def half(grid, full_hat):
    return full_hat[:, : grid.ny // 2 + 1] / (grid.nx * grid.ny)


class TestParams:
    def test_presets(self):
        assert MhdParams.preset("mixed_case_A", 0.1, 0.2) == MhdParams(0, 0.1, 0.2, 0)
        assert MhdParams.preset("mixed_case_B", 0.1, 0.2) == MhdParams(0.1, 0, 0, 0.2)
        assert MhdParams.preset("magnetic_only", 0.1, 0.2) == MhdParams(0, 0, 0.2, 0.2)
        assert MhdParams.preset("ideal", 0.1, 0.2, 0.3) == MhdParams(0, 0, 0, 0, 0.3)

    def test_rejects(self):
        with pytest.raises(ValueError):
            MhdParams(-1.0)
        with pytest.raises(ValueError):
            MhdParams(epsilon=math.nan)
        with pytest.raises(ValueError):
            MhdParams.preset("case_C")


class TestState:
    def test_rejects_mean(self, grid16):
        c = np.zeros(grid16.spectral_shape, complex)
        c[0, 0] = 1.0
        with pytest.raises(ValueError):
            MhdState.from_coeffs(grid16, c, np.zeros_like(c))

    def test_rejects_mixed_grids(self, grid16):
        g2 = make_grid(16, 16)
        z = np.zeros(grid16.spectral_shape, complex)
        with pytest.raises(ValueError):
            MhdState(SpectralField(grid16, z), SpectralField(g2, z))

    def test_fields_from_vectors(self, grid32):
        X, Y = grid32.mesh()
        u1 = RealField(grid32, np.sin(X) * np.cos(Y))
        u2 = RealField(grid32, -np.cos(X) * np.sin(Y))
        b1 = RealField(grid32, np.sin(Y))
        b2 = RealField(grid32, np.zeros(grid32.shape))
        s = state_from_vectors(u1, u2, b1, b2)
        assert np.allclose(s.omega_hat.to_real().values, 2 * np.sin(X) * np.sin(Y), atol=1e-14)
        assert np.allclose(s.j_hat.to_real().values, -np.cos(Y), atol=1e-14)
        v1, v2 = velocity(s)
        m1, _ = magnetic(s)
        assert np.allclose(v1.values, u1.values, atol=1e-14)
        assert np.allclose(v2.values, u2.values, atol=1e-14)
        assert np.allclose(m1.values, b1.values, atol=1e-14)


class TestNonlinear:
    @given(st.integers(0, 2**31))
    def test_matches_potential_form(self, seed):
        g = make_grid(32, 32, 2 * math.pi, 4.0)
        s = random_state(g, seed)
        dw, dj = rhs(s, MhdParams())
        nw, nj = oracle_nonlinear(g, s.omega_hat.to_real().values, s.j_hat.to_real().values)
        m = g.dealias_mask.copy()
        m[0, 0] = False
        scale = np.abs(dj.coeffs).max() + np.abs(dw.coeffs).max()
        assert np.max(np.abs(dw.coeffs - half(g, nw))[m]) < 1e-12 * scale
        assert np.max(np.abs(dj.coeffs - half(g, nj))[m]) < 1e-12 * scale
        assert not dw.coeffs[~g.dealias_mask].any()

    @given(st.integers(0, 2**31))
    def test_lorentz_antisymmetry(self, seed):
        # triple products of modes |m| <= 21 stay below 64: the grid sum is exact
        g = make_grid(64, 64)
        s = random_state(g, seed)
        w = s.omega_hat.to_real().values
        j = s.j_hat.to_real().values
        b1, b2 = (f.values for f in magnetic(s))
        d = lambda f, ax: SpectralField(g, g.forward(f)).coeffs * (1j * (g.KX_odd if ax == 0 else g.KY_odd))
        jx, jy, wx, wy = (g.inverse(d(f, a)) for f, a in ((j, 0), (j, 1), (w, 0), (w, 1)))
        a = np.sum((b1 * jx + b2 * jy) * w) * g.cell_area
        b = np.sum((b1 * wx + b2 * wy) * j) * g.cell_area
        assert abs(a + b) <= 1e-12 * max(abs(a), abs(b), 1.0)

    def test_taylor_green_is_steady_for_euler(self, grid32):
        s = analytic_reference("taylor_green", MhdParams(), 0.0, grid32)
        dw, dj = rhs(s, MhdParams())
        assert np.abs(dw.coeffs).max() < 1e-14
        assert np.abs(dj.coeffs).max() == 0.0


class TestAnalyticReference:
    def test_taylor_green_factor(self, grid16):
        s = analytic_reference("taylor_green", MhdParams(nu2=0.1), 1.0, grid16)
        X, Y = grid16.mesh()
        assert np.allclose(s.omega_hat.to_real().values, 2 * math.exp(-0.1) * np.sin(X) * np.sin(Y), atol=1e-15)
        assert math.exp(-0.1) == pytest.approx(0.904837, abs=1e-6)

    def test_magnetic_halved(self, grid16):
        s0 = analytic_reference("magnetic_decay", MhdParams(eta2=1.0), 0.0, grid16)
        s1 = analytic_reference("magnetic_decay", MhdParams(eta2=1.0), math.log(2), grid16)
        assert np.allclose(s1.j_hat.coeffs, 0.5 * s0.j_hat.coeffs, atol=1e-16)
        _, Y = grid16.mesh()
        assert np.allclose(s0.j_hat.to_real().values, -np.cos(Y), atol=1e-15)
        b1, b2 = magnetic(s0)
        assert np.allclose(b1.values, np.sin(Y), atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            analytic_reference("vortex", MhdParams(), 0.0)

    @pytest.mark.parametrize("kind,params", [
        ("taylor_green", MhdParams(0.05, 0.1, 0.3, 0.0)),
        ("taylor_green", MhdParams(0.0, 0.2, 0.0, 0.0, 0.01)),
        ("magnetic_decay", MhdParams(0.1, 0.0, 0.0, 0.5)),
        ("magnetic_decay", MhdParams(0.0, 0.3, 1.0, 0.2, 0.02)),
    ])
    def test_solver_tracks_reference(self, grid16, kind, params):
        s = analytic_reference(kind, params, 0.0, grid16)
        for _ in range(50):
            s = step(s, params, 0.01)
        ref = analytic_reference(kind, params, s.t, grid16)
        assert l2_diff(grid16, s, ref) < 1e-12


class TestStep:
    def test_zero_dt_echo(self, grid16):
        s = random_state(grid16, 1)
        assert step(s, MhdParams(), 0.0) is s

    def test_rejects_negative_dt(self, grid16):
        with pytest.raises(ValueError):
            step(random_state(grid16, 1), MhdParams(), -0.1)

    @given(st.integers(0, 2**31))
    def test_mean_zero_preserved(self, seed):
        g = make_grid(16, 16)
        s = random_state(g, seed)
        for _ in range(3):
            s = step(s, MhdParams(0.01, 0, 0.02, 0.01), 0.01)
        assert s.omega_hat.coeffs[0, 0] == 0.0 and s.j_hat.coeffs[0, 0] == 0.0
        assert not s.omega_hat.coeffs[~g.dealias_mask].any()

    def test_deterministic(self, grid32):
        s = random_state(grid32, 4)
        a = step(step(s, MhdParams(nu2=0.1), 0.01), MhdParams(nu2=0.1), 0.01)
        b = step(step(s, MhdParams(nu2=0.1), 0.01), MhdParams(nu2=0.1), 0.01)
        assert np.array_equal(a.omega_hat.coeffs, b.omega_hat.coeffs)
        assert np.array_equal(a.j_hat.coeffs, b.j_hat.coeffs)

    def test_cfl(self, grid32):
        s = random_state(grid32, 2, scale=50.0)
        with pytest.raises(CflError) as info:
            step(s, MhdParams(), 0.1)
        dt = info.value.suggested_dt
        assert 0 < dt < 0.1
        assert cfl_number(s, dt) <= 1.5
        step(s, MhdParams(), dt)

    def test_blowup(self, grid16):
        w = taylor_green_vorticity(grid16) * (2 * BLOWUP_THRESHOLD)
        s = state_from_fields(w, RealField(grid16, np.zeros(grid16.shape)))
        with pytest.raises(BlowUpError) as info:
            step(s, MhdParams(), 1e-12, cfl_max=None)
        assert info.value.t is not None

    def test_order(self):
        g = make_grid(32, 32)
        s0 = random_state(g, 7, band=4, scale=1.0 / 3)
        p = MhdParams(0, 0.05, 0.05, 0)

        def run(dt, T=0.4):
            s = s0
            for _ in range(int(round(T / dt))):
                s = step(s, p, dt)
            return s

        ref = run(0.000625)
        errs = [l2_diff(g, run(dt), ref) for dt in (0.02, 0.01)]
        assert errs[0] / errs[1] == pytest.approx(2**RK_ORDER, rel=0.15)


class TestMollifier:
    def test_profile_unit_mass(self):
        mass, _ = integrate.quad(lambda r: 2 * math.pi * r * MollifierSpec.profile(np.array(r)),
                                 0, 1, epsabs=1e-14, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-10)
        assert MollifierSpec.profile(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]

    def test_transform_matches_quadrature(self):
        spec = MollifierSpec(0.3)
        assert spec.transform(np.array(0.0)) == pytest.approx(1.0, abs=1e-15)
        for k in (1.0, 5.0, 20.0):
            ref, _ = integrate.quad(
                lambda r: 2 * math.pi * r * MollifierSpec.profile(np.array(r)) * special.j0(0.3 * k * r),
                0, 1, epsabs=1e-14, limit=200)
            assert spec.transform(np.array(k)) == pytest.approx(ref, abs=1e-10)

    def test_single_mode_scaled(self, grid32):
        X, _ = grid32.mesh()
        spec = MollifierSpec(0.5)
        out = mollify_initial_data(RealField(grid32, np.sin(3 * X)), spec)
        assert np.allclose(out.values, spec.transform(np.array(3.0)) * np.sin(3 * X), atol=1e-14)

    def test_preserves_mean(self, grid32):
        v = np.random.default_rng(0).standard_normal(grid32.shape) + 2.0
        out = mollify_initial_data(RealField(grid32, v), MollifierSpec(0.2))
        assert out.mean() == pytest.approx(np.mean(v), abs=1e-14)

    def test_rejects_wide(self, grid16):
        with pytest.raises(ValueError):
            mollify_initial_data(RealField(grid16, np.zeros(grid16.shape)), MollifierSpec(math.pi))
        with pytest.raises(ValueError):
            MollifierSpec(0.0)
