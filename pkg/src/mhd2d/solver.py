"""
Vorticity/current pseudo-spectral solver for 2D incompressible MHD.

The prognostic variables are the vorticity ``omega = d_x u2 - d_y u1`` and
current density ``j = d_x b2 - d_y b1``. With anisotropic dissipation they
obey

    omega_t + u.grad(omega) = nu1 omega_xx + nu2 omega_yy + b.grad(j)
    j_t + u.grad(j) = eta1 j_xx + eta2 j_yy + b.grad(omega)
                      + 2 d_x b1 (d_x u2 + d_y u1) - 2 d_x u1 (d_x b2 + d_y b1)

plus ``eps * lap`` on both equations when the regularization strength is
positive. Velocity and magnetic field are recovered with zero mean by
Biot-Savart. Products are formed in collocation space and dealiased with the
2/3 rule; diffusion is integrated exactly by a per-mode integrating factor
and the nonlinear part by classical RK4 in the Lawson form.
"""

from dataclasses import dataclass, replace
from functools import lru_cache
import math

import numpy as np
from scipy import integrate, special

from . import kernels
from .spectral import (
    RealField,
    SpectralField,
    biot_savart_coeffs,
    check_mean_zero,
    make_grid,
)

__all__ = [
    "PRESETS",
    "MhdParams",
    "MhdState",
    "MollifierSpec",
    "BlowUpError",
    "CflError",
    "state_from_fields",
    "state_from_vectors",
    "velocity",
    "magnetic",
    "rhs",
    "step",
    "cfl_number",
    "mollify_initial_data",
    "analytic_reference",
    "RK_ORDER",
    "BLOWUP_THRESHOLD",
]

RK_ORDER = 4
BLOWUP_THRESHOLD = 1e8
DEFAULT_CFL = 1.5

PRESETS = ("mixed_case_A", "mixed_case_B", "magnetic_only", "ideal")


class BlowUpError(RuntimeError):
    """Non-finite values or ``max|omega|`` above the blow-up threshold."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class CflError(ValueError):
    """The requested time step violates the advective CFL bound."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


@dataclass(frozen=True)
class MhdParams:
    """Dissipation tuple ``(nu1, nu2, eta1, eta2)`` and regularization ``epsilon``."""

    nu1: float = 0.0
    nu2: float = 0.0
    eta1: float = 0.0
    eta2: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("nu1", "nu2", "eta1", "eta2", "epsilon"):
            value = float(getattr(self, name))
            if not (value >= 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite nonnegative number, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def preset(cls, name, nu=0.0, eta=0.0, epsilon=0.0):
        """Named parameter families.

        ``mixed_case_A`` is ``(0, nu, eta, 0)``, ``mixed_case_B`` is
        ``(nu, 0, 0, eta)``, ``magnetic_only`` is ``(0, 0, eta, eta)`` and
        ``ideal`` has every coefficient zero.
        """
        if name == "mixed_case_A":
            return cls(0.0, nu, eta, 0.0, epsilon)
        if name == "mixed_case_B":
            return cls(nu, 0.0, 0.0, eta, epsilon)
        if name == "magnetic_only":
            return cls(0.0, 0.0, eta, eta, epsilon)
        if name == "ideal":
            return cls(0.0, 0.0, 0.0, 0.0, epsilon)
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True, eq=False)
class MhdState:
    """Vorticity and current coefficients (both mean-zero) at time ``t``."""

    omega_hat: SpectralField
    j_hat: SpectralField
    t: float = 0.0

    def __post_init__(self):
        if self.omega_hat.grid is not self.j_hat.grid:
            raise ValueError("omega_hat and j_hat must share a grid")
        if not self.t >= 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")
        for name, f in (("omega_hat", self.omega_hat), ("j_hat", self.j_hat)):
            if not np.isfinite(f.coeffs).all():
                raise ValueError(f"{name} has non-finite coefficients")
            check_mean_zero(f.coeffs, name)
        object.__setattr__(self, "t", float(self.t))

    @property
    def grid(self):
        return self.omega_hat.grid

    @classmethod
    def zeros(cls, grid, t=0.0):
        z = np.zeros(grid.spectral_shape, dtype=np.complex128)
        return cls(SpectralField(grid, z), SpectralField(grid, z), t)

    @classmethod
    def from_coeffs(cls, grid, omega_hat, j_hat, t=0.0):
        return cls(SpectralField(grid, omega_hat), SpectralField(grid, j_hat), t)


def _project(grid, coeffs):
    out = np.where(grid.dealias_mask, coeffs, 0.0)
    out[0, 0] = 0.0
    return out


def state_from_fields(omega, j, t=0.0):
    """State from collocation vorticity and current; dealiased, mean removed."""
    grid = omega.grid
    return MhdState.from_coeffs(
        grid, _project(grid, grid.forward(omega.values)),
        _project(grid, grid.forward(j.values)), t)


def _curl_coeffs(grid, v1_hat, v2_hat):
    return 1j * grid.KX_odd * v2_hat - 1j * grid.KY_odd * v1_hat


def state_from_vectors(u1, u2, b1, b2, t=0.0):
    """State from collocation components of ``u`` and ``b`` via their curls."""
    grid = u1.grid
    f = grid.forward
    w = _curl_coeffs(grid, f(u1.values), f(u2.values))
    j = _curl_coeffs(grid, f(b1.values), f(b2.values))
    return MhdState.from_coeffs(grid, _project(grid, w), _project(grid, j), t)


def _vector(grid, curl_hat):
    v1, v2 = biot_savart_coeffs(grid, curl_hat)
    return RealField(grid, grid.inverse(v1)), RealField(grid, grid.inverse(v2))


def velocity(state):
    """Mean-zero velocity ``(u1, u2)`` as real fields."""
    return _vector(state.grid, state.omega_hat.coeffs)


def magnetic(state):
    """Mean-zero magnetic field ``(b1, b2)`` as real fields."""
    return _vector(state.grid, state.j_hat.coeffs)


@lru_cache(maxsize=16)
def _operators(grid):
    ikx = 1j * grid.KX_odd
    iky = 1j * grid.KY_odd
    kx_max = 2 * math.pi / grid.Lx * grid.cutoff[0]
    ky_max = 2 * math.pi / grid.Ly * grid.cutoff[1]
    return ikx, iky, -grid.inv_K2, kx_max, ky_max


def _nonlinear_eval(grid, w, j):
    ikx, iky, neg_inv_k2, _, _ = _operators(grid)
    psi_u = neg_inv_k2 * w
    psi_b = neg_inv_k2 * j
    stack = np.empty((12,) + w.shape, dtype=np.complex128)
    u1, u2, b1, b2 = stack[0], stack[1], stack[2], stack[3]
    np.multiply(-iky, psi_u, out=u1)
    np.multiply(ikx, psi_u, out=u2)
    np.multiply(-iky, psi_b, out=b1)
    np.multiply(ikx, psi_b, out=b2)
    np.multiply(ikx, w, out=stack[4])
    np.multiply(iky, w, out=stack[5])
    np.multiply(ikx, j, out=stack[6])
    np.multiply(iky, j, out=stack[7])
    np.multiply(ikx, u1, out=stack[8])
    np.multiply(ikx, b1, out=stack[9])
    stack[10] = ikx * u2 + iky * u1
    stack[11] = ikx * b2 + iky * b1
    phys = grid.inverse(stack)
    prod, speed_x, speed_y, finite = kernels.nonlinear_terms(phys)
    if not finite:
        raise BlowUpError("non-finite values in nonlinear products")
    out = grid.forward(prod)
    out *= grid.dealias_mask
    out[:, 0, 0] = 0.0
    out.flags.writeable = False
    return out[0], out[1], speed_x, speed_y


# Last evaluation, keyed by identity of read-only state arrays: the
# diagnostics of a state and the first RK stage of the next step share it.
_last_eval = (None, None, None)


def _nonlinear(grid, w, j):
    """Dealiased nonlinear tendencies plus the max advective speeds per axis.

    Returned coefficient arrays are read-only.
    """
    global _last_eval
    cw, cj, cached = _last_eval
    if w is cw and j is cj:
        return cached
    result = _nonlinear_eval(grid, w, j)
    if not (w.flags.writeable or j.flags.writeable):
        _last_eval = (w, j, result)
    return result


def _linear_rates(grid, params):
    kx2 = grid.KX**2
    ky2 = grid.KY**2
    eps = params.epsilon
    lw = -((params.nu1 + eps) * kx2 + (params.nu2 + eps) * ky2)
    lj = -((params.eta1 + eps) * kx2 + (params.eta2 + eps) * ky2)
    return lw, lj


@lru_cache(maxsize=32)
def _integrating_factors(grid, params, dt):
    lw, lj = _linear_rates(grid, params)
    return (np.exp(lw * dt), np.exp(lw * (0.5 * dt)),
            np.exp(lj * dt), np.exp(lj * (0.5 * dt)))


def rhs(state, params, grid=None):
    """Full tendencies ``(d omega/dt, dj/dt)`` including diffusion.

    Raises:
        BlowUpError: if any collocation product is non-finite.
    """
    grid = state.grid if grid is None else grid
    w = state.omega_hat.coeffs
    j = state.j_hat.coeffs
    nw, nj, _, _ = _nonlinear(grid, w, j)
    lw, lj = _linear_rates(grid, params)
    dw = nw + lw * w
    dj = nj + lj * j
    dw[0, 0] = 0.0
    dj[0, 0] = 0.0
    return SpectralField(grid, dw), SpectralField(grid, dj)


def cfl_number(state, dt):
    """``dt * (max(|u1|+|b1|) kx_max + max(|u2|+|b2|) ky_max)`` on retained modes."""
    grid = state.grid
    _, _, sx, sy = _nonlinear(grid, state.omega_hat.coeffs, state.j_hat.coeffs)
    _, _, _, kx_max, ky_max = _operators(grid)
    return dt * (sx * kx_max + sy * ky_max)


def _max_abs_bound(grid, coeffs):
    return float(np.sum(np.abs(coeffs) * grid.weights))


def step(state, params, dt, cfl_max=DEFAULT_CFL):
    """Advance one Lawson-RK4 step of size ``dt``.

    Raises:
        CflError: when ``dt`` exceeds the advective bound; carries ``suggested_dt``.
        BlowUpError: on non-finite values or ``max|omega| > BLOWUP_THRESHOLD``.
    """
    dt = float(dt)
    if not dt >= 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be a finite nonnegative number, got {dt}")
    if dt == 0.0:
        return state
    grid = state.grid
    w = state.omega_hat.coeffs
    j = state.j_hat.coeffs
    _, _, _, kx_max, ky_max = _operators(grid)
    ew, ehw, ej, ehj = _integrating_factors(grid, params, dt)

    try:
        k1w, k1j, sx, sy = _nonlinear(grid, w, j)
        rate = sx * kx_max + sy * ky_max
        if cfl_max is not None and dt * rate > cfl_max:
            raise CflError(
                f"dt={dt:g} violates the CFL bound (number {dt * rate:.3g} > {cfl_max})",
                suggested_dt=0.9 * cfl_max / rate)
        half = 0.5 * dt
        k2w, k2j, _, _ = _nonlinear(grid, ehw * (w + half * k1w), ehj * (j + half * k1j))
        k3w, k3j, _, _ = _nonlinear(grid, ehw * w + half * k2w, ehj * j + half * k2j)
        k4w, k4j, _, _ = _nonlinear(grid, ew * w + dt * (ehw * k3w), ej * j + dt * (ehj * k3j))
    except BlowUpError as exc:
        exc.t = state.t
        raise
    sixth = dt / 6.0
    w_new = ew * w + sixth * (ew * k1w + 2.0 * ehw * (k2w + k3w) + k4w)
    j_new = ej * j + sixth * (ej * k1j + 2.0 * ehj * (k2j + k3j) + k4j)
    t_new = state.t + dt

    if not (np.isfinite(w_new).all() and np.isfinite(j_new).all()):
        raise BlowUpError("non-finite coefficients after step", t=t_new)
    if _max_abs_bound(grid, w_new) > BLOWUP_THRESHOLD:
        peak = float(np.abs(grid.inverse(w_new)).max())
        if peak > BLOWUP_THRESHOLD:
            raise BlowUpError(f"max|omega| = {peak:.3e} exceeds threshold", t=t_new)
    return MhdState.from_coeffs(grid, w_new, j_new, t_new)


# -- mollifier ---------------------------------------------------------------

def _bump(r):
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_mass():
    mass, _ = integrate.quad(lambda r: 2 * math.pi * r * math.exp(-1.0 / (1.0 - r * r)),
                             0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return mass


_GL_NODES = 512


@lru_cache(maxsize=1)
def _hankel_nodes():
    x, wts = np.polynomial.legendre.leggauss(_GL_NODES)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * wts * 2 * math.pi * r * _bump(r)
    return r, wr / wr.sum()


@dataclass(frozen=True)
class MollifierSpec:
    """Scaled bump ``psi_eps(x) = eps^-2 psi(x/eps)``.

    ``psi`` is ``exp(-1/(1-|x|^2))`` on the unit disk, normalized to unit mass.
    """

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"mollifier epsilon must be positive, got {self.epsilon}")

    @staticmethod
    def profile(r):
        """Unit-mass radial profile on the unit disk (zero outside)."""
        return _bump(r) / _bump_mass()

    def transform(self, k):
        """Fourier transform ``int psi_eps(x) exp(-i k.x) dx`` at radial wavenumbers ``k``."""
        r, wr = _hankel_nodes()
        s = self.epsilon * np.asarray(k, dtype=np.float64)
        flat = np.unique(s.ravel())
        vals = special.j0(np.outer(flat, r)) @ wr
        return vals[np.searchsorted(flat, s.ravel())].reshape(s.shape)


def mollify_initial_data(f, spec):
    """Periodic convolution of ``f`` with the scaled mollifier.

    The convolution is evaluated exactly on the trigonometric interpolant of
    ``f`` by multiplying coefficients with the mollifier's Fourier transform.

    Raises:
        ValueError: if ``spec.epsilon >= min(Lx, Ly) / 2``.
    """
    grid = f.grid
    if spec.epsilon >= 0.5 * min(grid.Lx, grid.Ly):
        raise ValueError(
            f"mollifier epsilon {spec.epsilon} too large for a {grid.Lx:g} x {grid.Ly:g} torus")
    coeffs = grid.forward(f.values)
    coeffs = coeffs * spec.transform(np.sqrt(grid.K2))
    return RealField(grid, grid.inverse(coeffs))


# -- analytic references -----------------------------------------------------

def taylor_green_vorticity(grid):
    X, Y = grid.mesh()
    k0x = 2 * math.pi / grid.Lx
    k0y = 2 * math.pi / grid.Ly
    return RealField(grid, 2.0 * np.sin(k0x * X) * np.sin(k0y * Y))


def magnetic_decay_current(grid):
    """Current of ``b = (sin(k0 y), 0)``, i.e. ``j = -k0 cos(k0 y)``."""
    _, Y = grid.mesh()
    k0y = 2 * math.pi / grid.Ly
    return RealField(grid, -k0y * np.cos(k0y * Y))


def analytic_reference(kind, params, t, grid=None):
    """Exact solutions used as oracles.

    ``taylor_green``: ``omega = 2 sin x sin y`` decaying at ``nu1 + nu2`` (scaled
    by the fundamental wavenumbers), ``j = 0``. ``magnetic_decay``:
    ``b = (sin y, 0)`` decaying at ``eta2``, ``u = 0``. Regularization adds
    ``epsilon |k|^2`` to each rate.
    """
    grid = make_grid(64, 64) if grid is None else grid
    k0x2 = (2 * math.pi / grid.Lx) ** 2
    k0y2 = (2 * math.pi / grid.Ly) ** 2
    eps = params.epsilon
    zero = RealField(grid, np.zeros(grid.shape))
    if kind == "taylor_green":
        rate = (params.nu1 + eps) * k0x2 + (params.nu2 + eps) * k0y2
        omega = taylor_green_vorticity(grid) * math.exp(-rate * t)
        return state_from_fields(omega, zero, t)
    if kind == "magnetic_decay":
        rate = (params.eta2 + eps) * k0y2
        j = magnetic_decay_current(grid) * math.exp(-rate * t)
        return state_from_fields(zero, j, t)
    raise ValueError(f"unknown reference kind {kind!r}")
