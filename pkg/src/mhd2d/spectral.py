"""
Periodic-torus spectral infrastructure.

Fields live on a uniform ``nx x ny`` collocation grid over ``[0, Lx) x [0, Ly)``
with array axis 0 along x and axis 1 along y. Spectral coefficients use the
real-to-complex layout of ``scipy.fft.rfft2`` (half spectrum along y), which
makes conjugate symmetry hold by construction. Transforms are normalized so
that the (0, 0) coefficient is the field average and

    f(x, y) = sum_k  f_hat[k] * exp(i k . x),

hence ``||f||_2^2 = Lx * Ly * sum_k |f_hat[k]|^2`` over the full spectrum.

Dealiasing follows the 2/3 rule on integer mode indices: a mode is kept iff
``|m| <= n // 3`` on both axes. Nyquist modes are always discarded.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.fft as sfft

from . import kernels

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "to_real",
    "spectral_derivative",
    "biot_savart",
    "dealias",
    "lp_norm",
    "hs_norm",
]

_AXES = {"x": 0, "y": 1, 0: 0, 1: 1}

# fft worker count is fixed so results do not depend on the host.
FFT_WORKERS = 1


def _readonly(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Collocation grid, wavenumber tables and dealias mask for the torus.

    Construct with :func:`make_grid`; the derived arrays are filled in
    ``__post_init__`` and are read-only.

    Attributes:
        nx, ny: collocation points per axis (even, >= 8).
        Lx, Ly: domain lengths.
        kx, ky: full signed wavenumber tables, ``2*pi/L * m``.
        kx_index, ky_index: the signed integer mode indices ``m``.
        KX, KY, K2: wavenumbers broadcast to the stored (half) layout.
        dealias_mask: boolean keep-mask in the stored layout.
        weights: Parseval multiplicity of each stored column.
    """

    nx: int
    ny: int
    Lx: float = 2 * math.pi
    Ly: float = 2 * math.pi

    kx: np.ndarray = field(init=False, repr=False)
    ky: np.ndarray = field(init=False, repr=False)
    kx_index: np.ndarray = field(init=False, repr=False)
    ky_index: np.ndarray = field(init=False, repr=False)
    KX: np.ndarray = field(init=False, repr=False)
    KY: np.ndarray = field(init=False, repr=False)
    KX_odd: np.ndarray = field(init=False, repr=False)
    KY_odd: np.ndarray = field(init=False, repr=False)
    K2: np.ndarray = field(init=False, repr=False)
    inv_K2: np.ndarray = field(init=False, repr=False)
    dealias_mask: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        for name, length in (("Lx", self.Lx), ("Ly", self.Ly)):
            if not (length > 0 and math.isfinite(length)):
                raise ValueError(f"{name} must be positive, got {length}")
        nx, ny = int(self.nx), int(self.ny)
        set_ = object.__setattr__
        set_(self, "nx", nx)
        set_(self, "ny", ny)
        set_(self, "Lx", float(self.Lx))
        set_(self, "Ly", float(self.Ly))

        mx = np.fft.fftfreq(nx, 1.0 / nx).astype(np.int64)
        my = np.fft.fftfreq(ny, 1.0 / ny).astype(np.int64)
        kx = 2 * np.pi / self.Lx * mx
        ky = 2 * np.pi / self.Ly * my
        nyh = ny // 2 + 1
        my_half = np.arange(nyh)
        ky_half = 2 * np.pi / self.Ly * my_half

        KX = np.broadcast_to(kx[:, None], (nx, nyh))
        KY = np.broadcast_to(ky_half[None, :], (nx, nyh))
        KX_odd = KX.copy()
        KX_odd[nx // 2, :] = 0.0
        KY_odd = KY.copy()
        KY_odd[:, ny // 2] = 0.0
        K2 = KX**2 + KY**2
        inv_K2 = np.zeros_like(K2)
        inv_K2[K2 > 0] = 1.0 / K2[K2 > 0]

        mask = (np.abs(mx)[:, None] <= nx // 3) & (my_half[None, :] <= ny // 3)

        weights = np.full(nyh, 2.0)
        weights[0] = 1.0
        weights[-1] = 1.0

        for name, value in (
            ("kx", kx), ("ky", ky), ("kx_index", mx), ("ky_index", my),
            ("KX", KX), ("KY", KY), ("KX_odd", KX_odd), ("KY_odd", KY_odd),
            ("K2", K2), ("inv_K2", inv_K2), ("dealias_mask", mask),
            ("weights", weights),
            ("x", np.arange(nx) * (self.Lx / nx)),
            ("y", np.arange(ny) * (self.Ly / ny)),
        ):
            set_(self, name, _readonly(value))

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def spectral_shape(self):
        return (self.nx, self.ny // 2 + 1)

    @property
    def cutoff(self):
        """Largest retained integer mode index per axis."""
        return (self.nx // 3, self.ny // 3)

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def area(self):
        return self.Lx * self.Ly

    def mesh(self):
        """Return ``(X, Y)`` coordinate arrays of shape ``(nx, ny)``."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def forward(self, values):
        return sfft.rfft2(values, norm="forward", workers=FFT_WORKERS)

    def inverse(self, coeffs):
        coeffs = np.asarray(coeffs)
        if coeffs.ndim == 2:
            return sfft.irfft2(coeffs, s=(self.nx, self.ny), norm="forward",
                               workers=FFT_WORKERS)
        # per-field loop: pocketfft's batched c2r is slower for strided batches
        flat = coeffs.reshape(-1, *coeffs.shape[-2:])
        out = np.empty((flat.shape[0], self.nx, self.ny))
        for i, c in enumerate(flat):
            out[i] = sfft.irfft2(c, s=(self.nx, self.ny), norm="forward",
                                 workers=FFT_WORKERS)
        return out.reshape(*coeffs.shape[:-2], self.nx, self.ny)

    def l2sq(self, coeffs, weight=None):
        """Squared L2 norm(s) from stored coefficients, optionally weighted per mode.

        Leading axes of ``coeffs`` are treated as a batch.
        """
        power = coeffs.real**2 + coeffs.imag**2
        if weight is not None:
            power = power * weight
        return self.area * np.sum(power * self.weights, axis=(-2, -1))

    def inner(self, a, b):
        """Real L2 inner product of two real fields given by coefficients."""
        prod = (a * np.conj(b)).real
        return self.area * float(np.sum(prod * self.weights))

    def __repr__(self):
        return f"Grid(nx={self.nx}, ny={self.ny}, Lx={self.Lx!r}, Ly={self.Ly!r})"


def make_grid(nx, ny, Lx=2 * math.pi, Ly=2 * math.pi):
    """Build a :class:`Grid`; raises ``ValueError`` on odd/small sizes or bad lengths."""
    return Grid(nx, ny, Lx, Ly)


@dataclass(frozen=True, eq=False)
class RealField:
    """A scalar field sampled on the collocation grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.isfinite(values).all():
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    def to_spectral(self):
        return to_spectral(self)

    def mean(self):
        return float(np.mean(self.values))

    def __add__(self, other):
        return RealField(self.grid, self.values + _values(other))

    def __sub__(self, other):
        return RealField(self.grid, self.values - _values(other))

    def __mul__(self, scalar):
        return RealField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.values)


def _values(other):
    return other.values if isinstance(other, RealField) else other


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A real scalar field held as half-spectrum Fourier coefficients."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != self.grid.spectral_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} != {self.grid.spectral_shape}")
        object.__setattr__(self, "coeffs", _readonly(coeffs))

    @property
    def mean(self):
        return float(self.coeffs[0, 0].real)

    def to_real(self):
        return to_real(self)

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


def to_spectral(f):
    return SpectralField(f.grid, f.grid.forward(f.values))


def to_real(f):
    return RealField(f.grid, f.grid.inverse(f.coeffs))


def derivative_multiplier(grid, axis, order):
    """``(i k_axis)**order`` in the stored layout.

    The Nyquist wavenumber is zeroed for every order, so composing first
    derivatives reproduces the higher-order multiplier exactly.
    """
    ax = _AXES.get(axis)
    if ax is None:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if int(order) != order or not 1 <= order <= 4:
        raise ValueError(f"order must be an integer in [1, 4], got {order}")
    k = grid.KX_odd if ax == 0 else grid.KY_odd
    return (1j * k) ** int(order)


def spectral_derivative(f, axis, order=1):
    """Exact spectral derivative of ``f`` along ``axis`` ('x' or 'y')."""
    return SpectralField(f.grid, f.coeffs * derivative_multiplier(f.grid, axis, order))


def check_mean_zero(coeffs, what="field"):
    c00 = abs(coeffs[0, 0])
    scale = float(np.abs(coeffs).max()) if coeffs.size else 0.0
    if c00 > 1e-12 * max(scale, 1e-300):
        raise ValueError(f"{what} must have zero mean (mean mode = {coeffs[0, 0]:.3e})")


def biot_savart_coeffs(grid, curl_hat):
    """Velocity coefficients ``(v1, v2) = (-d_y psi, d_x psi)`` with ``lap psi = curl``."""
    psi = -curl_hat * grid.inv_K2
    return -1j * grid.KY_odd * psi, 1j * grid.KX_odd * psi


def biot_savart(scalar_curl, mean_vector=(0.0, 0.0)):
    """Reconstruct a divergence-free vector field from its scalar curl.

    Solves ``lap psi = scalar_curl`` with mean-zero ``psi`` and returns the
    components of ``(-d_y psi, d_x psi) + mean_vector``.

    Raises:
        ValueError: if ``scalar_curl`` has a nonzero mean mode.
    """
    grid = scalar_curl.grid
    check_mean_zero(scalar_curl.coeffs, "scalar curl")
    v1, v2 = biot_savart_coeffs(grid, scalar_curl.coeffs)
    v1[0, 0] = mean_vector[0]
    v2[0, 0] = mean_vector[1]
    return SpectralField(grid, v1), SpectralField(grid, v2)


def dealias(f):
    """Zero every coefficient outside the 2/3-rule mask."""
    return SpectralField(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def lp_norm(f, p):
    """Collocation L^p norm ``(dx*dy*sum|f|^p)^(1/p)``; ``p = inf`` gives ``max|f|``."""
    if isinstance(f, SpectralField):
        f = to_real(f)
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    return float(kernels.lp_norms(f.values, [p], f.grid.cell_area)[0])


def hs_norm(f, s):
    """Sobolev norm ``(sum (1+|k|^2)^s |f_hat|^2 * area)^(1/2)``; ``s = 0`` is the L2 norm."""
    if isinstance(f, RealField):
        f = to_spectral(f)
    if not 0 <= s <= 4:
        raise ValueError(f"s must lie in [0, 4], got {s}")
    grid = f.grid
    return float(np.sqrt(grid.l2sq(f.coeffs, (1.0 + grid.K2) ** s)))
