"""
Randomized numerical checks of the functional inequalities behind the a
priori estimates.

Each check returns ``LHS / RHS`` with the unknown constant set to 1, so the
value is an empirical constant. Only ``interp_1d`` carries its explicit
constant ``sqrt(2)`` in the right side, making ``ratio <= 1`` a hard bound.

On the torus a vanishing point replaces decay at infinity:

* ``interp_1d`` needs every x-line of ``F`` to have zero mean;
* ``slice_sup`` needs every y-line of ``g`` to have zero mean;
* ``trilinear_aniso`` is most meaningful with ``g`` as in ``slice_sup`` and
  ``h`` as in ``interp_1d`` (campaigns enforce this).

Norms use equal-weight collocation sums; ``W^{s,p}`` norms are the sum of
``L^p`` norms of all derivatives up to order ``s``.
"""

from dataclasses import asdict, dataclass
from functools import lru_cache
import json
import math

import numpy as np

from . import kernels
from .config import ConfigError, parse_kv
from .spectral import RealField, make_grid

__all__ = [
    "KINDS",
    "DegenerateInputError",
    "RandomFieldSpec",
    "InequalityReport",
    "sample_field",
    "remove_line_means",
    "check_inequality",
    "run_campaign",
    "parse_campaign_config",
]

KINDS = (
    "trilinear_aniso", "interp_1d", "slice_sup", "dp_linfty_x", "dp_linfty_y",
    "log_sobolev", "ladyzhenskaya", "commutator",
)

LOG_SOBOLEV_Q = tuple(2.0**n for n in range(1, 9))  # 2, 4, ..., 256


class DegenerateInputError(ValueError):
    def __init__(self, detail=""):
        super().__init__("degenerate input" + (f": {detail}" if detail else ""))


@dataclass(frozen=True, eq=False)
class RandomFieldSpec:
    """Band-limited random trigonometric polynomial.

    Coefficients of modes ``|m_x|, |m_y| <= band_limit`` are complex Gaussians
    scaled by ``(1 + |m|)^(-spectrum_decay)``. They depend only on the seed and
    band limit, so the same spec on a finer grid samples the same function.
    """

    grid: object
    band_limit: int = 6
    spectrum_decay: float = 1.0
    seed: int = 0
    mean_zero: bool = True

    def __post_init__(self):
        if self.band_limit < 1:
            raise ValueError("band_limit must be >= 1")
        cutoff = min(self.grid.cutoff)
        if self.band_limit > cutoff:
            raise ValueError(f"band_limit {self.band_limit} exceeds dealias cutoff {cutoff}")
        if self.spectrum_decay < 0:
            raise ValueError("spectrum_decay must be >= 0")

    def with_seed(self, seed):
        return RandomFieldSpec(self.grid, self.band_limit, self.spectrum_decay, seed,
                               self.mean_zero)

    def on_grid(self, grid):
        return RandomFieldSpec(grid, self.band_limit, self.spectrum_decay, self.seed,
                               self.mean_zero)


def _coefficients(spec):
    B = spec.band_limit
    rng = np.random.default_rng(spec.seed)
    shape = (2 * B + 1, B + 1)
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    n = np.arange(-B, B + 1)[:, None]
    m = np.arange(B + 1)[None, :]
    c *= (1.0 + np.sqrt(n**2 + m**2)) ** (-spec.spectrum_decay)
    # m = 0 column must be Hermitian in n for a real field
    col = c[:, 0]
    col[:B] = np.conj(col[:B:-1])
    col[B] = col[B].real
    if spec.mean_zero:
        col[B] = 0.0
    return c


def sample_field(spec):
    """Deterministic real field drawn from ``spec``."""
    grid = spec.grid
    B = spec.band_limit
    c = _coefficients(spec)
    coeffs = np.zeros(grid.spectral_shape, dtype=np.complex128)
    rows = np.arange(-B, B + 1) % grid.nx
    coeffs[rows, : B + 1] = c
    return RealField(grid, grid.inverse(coeffs))


def remove_line_means(f, axis):
    """Subtract the mean of every line along ``axis`` ('x' or 'y')."""
    ax = {"x": 0, "y": 1}[axis]
    v = f.values - f.values.mean(axis=ax, keepdims=True)
    return RealField(f.grid, v)


# -- norms -------------------------------------------------------------------

@lru_cache(maxsize=64)
def _multipliers(grid, orders):
    ikx = 1j * grid.KX_odd
    iky = 1j * grid.KY_odd
    return np.stack([ikx**a * iky**b for a, b in orders])


def _stack_derivs(grid, coeffs, orders):
    """Collocation values of ``D^(a,b)`` applied to ``coeffs`` for each (a, b)."""
    return grid.inverse(_multipliers(grid, tuple(orders)) * coeffs)


def _lp(values, p, grid):
    return float(kernels.lp_norms(values, [p], grid.cell_area)[0])


def _l2(values, grid):
    return _lp(values, 2.0, grid)


def _multi(order_max):
    return [(a, s - a) for s in range(order_max + 1) for a in range(s, -1, -1)]


def _require_positive(value, what):
    if not (value > 0 and math.isfinite(value)):
        raise DegenerateInputError(f"{what} = {value}")


# -- checks ------------------------------------------------------------------

def trilinear_aniso(f, g, h):
    """``iint|fgh| / (||f|| ||g||^.5 ||g_y||^.5 ||h||^.5 ||h_x||^.5)``."""
    grid = f.grid
    lhs = grid.cell_area * kernels.abs_triple_sum(f.values, g.values, h.values)
    gy = _stack_derivs(grid, grid.forward(g.values), [(0, 1)])[0]
    hx = _stack_derivs(grid, grid.forward(h.values), [(1, 0)])[0]
    rhs = (_l2(f.values, grid) * math.sqrt(_l2(g.values, grid) * _l2(gy, grid))
           * math.sqrt(_l2(h.values, grid) * _l2(hx, grid)))
    _require_positive(rhs, "right-hand side")
    return lhs / rhs


def _line_mean_check(f, axis, kind):
    ax = {"x": 0, "y": 1}[axis]
    means = np.abs(f.values.mean(axis=ax))
    scale = float(np.abs(f.values).max())
    if scale > 0 and means.max() > 1e-10 * scale:
        raise ValueError(f"{kind} requires zero mean along every {axis}-line")


def interp_1d(F):
    """Worst x-line of ``sup|F| / (sqrt(2) (int F^2)^(1/4) (int F_x^2)^(1/4))``.

    Every x-line must have zero mean so that it vanishes somewhere; lines that
    are identically zero are skipped.
    """
    grid = F.grid
    _line_mean_check(F, "x", "interp_1d")
    Fx = _stack_derivs(grid, grid.forward(F.values), [(1, 0)])[0]
    sup = np.abs(F.values).max(axis=0)
    l2 = grid.dx * np.sum(F.values**2, axis=0)
    l2x = grid.dx * np.sum(Fx**2, axis=0)
    den = math.sqrt(2.0) * (l2 * l2x) ** 0.25
    live = den > 0
    if not live.any():
        raise DegenerateInputError("every line is constant")
    return float(np.max(sup[live] / den[live]))


def slice_sup(g):
    """``sup_y int|g|^2 dx / (||g||_2 ||g_y||_2)``; y-lines must have zero mean."""
    grid = g.grid
    _line_mean_check(g, "y", "slice_sup")
    gy = _stack_derivs(grid, grid.forward(g.values), [(0, 1)])[0]
    lhs = float(np.max(grid.dx * np.sum(g.values**2, axis=0)))
    rhs = _l2(g.values, grid) * _l2(gy, grid)
    _require_positive(rhs, "right-hand side")
    return lhs / rhs


def dp_linfty(f, axis="x"):
    """``||f||_inf / (||f|| + ||f_x|| + ||f_yy||)`` (axis 'x'); 'y' swaps roles."""
    grid = f.grid
    orders = [(1, 0), (0, 2)] if axis == "x" else [(0, 1), (2, 0)]
    d1, d2 = _stack_derivs(grid, grid.forward(f.values), orders)
    rhs = _l2(f.values, grid) + _l2(d1, grid) + _l2(d2, grid)
    _require_positive(rhs, "right-hand side")
    return float(np.abs(f.values).max()) / rhs


def log_sobolev(f, q_ladder=LOG_SOBOLEV_Q):
    """``||f||_inf / (max_q ||f||_q/sqrt(q) * ln(e + ||f||_{H^2})^(1/2))``."""
    grid = f.grid
    ladder = [float(q) for q in q_ladder]
    norms = kernels.lp_norms(f.values, ladder + [math.inf], grid.cell_area)
    sup_q = max(n / math.sqrt(q) for n, q in zip(norms[:-1], ladder))
    coeffs = grid.forward(f.values)
    h2 = math.sqrt(grid.l2sq(coeffs, (1.0 + grid.K2) ** 2))
    rhs = sup_q * math.sqrt(math.log(math.e + h2))
    _require_positive(rhs, "right-hand side")
    return float(norms[-1]) / rhs


def ladyzhenskaya(f):
    """``||f||_4 / (||f||_2^(1/2) ||grad f||_2^(1/2))``."""
    grid = f.grid
    fx, fy = _stack_derivs(grid, grid.forward(f.values), [(1, 0), (0, 1)])
    rhs = math.sqrt(_l2(f.values, grid) * _l2(np.hypot(fx, fy), grid))
    _require_positive(rhs, "right-hand side")
    return _lp(f.values, 4.0, grid) / rhs


_ORDERS = tuple(_multi(4))
_ORDER_INDEX = {o: i for i, o in enumerate(_ORDERS)}
ALL_BETAS = ((3, 0), (2, 1), (1, 2), (0, 3))


def _check_betas(betas):
    betas = ALL_BETAS if betas is None else tuple(tuple(b) for b in betas)
    for b in betas:
        if len(b) != 2 or min(b) < 0 or sum(b) != 3:
            raise ValueError(f"beta must be a 2D multi-index of order 3, got {b}")
    return betas


def _derivative_tables(f1, f2, g):
    """All derivatives up to order 4 of ``(f1, f2)`` and ``g`` in collocation space."""
    grid = f1.grid
    fh = np.stack([grid.forward(f1.values), grid.forward(f2.values)])
    Df = _stack_derivs(grid, fh[:, None], _ORDERS)  # (2, n_orders, nx, ny)
    Dg = _stack_derivs(grid, grid.forward(g.values), _ORDERS)
    return Df, Dg


def _commutator_values(Df, Dg, beta):
    """Pointwise ``[D^beta, f.grad] g`` from the Leibniz expansion."""
    idx = _ORDER_INDEX
    a, b = beta
    total = np.zeros(Dg.shape[1:])
    for c in range(a + 1):
        for d in range(b + 1):
            if c == d == 0:
                continue
            coef = math.comb(a, c) * math.comb(b, d)
            ra, rb = a - c, b - d
            gx = Dg[idx[(ra + 1, rb)]]
            gy = Dg[idx[(ra, rb + 1)]]
            total += coef * (Df[0, idx[(c, d)]] * gx + Df[1, idx[(c, d)]] * gy)
    return total


def commutator_lhs(f1, f2, g, beta, p=2.0):
    """``||[D^beta, f.grad] g||_p`` for one multi-index ``beta`` with ``|beta| = 3``."""
    (beta,) = _check_betas([beta])
    Df, Dg = _derivative_tables(f1, f2, g)
    return _lp(_commutator_values(Df, Dg, beta), float(p), f1.grid)


def _exponent(p, name, open_upper=False):
    p = float(p)
    lo_ok = p > 1.0
    hi_ok = math.isfinite(p) if open_upper else True
    if not (lo_ok and hi_ok):
        raise ValueError(f"incompatible exponents: {name}={p}")
    return p


def commutator(f1, f2, g, p=2.0, p1=8.0, p2=None, p3=8.0, p4=None, betas=None):
    """Commutator estimate for ``[D^beta, f.grad] g`` with ``|beta| = 3``.

    ``f = (f1, f2)`` is a vector field and ``g`` a scalar. The commutator is
    expanded by the Leibniz rule, ``sum_{0 < gamma <= beta} C(beta, gamma)
    D^gamma f . grad D^(beta-gamma) g``, and evaluated pointwise. The left
    side is the largest ``L^p`` norm over ``betas`` (default: all four).
    Missing ``p2``/``p4`` are solved from the Hoelder relations.

    Raises:
        ValueError: "incompatible exponents" when the relations fail.
    """
    p = _exponent(p, "p", open_upper=True)
    p1 = _exponent(p1, "p1")
    p3 = _exponent(p3, "p3", open_upper=True)
    inv2 = 1.0 / p - 1.0 / p1 if p2 is None else 1.0 / float(p2)
    inv4 = 1.0 / p - 1.0 / p3 if p4 is None else 1.0 / float(p4)
    if inv2 <= 0 or inv4 < 0:
        raise ValueError("incompatible exponents: need 1/p > 1/p1 and 1/p >= 1/p3")
    p2 = _exponent(1.0 / inv2, "p2", open_upper=True)
    p4 = math.inf if inv4 == 0 else _exponent(1.0 / inv4, "p4")
    if (abs(1.0 / p - 1.0 / p1 - 1.0 / p2) > 1e-12
            or abs(1.0 / p - 1.0 / p3 - 1.0 / p4) > 1e-12):
        raise ValueError("incompatible exponents: 1/p != 1/p1 + 1/p2 or 1/p3 + 1/p4")

    betas = _check_betas(betas)
    grid = f1.grid
    Df, Dg = _derivative_tables(f1, f2, g)
    lhs = max(_lp(_commutator_values(Df, Dg, beta), p, grid) for beta in betas)
    index = _ORDER_INDEX

    def mag(*arrs):
        return np.sqrt(sum(a * a for a in arrs))

    grad_f = mag(Df[0, index[(1, 0)]], Df[0, index[(0, 1)]],
                 Df[1, index[(1, 0)]], Df[1, index[(0, 1)]])

    def grad_g(a, b):
        return mag(Dg[index[(a + 1, b)]], Dg[index[(a, b + 1)]])

    w2 = sum(_lp(grad_g(a, b), p2, grid) for a, b in _multi(2))
    w3 = sum(_lp(mag(Df[0, index[o]], Df[1, index[o]]), p3, grid) for o in _multi(3))
    rhs = _lp(grad_f, p1, grid) * w2 + w3 * _lp(grad_g(0, 0), p4, grid)
    _require_positive(rhs, "right-hand side")
    return lhs / rhs


_CHECKS = {
    "trilinear_aniso": (trilinear_aniso, 3),
    "interp_1d": (interp_1d, 1),
    "slice_sup": (slice_sup, 1),
    "dp_linfty_x": (lambda f: dp_linfty(f, "x"), 1),
    "dp_linfty_y": (lambda f: dp_linfty(f, "y"), 1),
    "log_sobolev": (log_sobolev, 1),
    "ladyzhenskaya": (ladyzhenskaya, 1),
    "commutator": (commutator, 3),
}


def check_inequality(kind, *inputs, **options):
    """Evaluate one inequality; returns ``LHS/RHS`` (see module docstring).

    Raises:
        DegenerateInputError: when the right side vanishes.
        ValueError: unknown kind, wrong arity, or violated input requirements.
    """
    if kind not in _CHECKS:
        raise ValueError(f"unknown inequality kind {kind!r}; expected one of {KINDS}")
    fn, arity = _CHECKS[kind]
    if len(inputs) != arity:
        raise ValueError(f"{kind} takes {arity} field(s), got {len(inputs)}")
    return fn(*inputs, **options)


# -- campaigns ---------------------------------------------------------------

@dataclass(frozen=True)
class InequalityReport:
    kind: str
    n_samples: int
    max_ratio: float
    median_ratio: float
    argmax_seed: int
    resolution: tuple
    n_degenerate: int = 0
    band_limit: int = 0
    spectrum_decay: float = 0.0
    seed: int = 0

    def to_json(self):
        d = asdict(self)
        d["resolution"] = list(self.resolution)
        return json.dumps(d, indent=2, sort_keys=True)


def derive_seed(*parts):
    """Stable 63-bit seed from integer parts (independent of grid size)."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def campaign_inputs(kind, family, sample_seed):
    """Input fields of one campaign sample, with per-kind vanishing-point projections."""
    _, arity = _CHECKS[kind]
    fields = [sample_field(family.with_seed(derive_seed(sample_seed, k))) for k in range(arity)]
    if kind == "interp_1d":
        fields[0] = remove_line_means(fields[0], "x")
    elif kind == "slice_sup":
        fields[0] = remove_line_means(fields[0], "y")
    elif kind == "trilinear_aniso":
        fields[1] = remove_line_means(fields[1], "y")
        fields[2] = remove_line_means(fields[2], "x")
    return fields


def campaign_ratios(kind, family, n_samples, **options):
    """Per-sample ``(seed, ratio)``; degenerate samples get ratio ``None``."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    out = []
    for i in range(n_samples):
        s = derive_seed(family.seed, i)
        try:
            ratio = check_inequality(kind, *campaign_inputs(kind, family, s), **options)
        except DegenerateInputError:
            ratio = None
        out.append((s, ratio))
    return out


def run_campaign(kind, family, n_samples, **options):
    """Sample ``n_samples`` input tuples from ``family`` and summarize the ratios.

    Raises:
        ValueError: if every sample is degenerate.
    """
    results = campaign_ratios(kind, family, n_samples, **options)
    good = [(s, r) for s, r in results if r is not None]
    if not good:
        raise ValueError(f"all {n_samples} samples of {kind} were degenerate")
    ratios = np.array([r for _, r in good])
    imax = int(np.argmax(ratios))
    return InequalityReport(
        kind=kind,
        n_samples=n_samples,
        max_ratio=float(ratios[imax]),
        median_ratio=float(np.median(ratios)),
        argmax_seed=good[imax][0],
        resolution=(family.grid.nx, family.grid.ny),
        n_degenerate=n_samples - len(good),
        band_limit=family.band_limit,
        spectrum_decay=family.spectrum_decay,
        seed=family.seed,
    )


def _kind(text):
    text = text.strip()
    if text not in KINDS:
        raise ValueError(f"expected one of {', '.join(KINDS)}")
    return text


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


_CAMPAIGN_PARSERS = {
    "kind": _kind, "n_samples": _pos_int, "nx": int, "ny": int,
    "band_limit": _pos_int, "alpha": float, "seed": int,
    "mean_zero": lambda t: t.strip().lower() in ("1", "true", "yes", "on"),
    "p": float, "p1": float, "p3": float,
}


def parse_campaign_config(text):
    """Parse a campaign ``key=value`` file into ``(kind, family, n_samples, options)``."""
    entries = parse_kv(text, _CAMPAIGN_PARSERS)
    values = {k: v for k, (v, _) in entries.items()}
    if "kind" not in values:
        raise ConfigError("missing required key: kind")
    try:
        grid = make_grid(values.get("nx", 128), values.get("ny", 128))
        family = RandomFieldSpec(grid, values.get("band_limit", 6), values.get("alpha", 1.0),
                                 values.get("seed", 0), values.get("mean_zero", True))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    options = {k: values[k] for k in ("p", "p1", "p3") if k in values}
    if options and values["kind"] != "commutator":
        raise ConfigError("p, p1, p3 apply only to kind=commutator")
    return values["kind"], family, values.get("n_samples", 1000), options
