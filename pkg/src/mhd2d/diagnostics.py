"""
Norms, dissipation integrals and a priori bound monitors.

Every squared norm recorded here is a weighted quadratic form in the
coefficients of ``omega`` or ``j``; for instance ``||u_y||^2`` is
``area * sum ky^2/|k|^2 |omega_hat|^2``. Time integrals of these quantities
are advanced between consecutive records with the endpoint-corrected
trapezoidal rule

    A_n = A_{n-1} + h/2 (f_{n-1} + f_n) + h^2/12 (f'_{n-1} - f'_n),

where the rates ``f'`` are evaluated exactly from the solver tendencies. The
correction makes the accumulators fourth-order accurate in the record spacing
so budget residuals converge at the time integrator's order.
"""

import csv
from dataclasses import dataclass, field
import io
import json
import math
from types import MappingProxyType

import numpy as np

from . import kernels
from .solver import BlowUpError, MhdParams, rhs

__all__ = [
    "DEFAULT_P_LADDER",
    "ACCUM_KEYS",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "record_state",
    "energy_budget_residual",
    "bound_monitor",
    "bound_monitor_series",
    "regularity_criterion",
    "regularity_ladder",
]

DEFAULT_P_LADDER = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)

# name -> (source field, weight builder)
_QUADRATIC = {
    "u": ("w", lambda g: g.inv_K2),
    "b": ("j", lambda g: g.inv_K2),
    "omega": ("w", None),
    "j": ("j", None),
    "u_x": ("w", lambda g: g.KX**2 * g.inv_K2),
    "u_y": ("w", lambda g: g.KY**2 * g.inv_K2),
    "b_x": ("j", lambda g: g.KX**2 * g.inv_K2),
    "b_y": ("j", lambda g: g.KY**2 * g.inv_K2),
    "grad_u": ("w", lambda g: g.K2 * g.inv_K2),
    "grad_b": ("j", lambda g: g.K2 * g.inv_K2),
    "omega_x": ("w", lambda g: g.KX**2),
    "omega_y": ("w", lambda g: g.KY**2),
    "j_x": ("j", lambda g: g.KX**2),
    "j_y": ("j", lambda g: g.KY**2),
    "grad_omega": ("w", lambda g: g.K2),
    "grad_j": ("j", lambda g: g.K2),
    "grad_omega_x": ("w", lambda g: g.KX**2 * g.K2),
    "grad_omega_y": ("w", lambda g: g.KY**2 * g.K2),
    "grad_j_x": ("j", lambda g: g.KX**2 * g.K2),
    "grad_j_y": ("j", lambda g: g.KY**2 * g.K2),
    "potential": ("j", lambda g: g.inv_K2**2),
}

# Time-integrated squared norms, in CSV column order.
ACCUM_KEYS = (
    "u_y", "b_x", "omega_y", "j_x", "grad_b", "grad_j", "grad_omega_y", "grad_j_x",
    "u_x", "b_y", "grad_u", "omega_x", "j_y", "grad_omega_x", "grad_j_y", "j",
)

NORM_COLUMNS = (
    "l2_u", "l2_b", "l2_omega", "l2_j", "l2_grad_omega", "l2_grad_j",
    "l2_omega_y", "l2_j_x", "l2_u_y", "l2_b_x", "l2_grad_b",
)


def _weights(grid):
    cache = getattr(grid, "_diag_weights", None)
    if cache is None:
        cache = {name: (src, None if build is None else build(grid))
                 for name, (src, build) in _QUADRATIC.items()}
        object.__setattr__(grid, "_diag_weights", cache)
    return cache


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time-stamped snapshot of norms, accumulators and invariants."""

    t: float
    l2_u: float
    l2_b: float
    l2_omega: float
    l2_j: float
    l2_grad_omega: float
    l2_grad_j: float
    l2_omega_y: float
    l2_j_x: float
    l2_u_y: float
    l2_b_x: float
    l2_grad_b: float
    X: float
    energy: float
    cross_helicity: float
    msq_potential: float
    accum: MappingProxyType
    grad_u_lp: MappingProxyType
    blowup: bool = False
    # squared integrands and their time derivatives, kept for the next record
    integrands: MappingProxyType = field(default=MappingProxyType({}), repr=False)
    rates: MappingProxyType = field(default=MappingProxyType({}), repr=False)

    @property
    def grad_energy(self):
        """``||grad omega||^2 + ||grad j||^2``."""
        return self.l2_grad_omega**2 + self.l2_grad_j**2


def record_state(state, params, prev=None, p_ladder=DEFAULT_P_LADDER):
    """Snapshot every monitored quantity of ``state``.

    Accumulators start at zero when ``prev`` is ``None`` and otherwise advance
    from ``prev`` with the endpoint-corrected trapezoidal rule. Non-finite
    tendencies or norms set ``blowup`` instead of raising.
    """
    grid = state.grid
    coeffs = {"w": state.omega_hat.coeffs, "j": state.j_hat.coeffs}
    blowup = False
    try:
        dw, dj = rhs(state, params)
        tend = {"w": dw.coeffs, "j": dj.coeffs}
    except BlowUpError:
        blowup = True
        tend = {"w": np.zeros_like(coeffs["w"]), "j": np.zeros_like(coeffs["j"])}

    area2 = 2.0 * grid.area
    sq = {}
    rates = {}
    for name, (src, weight) in _weights(grid).items():
        c = coeffs[src]
        power = c.real**2 + c.imag**2
        cross = (np.conj(c) * tend[src]).real
        if weight is not None:
            power = power * weight
            cross = cross * weight
        sq[name] = grid.area * float(np.sum(power * grid.weights))
        rates[name] = area2 * float(np.sum(cross * grid.weights))

    if prev is None:
        accum = {k: 0.0 for k in ACCUM_KEYS}
    else:
        h = state.t - prev.t
        if not h > 0:
            raise ValueError(f"records must have increasing time ({prev.t} -> {state.t})")
        accum = {}
        for k in ACCUM_KEYS:
            accum[k] = (prev.accum[k] + 0.5 * h * (prev.integrands[k] + sq[k])
                        + h * h / 12.0 * (prev.rates[k] - rates[k]))

    # |grad u| pointwise (Frobenius), using d_y u2 = -d_x u1
    ikx = 1j * grid.KX_odd
    iky = 1j * grid.KY_odd
    psi = -grid.inv_K2 * coeffs["w"]
    u1 = -iky * psi
    u2 = ikx * psi
    g = grid.inverse(np.stack([ikx * u1, iky * u1, ikx * u2]))
    grad_mag = np.sqrt(2.0 * g[0] ** 2 + g[1] ** 2 + g[2] ** 2)
    ladder = tuple(float(p) for p in p_ladder)
    lp = kernels.lp_norms(grad_mag, ladder, grid.cell_area) if ladder else []

    cross_h = grid.inner(coeffs["w"] * np.sqrt(grid.inv_K2), coeffs["j"] * np.sqrt(grid.inv_K2))
    values = [sq[k] for k in sq] + [cross_h] + list(lp) + list(accum.values())
    if not all(math.isfinite(v) for v in values):
        blowup = True

    return DiagnosticsRecord(
        t=float(state.t),
        l2_u=math.sqrt(sq["u"]),
        l2_b=math.sqrt(sq["b"]),
        l2_omega=math.sqrt(sq["omega"]),
        l2_j=math.sqrt(sq["j"]),
        l2_grad_omega=math.sqrt(sq["grad_omega"]),
        l2_grad_j=math.sqrt(sq["grad_j"]),
        l2_omega_y=math.sqrt(sq["omega_y"]),
        l2_j_x=math.sqrt(sq["j_x"]),
        l2_u_y=math.sqrt(sq["u_y"]),
        l2_b_x=math.sqrt(sq["b_x"]),
        l2_grad_b=math.sqrt(sq["grad_b"]),
        X=sq["omega"] + sq["j"],
        energy=sq["u"] + sq["b"],
        cross_helicity=cross_h,
        msq_potential=sq["potential"],
        accum=MappingProxyType(accum),
        grad_u_lp=MappingProxyType(dict(zip(ladder, (float(v) for v in lp)))),
        blowup=blowup,
        integrands=MappingProxyType({k: sq[k] for k in ACCUM_KEYS}),
        rates=MappingProxyType({k: rates[k] for k in ACCUM_KEYS}),
    )


@dataclass
class DiagnosticsSeries:
    """Ordered records plus run metadata (params, grid, dt)."""

    records: list = field(default_factory=list)
    params: MhdParams = field(default_factory=MhdParams)
    grid_shape: tuple = (0, 0)
    dt: float = 0.0
    failed: bool = False
    failure: str = ""
    metadata: dict = field(default_factory=dict)

    def append(self, record):
        if self.records and not record.t > self.records[-1].t:
            raise ValueError("series times must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    def column(self, name):
        if name.startswith("accum_"):
            key = name[len("accum_"):]
            return np.array([r.accum[key] for r in self.records])
        return np.array([getattr(r, name) for r in self.records])

    def p_ladder(self):
        return tuple(self.records[0].grad_u_lp) if self.records else ()

    def csv_columns(self):
        cols = ["t", *NORM_COLUMNS, "X", "energy", "cross_helicity", "msq_potential"]
        cols += [f"accum_{k}" for k in ACCUM_KEYS]
        cols += [f"grad_u_L{_fmt_p(p)}" for p in self.p_ladder()]
        cols.append("blowup")
        return cols

    def to_csv(self, stream=None):
        """Write the series as CSV (header line first); returns the text if no stream."""
        own = stream is None
        if own:
            stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self.csv_columns())
        for r in self.records:
            row = [r.t] + [getattr(r, c) for c in NORM_COLUMNS]
            row += [r.X, r.energy, r.cross_helicity, r.msq_potential]
            row += [r.accum[k] for k in ACCUM_KEYS]
            row += list(r.grad_u_lp.values())
            writer.writerow([_fmt(v) for v in row] + [int(r.blowup)])
        return stream.getvalue() if own else None


def _fmt(v):
    return repr(float(v))


def _fmt_p(p):
    return "inf" if math.isinf(p) else f"{p:g}"


# -- analysis ----------------------------------------------------------------

def _series_params(series, params):
    return series.params if params is None else params


def budget_lhs(series, params=None):
    """Energy plus coefficient-weighted dissipation integrals, per record."""
    p = _series_params(series, params)
    e = series.column("energy")
    a = lambda k: series.column(f"accum_{k}")
    lhs = e + 2.0 * (p.nu1 * a("u_x") + p.nu2 * a("u_y") + p.eta1 * a("b_x") + p.eta2 * a("b_y"))
    if p.epsilon:
        lhs = lhs + 2.0 * p.epsilon * (a("grad_u") + a("grad_b"))
    return lhs


def energy_budget_residual(series, params=None):
    """``max_t |LHS(t) - LHS(0)| / LHS(0)`` for the energy identity."""
    if not len(series):
        raise ValueError("empty series")
    lhs = budget_lhs(series, params)
    if lhs[0] == 0.0:
        return 0.0 if np.all(lhs == 0.0) else math.inf
    return float(np.max(np.abs(lhs - lhs[0])) / lhs[0])


def bound_monitor_series(series, which, params=None):
    """Per-record ratio of a bound's left side to its right side.

    ``prop21``: ``[X + sum coeff * int ||d omega||^2, ||d j||^2] / X(0)`` using the
    directional derivatives each coefficient damps (for ``mixed_case_A`` this is
    ``X + nu int ||omega_y||^2 + eta int ||j_x||^2``).
    ``prop22``: the same with gradients of omega and j.
    ``prop33``: ``[X + eta int ||grad j||^2] / [X(0) exp(16/eta int ||j||^2)]``,
    which requires ``eta1 == eta2 > 0``.

    Raises:
        ValueError: if the reference quantity at t=0 is zero, or for prop33
            when the magnetic diffusion is not isotropic and positive.
    """
    if not len(series):
        raise ValueError("empty series")
    p = _series_params(series, params)
    a = lambda k: series.column(f"accum_{k}")
    X = series.column("X")
    if which == "prop21":
        num = X + p.nu1 * a("omega_x") + p.nu2 * a("omega_y") + p.eta1 * a("j_x") + p.eta2 * a("j_y")
        den = np.full_like(num, X[0])
    elif which == "prop22":
        G = np.array([r.grad_energy for r in series.records])
        num = (G + p.nu1 * a("grad_omega_x") + p.nu2 * a("grad_omega_y")
               + p.eta1 * a("grad_j_x") + p.eta2 * a("grad_j_y"))
        den = np.full_like(num, G[0])
    elif which == "prop33":
        if not (p.eta1 > 0 and p.eta1 == p.eta2):
            raise ValueError("prop33 requires eta1 == eta2 > 0")
        eta = p.eta1
        num = X + eta * a("grad_j")
        with np.errstate(over="ignore"):
            den = X[0] * np.exp(16.0 / eta * a("j"))
    else:
        raise ValueError(f"unknown bound {which!r}")
    if den[0] == 0.0:
        raise ValueError(f"{which}: initial reference quantity is zero (ratio undefined)")
    return num / den


def bound_monitor(series, which, params=None):
    """Largest ratio returned by :func:`bound_monitor_series`."""
    return float(np.max(bound_monitor_series(series, which, params)))


def regularity_ladder(series, p_list=None):
    """``{p: p^(-1/2) * int_0^T ||grad u||_p dt}`` by the trapezoidal rule."""
    if not len(series):
        raise ValueError("empty series")
    stored = series.p_ladder()
    p_list = stored if p_list is None else tuple(float(p) for p in p_list)
    t = series.times
    out = {}
    for p in p_list:
        if p < 2:
            raise ValueError(f"p must be >= 2, got {p}")
        if p not in stored:
            raise ValueError(f"||grad u||_{p:g} was not recorded (ladder {stored})")
        vals = np.array([r.grad_u_lp[p] for r in series.records])
        integral = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(t))) if len(t) > 1 else 0.0
        out[p] = integral / math.sqrt(p)
    return out


def regularity_criterion(series, p_list=None):
    """Max over the p-ladder of the regularity functional (a lower bound of the sup)."""
    ladder = regularity_ladder(series, p_list)
    return max(ladder.values()) if ladder else 0.0


def summary(series):
    """JSON-ready dict of final monitors for a finished series."""
    out = {
        "t_final": series.records[-1].t if len(series) else 0.0,
        "n_records": len(series),
        "failed": series.failed,
        "failure": series.failure,
        "params": vars(series.params).copy(),
        "grid": list(series.grid_shape),
        "dt": series.dt,
    }
    if not len(series):
        return out
    out["energy_budget_residual"] = energy_budget_residual(series)
    for which in ("prop21", "prop22", "prop33"):
        try:
            out[which] = bound_monitor(series, which)
        except ValueError:
            out[which] = None
    ladder = regularity_ladder(series)
    out["regularity_ladder"] = {_fmt_p(p): v for p, v in ladder.items()}
    out["regularity_criterion"] = max(ladder.values()) if ladder else 0.0
    out.update(series.metadata)
    return out


def summary_json(series):
    return json.dumps(summary(series), indent=2, sort_keys=True)
