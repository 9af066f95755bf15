"""Driving a configured simulation: initial data, time loop and output files."""

import json
import math
import os

import numpy as np

from .checkpoint import write_checkpoint
from .diagnostics import DiagnosticsSeries, bound_monitor, record_state, summary
from .inequalities import RandomFieldSpec, derive_seed, sample_field
from .solver import (
    BlowUpError,
    MhdState,
    MollifierSpec,
    magnetic_decay_current,
    mollify_initial_data,
    state_from_fields,
    step,
    taylor_green_vorticity,
)
from .spectral import RealField, make_grid

PROP33_TOL = 1e-3

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICS = 4


def config_grid(config):
    return make_grid(config.nx, config.ny, config.Lx, config.Ly)


def _normalized(f, amplitude):
    rms = math.sqrt(float(np.mean(f.values**2)))
    if rms == 0.0:
        return f
    return RealField(f.grid, f.values * (amplitude / rms))


def initial_fields(config, grid=None):
    """Collocation ``(omega0, j0)`` before mollification.

    Analytic profiles are multiplied by ``amplitude``; random data is rescaled
    so each field has root-mean-square value ``amplitude``.
    """
    grid = config_grid(config) if grid is None else grid
    zero = RealField(grid, np.zeros(grid.shape))
    kind = config.initial_data
    a = config.amplitude
    if kind == "taylor_green":
        return taylor_green_vorticity(grid) * a, zero
    if kind == "magnetic_decay":
        return zero, magnetic_decay_current(grid) * a
    if kind == "tg_magnetic":
        return taylor_green_vorticity(grid) * a, magnetic_decay_current(grid) * a
    if kind == "random":
        spec = RandomFieldSpec(grid, config.band_limit, config.alpha, 0, True)
        w = sample_field(spec.with_seed(derive_seed(config.seed, 0)))
        j = sample_field(spec.with_seed(derive_seed(config.seed, 1)))
        return _normalized(w, a), _normalized(j, a)
    raise ValueError(f"unknown initial_data {kind!r}")


def build_initial_state(config, grid=None, mollifier_epsilon=None):
    """Initial state, mollified when ``mollifier_epsilon`` (or the config's) is positive."""
    omega, j = initial_fields(config, grid)
    eps = config.mollifier_epsilon if mollifier_epsilon is None else mollifier_epsilon
    if eps > 0:
        spec = MollifierSpec(eps)
        omega = mollify_initial_data(omega, spec)
        j = mollify_initial_data(j, spec)
    return state_from_fields(omega, j, 0.0)


def step_plan(dt, t_end):
    """Step sizes reaching ``t_end``: full steps of ``dt`` then one partial step."""
    n = int(math.floor(t_end / dt * (1 + 1e-12)))
    sizes = [dt] * n
    rest = t_end - n * dt
    if rest > 1e-12 * max(dt, t_end):
        sizes.append(rest)
    return sizes


def integrate(state, params, dt, t_end, interval=None, cfl_max=None):
    """Yield the initial state and then states at the output cadence, ending at ``t_end``.

    Times are set to ``n*dt`` rather than accumulated, so they carry no drift.
    """
    sizes = step_plan(dt, t_end)
    stride = max(1, int(round((interval or dt) / dt)))
    yield state
    t0 = state.t
    kwargs = {} if cfl_max is None else {"cfl_max": cfl_max}
    for n, h in enumerate(sizes, 1):
        state = step(state, params, h, **kwargs)
        t = t0 + (n * dt if h == dt else t_end)
        state = MhdState(state.omega_hat, state.j_hat, t)
        if n % stride == 0 or n == len(sizes):
            yield state


def run(config, initial=None, params=None):
    """Integrate ``config`` and collect diagnostics.

    Returns:
        ``(final_state, series)``. On blow-up the series is partial and marked
        failed, and ``final_state`` is the last state reached.

    Raises:
        CflError: if ``dt`` violates the advective bound.
    """
    grid = config_grid(config)
    state = build_initial_state(config, grid) if initial is None else initial
    params = config.params if params is None else params
    series = DiagnosticsSeries(params=params, grid_shape=(grid.nx, grid.ny), dt=config.dt)
    prev = None
    try:
        for state in integrate(state, params, config.dt, config.t_end,
                               config.interval, config.cfl_max):
            prev = record_state(state, params, prev, config.p_ladder)
            series.append(prev)
            if prev.blowup:
                raise BlowUpError("non-finite diagnostics", t=state.t)
    except BlowUpError as exc:
        series.failed = True
        t = state.t if exc.t is None else exc.t
        series.failure = f"blow-up at t={t:g}: {exc}"
    return state, series


def hard_monitors(series):
    """Hard-asserted monitors: ``{name: (value, passed)}``.

    Only the Groenwall bound with explicit constant qualifies; it applies when
    the magnetic diffusion is isotropic and positive.
    """
    p = series.params
    out = {}
    if len(series) and p.eta1 > 0 and p.eta1 == p.eta2:
        try:
            value = bound_monitor(series, "prop33")
        except ValueError:
            return out
        out["prop33"] = (value, bool(value <= 1.0 + PROP33_TOL))
    return out


def run_summary(series):
    data = summary(series)
    checks = hard_monitors(series)
    data["hard_monitors"] = {k: {"value": v, "passed": ok} for k, (v, ok) in checks.items()}
    data["passed"] = (not series.failed) and all(ok for _, ok in checks.values())
    return data


def main_run(config, output_dir=None):
    """Run ``config`` and write ``series.csv``, ``summary.json`` and optionally
    ``checkpoint.bin`` into ``output_dir``.

    Returns:
        ``(exit_status, summary_dict)``; status 0 iff no blow-up and all hard
        monitors pass.

    Raises:
        OSError: if the output directory cannot be created or written.
    """
    out = output_dir or config.output_dir or "."
    os.makedirs(out, exist_ok=True)
    state, series = run(config)
    data = run_summary(series)
    with open(os.path.join(out, "series.csv"), "w", newline="") as fh:
        series.to_csv(fh)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if config.checkpoint:
        write_checkpoint(os.path.join(out, "checkpoint.bin"), state)
    return (EXIT_OK if data["passed"] else EXIT_FAILED), data
