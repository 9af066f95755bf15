"""Multi-run experiments: axis-swap symmetry and epsilon refinement."""

from dataclasses import replace
import math

import numpy as np

from .runner import build_initial_state, config_grid, integrate
from .solver import MhdParams, magnetic, state_from_vectors, velocity
from .spectral import RealField


def swap_params(params):
    """Coefficients under the axis swap: ``(nu1, nu2, eta1, eta2) -> (nu2, nu1, eta2, eta1)``."""
    return MhdParams(params.nu2, params.nu1, params.eta2, params.eta1, params.epsilon)


def swap_state(state):
    """Apply ``U1(x,y) = u2(y,x), U2(x,y) = u1(y,x)`` (and likewise for ``b``).

    The map is an involution. It is applied to the vector fields, whose curls
    then become the new state; the scalar curls come out as ``-omega(y,x)``.
    """
    grid = state.grid
    if grid.nx != grid.ny or grid.Lx != grid.Ly:
        raise ValueError("swap symmetry needs a square grid with Lx == Ly")
    u1, u2 = velocity(state)
    b1, b2 = magnetic(state)
    T = lambda f: RealField(grid, f.values.T)
    return state_from_vectors(T(u2), T(u1), T(b2), T(b1), state.t)


def _field_l2(grid, coeffs):
    return math.sqrt(grid.l2sq(coeffs))


def swap_symmetry_experiment(config, initial=None):
    """Largest ``||omega diff||_2 + ||j diff||_2`` between a run and the swapped run.

    Run (i) uses ``config.params`` on the configured data; run (ii) uses the
    swapped coefficients on swapped data and is swapped back for comparison at
    every output time. For ``mixed_case_B`` run (ii) is ``mixed_case_A``.

    Raises:
        ValueError: for a non-square grid.
    """
    grid = config_grid(config)
    if grid.nx != grid.ny or grid.Lx != grid.Ly:
        raise ValueError(f"swap symmetry needs a square grid, got {grid.nx}x{grid.ny}, "
                         f"Lx={grid.Lx:g}, Ly={grid.Ly:g}")
    s1 = build_initial_state(config, grid) if initial is None else initial
    s2 = swap_state(s1)
    p1 = config.params
    p2 = swap_params(p1)
    args = (config.dt, config.t_end, config.interval, config.cfl_max)
    worst = 0.0
    for a, b in zip(integrate(s1, p1, *args), integrate(s2, p2, *args)):
        back = swap_state(b)
        dev = (_field_l2(grid, a.omega_hat.coeffs - back.omega_hat.coeffs)
               + _field_l2(grid, a.j_hat.coeffs - back.j_hat.coeffs))
        worst = max(worst, dev)
    return worst


def _final_state(state, params, config):
    for state in integrate(state, params, config.dt, config.t_end, None, config.cfl_max):
        pass
    return state


def _validate_ladder(eps_ladder):
    ladder = [float(e) for e in eps_ladder]
    if len(ladder) < 2:
        raise ValueError("eps_ladder needs at least 2 entries")
    if any(not (e > 0 and math.isfinite(e)) for e in ladder):
        raise ValueError("eps_ladder entries must be positive")
    if any(b > a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("eps_ladder must be non-increasing")
    return ladder


def epsilon_refinement_experiment(config, eps_ladder=None):
    """Distances between consecutive regularized solutions along an epsilon ladder.

    For each ``eps`` the data is mollified at width ``eps`` and evolved with
    extra viscosity and resistivity ``eps``. Distances are
    ``sqrt(||u - u'||^2 + ||b - b'||^2)`` at ``t_end``.

    Returns:
        list of ``(eps, distance to the next ladder entry)``.

    Raises:
        ValueError: if the ladder is invalid or the parameters are not of
            ``magnetic_only`` form (``nu1 = nu2 = 0``, ``eta1 = eta2``).
    """
    ladder = _validate_ladder(config.eps_ladder if eps_ladder is None else eps_ladder)
    p = config.params
    if not (p.nu1 == 0 and p.nu2 == 0 and p.eta1 == p.eta2):
        raise ValueError("epsilon refinement runs the magnetic_only system")
    grid = config_grid(config)
    finals = {}
    for eps in ladder:
        if eps not in finals:
            s0 = build_initial_state(config, grid, mollifier_epsilon=eps)
            finals[eps] = _final_state(s0, p.with_epsilon(eps), config)
    out = []
    for a, b in zip(ladder, ladder[1:]):
        dw = finals[a].omega_hat.coeffs - finals[b].omega_hat.coeffs
        dj = finals[a].j_hat.coeffs - finals[b].j_hat.coeffs
        # ||u||^2 = sum |omega_hat|^2 / |k|^2 for mean-zero divergence-free u
        d2 = grid.l2sq(np.stack([dw, dj]), grid.inv_K2).sum()
        out.append((a, math.sqrt(float(d2))))
    return out


def with_overrides(config, preset=None, seed=None):
    """Config with a CLI-style preset and/or seed override applied."""
    if preset is not None:
        config = config.with_preset(preset)
    if seed is not None:
        config = replace(config, seed=seed)
    return config
