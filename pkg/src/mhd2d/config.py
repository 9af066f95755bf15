"""
Plain-text ``key=value`` run configuration.

Blank lines and ``#`` comments are ignored. Required keys are ``nx``, ``ny``,
``dt`` and ``t_end``. Dissipation is given either by ``preset`` (with ``nu``,
``eta``) or by the explicit coefficients ``nu1, nu2, eta1, eta2``; mixing the
two is an error. Lengths accept a trailing ``pi`` (``Lx=2pi``).

Defaults::

    Lx = Ly = 2pi        epsilon = 0           initial_data = random
    seed = 0             band_limit = 8        alpha = 1
    amplitude = 1        mollifier_epsilon = 0
    diagnostics_interval = dt                  p_ladder = 2,4,8,16,32,64
    cfl_max = 1.5        checkpoint = false    output_dir = (none)
    eps_ladder = 0.1,0.05,0.025,0.0125
"""

from dataclasses import dataclass, field, fields, replace
import math

from .solver import DEFAULT_CFL, PRESETS, MhdParams

INITIAL_DATA = ("taylor_green", "magnetic_decay", "tg_magnetic", "random")
REQUIRED = ("nx", "ny", "dt", "t_end")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    nx: int
    ny: int
    dt: float
    t_end: float
    Lx: float = 2 * math.pi
    Ly: float = 2 * math.pi
    preset: str = ""
    nu: float = 0.0
    eta: float = 0.0
    params: MhdParams = field(default_factory=MhdParams)
    initial_data: str = "random"
    seed: int = 0
    band_limit: int = 8
    alpha: float = 1.0
    amplitude: float = 1.0
    mollifier_epsilon: float = 0.0
    diagnostics_interval: float = 0.0
    p_ladder: tuple = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    cfl_max: float = DEFAULT_CFL
    checkpoint: bool = False
    output_dir: str = ""
    eps_ladder: tuple = (0.1, 0.05, 0.025, 0.0125)

    @property
    def interval(self):
        """Diagnostics cadence (defaults to every step)."""
        return self.diagnostics_interval or self.dt

    def with_preset(self, name, nu=None, eta=None):
        """Switch to a preset; without a previous preset, ``nu``/``eta`` default to
        the largest explicit viscosity/resistivity."""
        p = self.params
        if nu is None:
            nu = self.nu if self.preset else max(p.nu1, p.nu2)
        if eta is None:
            eta = self.eta if self.preset else max(p.eta1, p.eta2)
        params = MhdParams.preset(name, nu, eta, self.params.epsilon)
        return replace(self, preset=name, nu=nu, eta=eta, params=params)


def _parse_float(text):
    t = text.strip().lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*").strip()
        return (float(head) if head else 1.0) * math.pi
    return float(t)


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text):
    return tuple(_parse_float(v) for v in text.split(",") if v.strip())


def _parse_int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


_PARSERS = {
    "nx": _parse_int, "ny": _parse_int, "dt": _parse_float, "t_end": _parse_float,
    "Lx": _parse_float, "Ly": _parse_float, "preset": str.strip,
    "nu": _parse_float, "eta": _parse_float,
    "nu1": _parse_float, "nu2": _parse_float, "eta1": _parse_float, "eta2": _parse_float,
    "epsilon": _parse_float, "initial_data": str.strip, "seed": _parse_int,
    "band_limit": _parse_int, "alpha": _parse_float, "amplitude": _parse_float,
    "mollifier_epsilon": _parse_float, "diagnostics_interval": _parse_float,
    "p_ladder": _parse_floats, "cfl_max": _parse_float, "checkpoint": _parse_bool,
    "output_dir": str.strip, "eps_ladder": _parse_floats,
}


def parse_kv(text, parsers):
    """Parse ``key=value`` lines into ``{key: (value, line_number)}``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in parsers:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            out[key] = (parsers[key](value), lineno)
        except ValueError as exc:
            raise ConfigError(f"malformed value for {key}: {exc}", lineno) from None
    return out


def parse_config(text):
    """Validate ``key=value`` text into a :class:`RunConfig`.

    Raises:
        ConfigError: on unknown keys, malformed values or violated invariants,
            tagged with the offending line where one exists.
    """
    entries = parse_kv(text, _PARSERS)
    missing = [k for k in REQUIRED if k not in entries]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)} "
                          f"(required: {', '.join(REQUIRED)})")
    values = {k: v for k, (v, _) in entries.items()}
    line = {k: n for k, (_, n) in entries.items()}

    def check(key, ok, message):
        if key in values and not ok(values[key]):
            raise ConfigError(f"{key}={values[key]!r}: {message}", line[key])

    check("dt", lambda v: v > 0 and math.isfinite(v), "must be positive")
    check("t_end", lambda v: v >= 0 and math.isfinite(v), "must be nonnegative")
    for key in ("nx", "ny"):
        check(key, lambda v: v >= 8 and v % 2 == 0, "must be an even integer >= 8")
    for key in ("Lx", "Ly", "amplitude"):
        check(key, lambda v: v > 0, "must be positive")
    for key in ("nu", "eta", "nu1", "nu2", "eta1", "eta2", "epsilon",
                "mollifier_epsilon", "diagnostics_interval", "alpha"):
        check(key, lambda v: v >= 0, "must be nonnegative")
    check("preset", lambda v: v in PRESETS, f"expected one of {', '.join(PRESETS)}")
    check("initial_data", lambda v: v in INITIAL_DATA,
          f"expected one of {', '.join(INITIAL_DATA)}")
    check("band_limit", lambda v: v >= 1, "must be >= 1")
    check("p_ladder", lambda v: len(v) > 0 and all(p >= 2 for p in v), "entries must be >= 2")
    check("cfl_max", lambda v: v > 0, "must be positive")
    check("eps_ladder", lambda v: len(v) >= 2 and all(e > 0 for e in v),
          "needs >= 2 positive entries")
    check("seed", lambda v: v >= 0, "must be nonnegative")

    explicit = [k for k in ("nu1", "nu2", "eta1", "eta2") if k in values]
    epsilon = values.get("epsilon", 0.0)
    if "preset" in values:
        if explicit:
            raise ConfigError(f"{explicit[0]} conflicts with preset", line[explicit[0]])
        params = MhdParams.preset(values["preset"], values.get("nu", 0.0),
                                  values.get("eta", 0.0), epsilon)
    else:
        for key in ("nu", "eta"):
            if key in values:
                raise ConfigError(f"{key} requires a preset", line[key])
        params = MhdParams(values.get("nu1", 0.0), values.get("nu2", 0.0),
                           values.get("eta1", 0.0), values.get("eta2", 0.0), epsilon)

    kwargs = {k: v for k, v in values.items()
              if k not in ("nu1", "nu2", "eta1", "eta2", "epsilon")}
    cfg = RunConfig(params=params, **kwargs)
    cutoff = min(cfg.nx, cfg.ny) // 3
    if cfg.initial_data == "random" and cfg.band_limit > cutoff:
        raise ConfigError(f"band_limit={cfg.band_limit} exceeds dealias cutoff {cutoff}",
                          line.get("band_limit"))
    return cfg


def serialize_config(cfg):
    """Render a config as ``key=value`` text that parses back to an equal config."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in ("preset", "nu", "eta"):
            continue
        if f.name == "params":
            if cfg.preset:
                lines += [f"preset={cfg.preset}", f"nu={cfg.nu!r}", f"eta={cfg.eta!r}"]
            else:
                for k in ("nu1", "nu2", "eta1", "eta2"):
                    lines.append(f"{k}={getattr(value, k)!r}")
            lines.append(f"epsilon={value.epsilon!r}")
            continue
        if f.name == "output_dir" and not value:
            continue
        if isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name}={value}")
    return "\n".join(lines) + "\n"


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
