"""Run configuration: TOML parsing, defaults and field-level validation."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .potential import FAMILIES

AUTO = "auto"


def _num(raw, key, path, default=None, *, positive=False, integer=False, allow_auto=False, lo=None):
    if key not in raw:
        if default is ConfigError:
            raise ConfigError("missing required value", f"{path}.{key}")
        return default
    v = raw[key]
    where = f"{path}.{key}"
    if allow_auto and v == AUTO:
        return AUTO
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", where)
    if integer:
        if int(v) != v:
            raise ConfigError(f"expected an integer, got {v!r}", where)
        v = int(v)
    else:
        v = float(v)
    if not math.isfinite(v):
        raise ConfigError("value must be finite", where)
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v!r}", where)
    if lo is not None and v < lo:
        raise ConfigError(f"must be >= {lo}, got {v!r}", where)
    return v


def _str(raw, key, path, default, choices):
    v = raw.get(key, default)
    if v not in choices:
        raise ConfigError(f"must be one of {list(choices)}, got {v!r}", f"{path}.{key}")
    return v


def _table(raw, key):
    v = raw.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError("expected a table", key)
    return v


def _list(raw, key, path, default, integer=False):
    v = raw.get(key, default)
    if not isinstance(v, list) or not v:
        raise ConfigError("expected a non-empty list", f"{path}.{key}")
    return [_num({key: x}, key, path, integer=integer) for x in v]


@dataclass(frozen=True)
class ModelConfig:
    s: float = 0.5
    d: int = 3
    hbar: float = 0.05
    family: str = "zero"
    kappa: float = 0.0
    rho: float = 0.5
    beta0: float = 1.0


@dataclass(frozen=True)
class DistortionConfig:
    beta: float = 0.05
    R: object = AUTO


@dataclass(frozen=True)
class GridConfig:
    r_min: object = AUTO
    r_max: float = 30.0
    n: int = 800


@dataclass(frozen=True)
class VirialConfig:
    E: float = -1.0
    mu: object = AUTO
    alpha: float | None = None
    gamma: float | None = None
    r_inner: float | None = None
    r_outer: float | None = None

    @property
    def auto(self):
        return self.mu == AUTO


@dataclass(frozen=True)
class ScanConfig:
    center_re: object = AUTO
    center_im: object = AUTO
    half_re: object = AUTO
    half_im: object = AUTO
    n_re: int = 21
    n_im: int = 11
    method: str = "banded"


@dataclass(frozen=True)
class WeylConfig:
    lam: tuple = (-1.0, 0.0, 1.0)
    n: tuple = (3, 4, 5, 6, 7)
    route: str = "exact"
    variable: str = "f"
    phase: str = "integral"
    offset_im: float = 0.1
    ell: int = 0


@dataclass(frozen=True)
class ClassicalConfig:
    r0: float = 1.0
    xi0: float = 1.0
    t_max: float = 5.0
    dt: float = 1e-3
    every: int = 10


@dataclass(frozen=True)
class DistortConfig:
    r_min: float = 0.1
    r_max: float = 10.0
    n: int = 101
    theta_re: float = 0.0
    theta_im: object = AUTO
    samples: int = 200


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    distortion: DistortionConfig = field(default_factory=DistortionConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    virial: VirialConfig = field(default_factory=VirialConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    weyl: WeylConfig = field(default_factory=WeylConfig)
    classical: ClassicalConfig = field(default_factory=ClassicalConfig)
    distort: DistortConfig = field(default_factory=DistortConfig)
    sectors: tuple = (0,)
    seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d["sectors"] = list(self.sectors)
        d["weyl"]["lam"] = list(self.weyl.lam)
        d["weyl"]["n"] = list(self.weyl.n)
        return {k: _drop_none(v) for k, v in d.items()}


def _drop_none(v):
    if isinstance(v, dict):
        return {k: _drop_none(x) for k, x in v.items() if x is not None}
    return v


def _model(raw):
    p = "model"
    pot = _table(raw, "potential")
    s = _num(raw, "s", p, 0.5, positive=True)
    if s > 1:
        raise ConfigError("must lie in (0, 1]", "model.s")
    family = _str(pot, "family", "model.potential", "zero", FAMILIES)
    m = ModelConfig(
        s=s,
        d=_num(raw, "d", p, 3, integer=True, lo=2),
        hbar=_num(raw, "hbar", p, 0.05, positive=True),
        family=family,
        kappa=_num(pot, "kappa", "model.potential", 0.0),
        rho=_num(pot, "rho", "model.potential", 0.5),
        beta0=_num(raw, "beta0", p, 1.0, positive=True),
    )
    if family in ("power-decay", "log-decay") and not 0 < m.rho < 1:
        raise ConfigError("must lie in (0, 1)", "model.potential.rho")
    if family == "power-decay" and s == 1:
        raise ConfigError("power-decay needs s < 1", "model.potential.family")
    if family == "log-decay" and s != 1:
        raise ConfigError("log-decay needs s = 1", "model.potential.family")
    return m


def _virial(raw, model):
    p = "virial"
    v = VirialConfig(
        E=_num(raw, "E", p, -1.0),
        mu=_num(raw, "mu", p, AUTO, positive=True, allow_auto=True),
        alpha=_num(raw, "alpha", p, None, positive=True),
        gamma=_num(raw, "gamma", p, None, positive=True),
        r_inner=_num(raw, "r_inner", p, None, positive=True),
        r_outer=_num(raw, "r_outer", p, None, positive=True),
    )
    if v.auto:
        if model.family != "zero" and model.kappa != 0:
            raise ConfigError("automatic window needs the zero potential", "virial.mu")
    else:
        for key in ("alpha", "gamma", "r_inner", "r_outer"):
            if getattr(v, key) is None:
                raise ConfigError("required when mu is given explicitly", f"virial.{key}")
        if not v.r_inner < v.r_outer:
            raise ConfigError("must be below virial.r_outer", "virial.r_inner")
    return v


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    known = {"model", "distortion", "grid", "virial", "scan", "weyl", "classical", "distort", "sectors", "seed"}
    for key in raw:
        if key not in known:
            raise ConfigError("unknown key", key)
    model = _model(_table(raw, "model"))

    dr = _table(raw, "distortion")
    dist = DistortionConfig(
        beta=_num(dr, "beta", "distortion", 0.05, positive=True),
        R=_num(dr, "R", "distortion", AUTO, positive=True, allow_auto=True),
    )
    if model.s == 1 and dist.R != AUTO and dist.R < 1:
        raise ConfigError("s = 1 needs R >= 1", "distortion.R")

    gr = _table(raw, "grid")
    grid = GridConfig(
        r_min=_num(gr, "r_min", "grid", AUTO, positive=True, allow_auto=True),
        r_max=_num(gr, "r_max", "grid", 30.0, positive=True),
        n=_num(gr, "n", "grid", 800, integer=True, lo=16),
    )
    if grid.r_min != AUTO and not grid.r_min < grid.r_max:
        raise ConfigError("must be below grid.r_max", "grid.r_min")
    if grid.n > 4002:
        raise ConfigError("dense solvers are limited to 4000 unknowns", "grid.n")

    virial = _virial(_table(raw, "virial"), model)

    sr = _table(raw, "scan")
    scan = ScanConfig(
        center_re=_num(sr, "center_re", "scan", AUTO, allow_auto=True),
        center_im=_num(sr, "center_im", "scan", AUTO, allow_auto=True),
        half_re=_num(sr, "half_re", "scan", AUTO, lo=0, allow_auto=True),
        half_im=_num(sr, "half_im", "scan", AUTO, lo=0, allow_auto=True),
        n_re=_num(sr, "n_re", "scan", 21, integer=True, lo=1),
        n_im=_num(sr, "n_im", "scan", 11, integer=True, lo=1),
        method=_str(sr, "method", "scan", "banded", ("banded", "svd")),
    )

    wr = _table(raw, "weyl")
    weyl = WeylConfig(
        lam=tuple(_list(wr, "lam", "weyl", [-1.0, 0.0, 1.0])),
        n=tuple(_list(wr, "n", "weyl", [3, 4, 5, 6, 7], integer=True)),
        route=_str(wr, "route", "weyl", "exact", ("exact", "grid")),
        variable=_str(wr, "variable", "weyl", "f", ("f", "r")),
        phase=_str(wr, "phase", "weyl", "integral", ("integral", "none")),
        offset_im=_num(wr, "offset_im", "weyl", 0.1),
        ell=_num(wr, "ell", "weyl", 0, integer=True, lo=0),
    )
    if min(weyl.n) < 1:
        raise ConfigError("dyadic indices must be >= 1", "weyl.n")

    cr = _table(raw, "classical")
    classical = ClassicalConfig(
        r0=_num(cr, "r0", "classical", 1.0, positive=True),
        xi0=_num(cr, "xi0", "classical", 1.0),
        t_max=_num(cr, "t_max", "classical", 5.0, positive=True),
        dt=_num(cr, "dt", "classical", 1e-3, positive=True),
        every=_num(cr, "every", "classical", 10, integer=True, lo=1),
    )

    tr = _table(raw, "distort")
    distort = DistortConfig(
        r_min=_num(tr, "r_min", "distort", 0.1, positive=True),
        r_max=_num(tr, "r_max", "distort", 10.0, positive=True),
        n=_num(tr, "n", "distort", 101, integer=True, lo=2),
        theta_re=_num(tr, "theta_re", "distort", 0.0),
        theta_im=_num(tr, "theta_im", "distort", AUTO, allow_auto=True),
        samples=_num(tr, "samples", "distort", 200, integer=True, lo=1),
    )
    if not distort.r_min < distort.r_max:
        raise ConfigError("must be below distort.r_max", "distort.r_min")

    sectors = tuple(int(x) for x in _list(raw, "sectors", "root", [0], integer=True))
    if min(sectors) < 0:
        raise ConfigError("angular momenta must be >= 0", "sectors")
    seed = _num(raw, "seed", "root", 0, integer=True, lo=0)
    return RunConfig(model, dist, grid, virial, scan, weyl, classical, distort, sectors, seed)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(raw)
