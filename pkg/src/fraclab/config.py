"""Strict YAML experiment configuration.

A config has five blocks (``grid``, ``physics``, ``solver``, ``diagnostics``,
``output``); unknown keys anywhere are rejected.  Loading validates every
constant against the invariants of the module that consumes it, so a bad
value fails at load time with a ``block.field: message`` line.
"""

import hashlib
import json
from typing import List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .grid import Box, Disc, FarField, Interval, ScalarField, build_grid
from .potential import DoubleWell, make_prototype_well, verify_structural_assumptions

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "config_hash",
    "default_config",
    "build_problem_grid",
    "build_exterior",
    "build_forcing",
    "build_well",
]


class ConfigError(ValueError):
    """Raised for unreadable or invalid configs."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class OmegaConfig(_Strict):
    kind: Literal["interval", "box", "disc"]
    lo: Optional[Union[float, List[float]]] = None
    hi: Optional[Union[float, List[float]]] = None
    center: Optional[List[float]] = None
    radius: Optional[float] = None

    @model_validator(mode="after")
    def _shape(self):
        if self.kind in ("interval", "box") and (self.lo is None or self.hi is None):
            raise ValueError(f"{self.kind} needs lo and hi")
        if self.kind == "disc" and (self.center is None or self.radius is None):
            raise ValueError("disc needs center and radius")
        return self

    def build(self, dimension=None):
        if self.kind == "interval":
            return Interval(float(np.ravel(self.lo)[0]), float(np.ravel(self.hi)[0]))
        if self.kind == "box":
            return Box(tuple(np.ravel(self.lo).astype(float)), tuple(np.ravel(self.hi).astype(float)))
        return Disc(tuple(float(c) for c in self.center), float(self.radius))


class GridConfig(_Strict):
    dimension: Literal[1, 2] = 1
    h: float = Field(2.0**-9, gt=0)
    omega: OmegaConfig = OmegaConfig(kind="interval", lo=-1.0, hi=1.0)
    R_trunc: float = Field(8.0, gt=0)


class WellConfig(_Strict):
    name: Literal["quartic"] = "quartic"
    p: Optional[float] = None
    c_W: Optional[float] = None
    delta_W: Optional[float] = None
    kappa_W: Optional[float] = None


class ExteriorConfig(_Strict):
    """Exterior datum ``g``: sign, constant, sides (1D), halfspace or cross."""

    kind: Literal["sign", "constant", "sides", "halfspace", "cross"] = "sign"
    value: float = 1.0
    left: float = -1.0
    right: float = 1.0
    normal: Optional[List[float]] = None


class ForcingConfig(_Strict):
    kind: Literal["zero", "constant"] = "zero"
    value: float = 0.0


class PhysicsConfig(_Strict):
    s: float = 0.25
    eps: Optional[float] = 0.05
    eps_list: Optional[List[float]] = [0.1, 0.05, 0.025, 0.0125, 0.01]
    potential: WellConfig = WellConfig()
    g: ExteriorConfig = ExteriorConfig()
    f: ForcingConfig = ForcingConfig()
    gamma_override: Optional[float] = None

    @field_validator("s")
    @classmethod
    def _s(cls, v):
        if not 0 < v < 0.5:
            raise ValueError("s must lie in (0, 1/2)")
        return v

    @field_validator("eps")
    @classmethod
    def _eps(cls, v):
        if v is not None and not v > 0:
            raise ValueError("eps must be positive")
        return v

    @field_validator("eps_list")
    @classmethod
    def _eps_list(cls, v):
        if v is not None and any(not e > 0 for e in v):
            raise ValueError("eps values must be positive")
        return v


class SolverConfig(_Strict):
    tol: float = Field(1e-7, gt=0)
    max_iters: int = Field(5000, ge=1)
    init: Literal["from-g", "mollified"] = "from-g"


class SetConfig(_Strict):
    """Set descriptor for the geometry command: a named constructor or a CSV of member nodes."""

    name: Optional[str] = "half-line"
    radius: Optional[float] = None
    center: Optional[List[float]] = None
    normal: Optional[List[float]] = None
    csv: Optional[str] = None


class DiagnosticsConfig(_Strict):
    centers: List[Union[float, List[float]]] = [0.0, 0.2, -0.3]
    radii: List[float] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    omega_prime: Optional[OmegaConfig] = None
    levels: List[float] = [0.0, 0.5]
    K: Optional[OmegaConfig] = None
    transition_radii: Optional[List[float]] = None
    limit_set: Optional[SetConfig] = None
    set: SetConfig = SetConfig()

    @field_validator("radii")
    @classmethod
    def _radii(cls, v):
        if any(r <= 0 for r in v) or list(v) != sorted(v):
            raise ValueError("radii must be positive and increasing")
        return v

    @field_validator("levels")
    @classmethod
    def _levels(cls, v):
        if any(not -1 < t < 1 for t in v):
            raise ValueError("levels must lie in (-1, 1)")
        return v


class OutputConfig(_Strict):
    directory: str = "fraclab-out"
    formats: List[Literal["csv"]] = ["csv"]


class ExperimentConfig(_Strict):
    grid: GridConfig = GridConfig()
    physics: PhysicsConfig = PhysicsConfig()
    solver: SolverConfig = SolverConfig()
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _consistency(self):
        n = self.grid.dimension
        om = self.grid.omega
        if n == 1 and om.kind != "interval":
            raise ValueError("grid.omega: a 1D grid needs an interval")
        if n == 2 and om.kind == "interval":
            raise ValueError("grid.omega: a 2D grid needs a box or a disc")
        if self.physics.g.kind == "sides" and n != 1:
            raise ValueError("physics.g: sides is 1D only")
        if self.physics.g.kind == "cross" and n != 2:
            raise ValueError("physics.g: cross is 2D only")
        try:
            build_problem_grid(self)
        except ValueError as exc:
            raise ValueError(f"grid: {exc}") from None
        try:
            build_well(self)
        except ValueError as exc:
            raise ValueError(f"physics.potential: {exc}") from None
        return self


def _format_error(exc):
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"]
        for prefix in ("Value error, ", "Assertion failed, "):
            if msg.startswith(prefix):
                msg = msg[len(prefix):]
        lines.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(lines)


def parse_config(data):
    """Validate a mapping; raises :class:`ConfigError` with ``field: message`` text."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def load_config(path):
    """Read and validate a YAML config file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{where}{getattr(exc, 'problem', None) or exc}") from None
    return parse_config(data)


def default_config():
    return ExperimentConfig()


def config_hash(cfg):
    """SHA-256 of the canonical JSON form of the validated config."""
    text = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Builders


def _far_field(cfg):
    g = cfg.physics.g
    n = cfg.grid.dimension
    if g.kind == "constant":
        return FarField.constant(g.value, n)
    if g.kind == "sides":
        return FarField.sides(g.left, g.right)
    if g.kind == "cross":
        return FarField.cross()
    normal = g.normal if g.normal is not None else [1.0] + [0.0] * (n - 1)
    if g.kind == "sign" and n == 1:
        return FarField.sides(-1.0, 1.0)
    return FarField.halfspace(tuple(normal))


def build_problem_grid(cfg):
    """The :class:`GridSpec` of a config; the far field comes from ``physics.g``."""
    return build_grid(cfg.grid.dimension, cfg.grid.h, cfg.grid.omega.build(), cfg.grid.R_trunc, _far_field(cfg))


def build_exterior(cfg, grid):
    """``g`` as a field: the far-field map evaluated at the nodes."""
    tail = grid.tail
    return ScalarField(grid, tail(np.stack(grid.coords, axis=-1)), tail)


def build_forcing(cfg, grid):
    f = cfg.physics.f
    if f.kind == "zero":
        return None
    vals = np.where(grid.interior_mask, f.value, 0.0)
    return ScalarField(grid, vals, FarField.constant(0.0, grid.dimension))


def build_well(cfg):
    """Prototype well with optional constant overrides, certified by the structural scan."""
    base = make_prototype_well()
    wc = cfg.physics.potential
    over = {k: getattr(wc, k) for k in ("p", "c_W", "delta_W", "kappa_W") if getattr(wc, k) is not None}
    if not over:
        return base
    well = DoubleWell(base.W, base.Wp, base.Wpp, **{**_consts(base), **over}, name=base.name)
    rep = verify_structural_assumptions(well)
    if not rep.passed:
        raise ValueError("constants fail the structural scan: " + ", ".join(rep.failed()))
    return well


def _consts(w):
    return {"p": w.p, "c_W": w.c_W, "delta_W": w.delta_W, "kappa_W": w.kappa_W}
