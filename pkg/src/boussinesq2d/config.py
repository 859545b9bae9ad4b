"""
Run configuration and its flat text format.

Each non-blank line holds ``section.key = value``; ``#`` starts a comment.
Unknown or repeated keys are rejected with the offending line number::

    case = case7
    buoyancy.law = canonical
    grid.nx = 128
    grid.lx = 2pi
    stepper.dt = 1e-3
    run.t_final = 1.0
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from boussinesq2d.cases import case_label, case_matrix, parse_case_id
from boussinesq2d.errors import ConfigurationError
from boussinesq2d.initial import THETA_GENERATORS, VELOCITY_GENERATORS, make_state
from boussinesq2d.model import BUOYANCY_LAWS, StepperConfig, ViscosityMatrix, buoyancy_law
from boussinesq2d.spectral import Grid

TWO_PI = 2.0 * math.pi
VISC_KEYS = ("nu_xx", "nu_xy", "nu_yx", "nu_yy", "kappa_x", "kappa_y")
_PI_RE = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$")


@dataclass(frozen=True)
class RunConfig:
    case_id: int | str = 7
    custom: ViscosityMatrix | None = None
    row_scales: tuple = (1.0, 1.0)
    buoyancy: str = "canonical"
    nx: int = 128
    ny: int = 128
    Lx: float = TWO_PI
    Ly: float = TWO_PI
    velocity: str = "random"
    theta: str = "random"
    seed: int = 1
    velocity_amplitude: float = 0.5
    theta_amplitude: float = 1.0
    stepper: StepperConfig = field(default_factory=StepperConfig)
    t_final: float = 1.0
    cadence: int = 10
    output_dir: str = "out"
    checkpoint_interval: int = 0
    lp: tuple = (4.0,)

    def __post_init__(self):
        object.__setattr__(self, "case_id", parse_case_id(self.case_id))
        if self.case_id == "custom" and self.custom is None:
            raise ConfigurationError("case = custom requires all six viscosity.* coefficients")
        if self.buoyancy not in BUOYANCY_LAWS:
            raise ConfigurationError(f"unknown buoyancy law {self.buoyancy!r}; expected one of {BUOYANCY_LAWS}")
        if self.velocity not in VELOCITY_GENERATORS:
            raise ConfigurationError(f"unknown velocity generator {self.velocity!r}")
        if self.theta not in THETA_GENERATORS:
            raise ConfigurationError(f"unknown theta generator {self.theta!r}")
        if not (math.isfinite(self.t_final) and self.t_final >= 0):
            raise ConfigurationError("run.t_final must be a finite nonnegative real")
        if self.cadence < 1:
            raise ConfigurationError("run.cadence must be >= 1")
        if self.checkpoint_interval < 0:
            raise ConfigurationError("run.checkpoint_interval must be >= 0")
        for p in self.lp:
            if not (1 <= p < math.inf):
                raise ConfigurationError(f"run.lp exponents must lie in [1, inf), got {p}")
        self.build_grid()
        self.build_viscosity()

    @property
    def case_label(self):
        return case_label(self.case_id)

    def build_grid(self):
        return Grid(self.nx, self.ny, self.Lx, self.Ly)

    def build_viscosity(self):
        return case_matrix(self.case_id, self.row_scales, self.custom)

    def build_buoyancy(self):
        return buoyancy_law(self.buoyancy)

    def build_state(self, grid=None):
        return make_state(
            grid or self.build_grid(), self.velocity, self.theta, self.seed,
            self.velocity_amplitude, self.theta_amplitude,
        )

    def with_overrides(self, pairs):
        """Apply ``key=value`` strings on top of this config."""
        values = to_mapping(self)
        for n, item in enumerate(pairs, 1):
            if "=" not in item:
                raise ConfigurationError(f"override {item!r} is not of the form key=value")
            k, v = (s.strip() for s in item.split("=", 1))
            if k not in _KEYS:
                raise ConfigurationError(f"unknown key {k!r} in override {n}")
            values[k] = v
        return from_mapping(values)


# value converters
def _int(s):
    try:
        return int(s)
    except ValueError:
        raise ConfigurationError(f"expected an integer, got {s!r}") from None


def _float(s):
    try:
        v = float(s)
    except ValueError:
        raise ConfigurationError(f"expected a real number, got {s!r}") from None
    if not math.isfinite(v):
        raise ConfigurationError(f"expected a finite real number, got {s!r}")
    return v


def _length(s):
    m = _PI_RE.match(s.lower())
    if m:
        coef = m.group(1)
        return (_float(coef) if coef not in ("", "+") else 1.0) * math.pi
    return _float(s)


def _dt(s):
    return "auto" if s.strip().lower() == "auto" else _float(s)


def _lp(s):
    return tuple(_float(x) for x in s.replace(",", " ").split())


def _str(s):
    return s.strip()


_KEYS = {
    "case": _str,
    **{f"viscosity.{k}": _float for k in VISC_KEYS},
    "viscosity.row_x_scale": _float,
    "viscosity.row_y_scale": _float,
    "buoyancy.law": _str,
    "grid.nx": _int,
    "grid.ny": _int,
    "grid.lx": _length,
    "grid.ly": _length,
    "initial.velocity": _str,
    "initial.theta": _str,
    "initial.seed": _int,
    "initial.velocity_amplitude": _float,
    "initial.theta_amplitude": _float,
    "stepper.dt": _dt,
    "stepper.cfl_number": _float,
    "stepper.scheme": _str,
    "stepper.mollification_eps": _float,
    "stepper.dt_max": _float,
    "run.t_final": _float,
    "run.cadence": _int,
    "run.output_dir": _str,
    "run.checkpoint_interval": _int,
    "run.lp": _lp,
}
CONFIG_KEYS = tuple(_KEYS)


def to_mapping(cfg):
    """Config as ``{key: text}`` in canonical order."""
    s = cfg.stepper
    out = {"case": cfg.case_label}
    if cfg.case_id == "custom":
        for k in VISC_KEYS:
            out[f"viscosity.{k}"] = repr(getattr(cfg.custom, k))
    else:
        out["viscosity.row_x_scale"] = repr(float(cfg.row_scales[0]))
        out["viscosity.row_y_scale"] = repr(float(cfg.row_scales[1]))
    out.update({
        "buoyancy.law": cfg.buoyancy,
        "grid.nx": str(cfg.nx),
        "grid.ny": str(cfg.ny),
        "grid.lx": repr(float(cfg.Lx)),
        "grid.ly": repr(float(cfg.Ly)),
        "initial.velocity": cfg.velocity,
        "initial.theta": cfg.theta,
        "initial.seed": str(cfg.seed),
        "initial.velocity_amplitude": repr(float(cfg.velocity_amplitude)),
        "initial.theta_amplitude": repr(float(cfg.theta_amplitude)),
        "stepper.dt": s.dt if s.dt == "auto" else repr(float(s.dt)),
        "stepper.cfl_number": repr(float(s.cfl_number)),
        "stepper.scheme": s.scheme,
        "stepper.mollification_eps": repr(float(s.mollification_eps)),
        "stepper.dt_max": repr(float(s.dt_max)),
        "run.t_final": repr(float(cfg.t_final)),
        "run.cadence": str(cfg.cadence),
        "run.output_dir": cfg.output_dir,
        "run.checkpoint_interval": str(cfg.checkpoint_interval),
        "run.lp": " ".join(repr(float(p)) for p in cfg.lp),
    })
    return out


def from_mapping(values, lines=None):
    """Build a :class:`RunConfig` from ``{key: text}``; missing keys take defaults."""
    lines = lines or {}
    conv = {}
    for k, v in values.items():
        if k not in _KEYS:
            raise ConfigurationError(f"unknown key {k!r}", lines.get(k))
        try:
            conv[k] = _KEYS[k](v)
        except ConfigurationError as exc:
            raise ConfigurationError(f"{k}: {exc}", lines.get(k)) from None

    def first_line(*keys):
        found = [lines[k] for k in keys if k in lines]
        return min(found) if found else None

    custom = None
    given = [k for k in VISC_KEYS if f"viscosity.{k}" in conv]
    if given:
        if len(given) != len(VISC_KEYS):
            missing = [k for k in VISC_KEYS if k not in given]
            raise ConfigurationError(f"custom viscosity is missing {missing}",
                                     first_line(*(f"viscosity.{k}" for k in given)))
        try:
            custom = ViscosityMatrix(**{k: conv[f"viscosity.{k}"] for k in VISC_KEYS})
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc), first_line(*(f"viscosity.{k}" for k in VISC_KEYS))) from None

    if custom is not None and conv.get("case", "custom") != "custom":
        raise ConfigurationError("viscosity coefficients are only allowed with case = custom",
                                 first_line("case"))

    base = RunConfig.__dataclass_fields__
    default_stepper = StepperConfig()
    try:
        stepper = StepperConfig(
            dt=conv.get("stepper.dt", default_stepper.dt),
            cfl_number=conv.get("stepper.cfl_number", default_stepper.cfl_number),
            scheme=conv.get("stepper.scheme", default_stepper.scheme),
            mollification_eps=conv.get("stepper.mollification_eps", default_stepper.mollification_eps),
            dt_max=conv.get("stepper.dt_max", default_stepper.dt_max),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), first_line(*(k for k in conv if k.startswith("stepper.")))) from None

    def get(key, attr):
        return conv.get(key, base[attr].default)

    kwargs = dict(
        case_id=conv.get("case", "custom" if custom is not None else base["case_id"].default),
        custom=custom,
        row_scales=(conv.get("viscosity.row_x_scale", 1.0), conv.get("viscosity.row_y_scale", 1.0)),
        buoyancy=get("buoyancy.law", "buoyancy"),
        nx=get("grid.nx", "nx"),
        ny=get("grid.ny", "ny"),
        Lx=get("grid.lx", "Lx"),
        Ly=get("grid.ly", "Ly"),
        velocity=get("initial.velocity", "velocity"),
        theta=get("initial.theta", "theta"),
        seed=get("initial.seed", "seed"),
        velocity_amplitude=get("initial.velocity_amplitude", "velocity_amplitude"),
        theta_amplitude=get("initial.theta_amplitude", "theta_amplitude"),
        stepper=stepper,
        t_final=get("run.t_final", "t_final"),
        cadence=get("run.cadence", "cadence"),
        output_dir=get("run.output_dir", "output_dir"),
        checkpoint_interval=get("run.checkpoint_interval", "checkpoint_interval"),
        lp=conv.get("run.lp", base["lp"].default),
    )
    try:
        return RunConfig(**kwargs)
    except ConfigurationError as exc:
        if exc.line is not None:
            raise
        raise ConfigurationError(str(exc), first_line(*conv)) from None


def parse(text):
    """Parse config text.

    Raises:
        ConfigurationError: with ``line`` set for syntax errors, unknown or
            duplicate keys and invalid values.
    """
    values, lines = {}, {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise ConfigurationError(f"unknown key {key!r}", n)
        if key in values:
            raise ConfigurationError(f"duplicate key {key!r} (first set on line {lines[key]})", n)
        if not value:
            raise ConfigurationError(f"empty value for {key!r}", n)
        values[key], lines[key] = value, n
    return from_mapping(values, lines)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def serialize(cfg):
    return "".join(f"{k} = {v}\n" for k, v in to_mapping(cfg).items())
