"""Run configuration: a flat ``key = value`` text file.

Each non-blank line holds one ``key = value`` pair; ``#`` starts a comment.
Values use JSON syntax (``1e5``, ``"shear"``, ``[0.0, -9.8]``, ``true``);
bare words are read as strings. Unspecified keys take the defaults below.

========================  =====================  ===========================================
key                       default                meaning
========================  =====================  ===========================================
model                     "shear-compression"    isotropic, shear or shear-compression
E                         2.9e10                 Young's modulus [Pa]
nu                        0.3                    Poisson ratio
rho                       2700.0                 density [kg/m^3]
g                         [0.0, -9.8]            gravity [m/s^2]
w1                        1e5                    dissipation at full damage [J/m^3]
ell                       75.0                   internal length [m]
kappa                     1.0                    shear-compression weight
domain                    [-1500, 1500,          x0, x1, y0, y1 [m]
                          -500, 500]
h                         25.0                   mesh size [m]
mesh_pattern              "right"                right or crossed triangles
cavity_x_start            -500.0                 left edge of the cavity [m]
cavity_rate               40.0                   cavity advance per step [m]
cavity_half_height        20.0                   [m]
cavity_y_center           0.0                    [m]
T                         15                     final step index
am_tol                    1e-3                   sup-norm damage change between sweeps
am_max_iter               200
kkt_tol                   1e-6                   scaled KKT residual of the damage step
box_max_iter              100
lin_tol                   1e-10                  relative residual of linear solves
a_min                     1e-6                   stiffness floor in the elastic step
best_effort               false                  continue past unconverged steps
bc_down                   "clamped"              clamped, roller or free
bc_lat                    "roller"
bc_up                     "free"
out                       "runs/default"         output directory
========================  =====================  ===========================================
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .assembly import A_MIN, BoundaryConditions
from .constitutive import DamageModel, MaterialParams
from .evolution import SolverSettings
from .mesh import CavitySpec, build_mesh


MIN_CELLS = 4


class ConfigError(ValueError):
    """Invalid configuration; names the offending key and, when known, its line."""

    def __init__(self, key, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")
        self.key = key
        self.line = line
        self.reason = message


@dataclass(frozen=True)
class Config:
    model: str = "shear-compression"
    E: float = 2.9e10
    nu: float = 0.3
    rho: float = 2.7e3
    g: tuple = (0.0, -9.8)
    w1: float = 1e5
    ell: float = 75.0
    kappa: float = 1.0
    domain: tuple = (-1500.0, 1500.0, -500.0, 500.0)
    h: float = 25.0
    mesh_pattern: str = "right"
    cavity_x_start: float = -500.0
    cavity_rate: float = 40.0
    cavity_half_height: float = 20.0
    cavity_y_center: float = 0.0
    T: int = 15
    am_tol: float = 1e-3
    am_max_iter: int = 200
    kkt_tol: float = 1e-6
    box_max_iter: int = 100
    lin_tol: float = 1e-10
    a_min: float = A_MIN
    best_effort: bool = False
    bc_down: str = "clamped"
    bc_lat: str = "roller"
    bc_up: str = "free"
    out: str = "runs/default"
    # source line of each key read from a file, for error messages
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for f in fields():
            object.__setattr__(self, f.name, _coerce(f, getattr(self, f.name), self.lines.get(f.name)))
        self.validate()

    def _fail(self, key, message):
        raise ConfigError(key, message, self.lines.get(key))

    def validate(self):
        for key in ("E", "rho", "w1", "ell", "h", "am_tol", "kkt_tol", "lin_tol", "a_min"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0):
                self._fail(key, f"must be positive, got {v}")
        if not -1.0 < self.nu < 0.5:
            self._fail("nu", f"must lie in (-1, 0.5), got {self.nu}")
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            self._fail("kappa", f"must be non-negative, got {self.kappa}")
        if self.a_min >= 1:
            self._fail("a_min", "must be below 1")
        if len(self.g) != 2:
            self._fail("g", "needs two components")
        if len(self.domain) != 4:
            self._fail("domain", "needs four values x0, x1, y0, y1")
        x0, x1, y0, y1 = self.domain
        if not (x0 < x1 and y0 < y1):
            self._fail("domain", f"empty rectangle {self.domain}")
        for key in ("T", "am_max_iter", "box_max_iter"):
            if getattr(self, key) < (0 if key == "T" else 1):
                self._fail(key, f"out of range: {getattr(self, key)}")
        try:
            DamageModel.parse(self.model)
        except ValueError as exc:
            self._fail("model", str(exc))
        if self.mesh_pattern not in ("right", "crossed"):
            self._fail("mesh_pattern", f"unknown pattern {self.mesh_pattern!r}")
        for key in ("bc_down", "bc_lat", "bc_up"):
            if getattr(self, key) not in ("clamped", "roller", "free"):
                self._fail(key, f"unknown condition {getattr(self, key)!r}")
        cells = min(round((x1 - x0) / self.h), round((y1 - y0) / self.h))
        if cells < MIN_CELLS:
            self._fail("h", f"gives {cells} cells across the domain; at least {MIN_CELLS} required")
        if self.cavity_half_height <= 0:
            self._fail("cavity_half_height", "must be positive")
        if self.cavity_rate < 0:
            self._fail("cavity_rate", "must be non-negative")
        cav = self.cavity()
        for t in (0, self.T):
            cx0, cx1, cy0, cy1 = cav.rectangle(t)
            if cx1 > cx0 and not (x0 < cx0 and cx1 < x1 and y0 < cy0 and cy1 < y1):
                self._fail("T" if t else "cavity_x_start", f"cavity at step {t} leaves the domain")

    def warnings(self) -> list[str]:
        """Advisory findings that do not invalidate the configuration."""
        out = []
        if self.h > self.ell / 3:
            out.append(f"h={self.h:g} exceeds ell/3={self.ell / 3:g}: damage bands span fewer than 3 elements")
        return out

    # -- builders ----------------------------------------------------------

    def damage_model(self) -> DamageModel:
        return DamageModel.parse(self.model)

    def material(self) -> MaterialParams:
        return MaterialParams(E=self.E, nu=self.nu, w1=self.w1, ell=self.ell, kappa=self.kappa, rho=self.rho,
                              g=tuple(self.g))

    def cavity(self) -> CavitySpec:
        return CavitySpec(self.cavity_x_start, self.cavity_rate, self.cavity_half_height, self.cavity_y_center)

    def boundary_conditions(self) -> BoundaryConditions:
        return BoundaryConditions(down=self.bc_down, lat=self.bc_lat, up=self.bc_up)

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(am_tol=self.am_tol, am_max_iter=self.am_max_iter, kkt_tol=self.kkt_tol,
                              box_max_iter=self.box_max_iter, lin_tol=self.lin_tol, a_min=self.a_min,
                              best_effort=self.best_effort)

    def build_mesh(self):
        return build_mesh(self.domain, self.h, self.mesh_pattern, MIN_CELLS)

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields()}


def fields():
    return [f for f in dataclasses.fields(Config) if f.name != "lines"]


_KINDS = {}


def _kind(f):
    if not _KINDS:
        for g in fields():
            default = g.default
            _KINDS[g.name] = type(default) if not isinstance(default, tuple) else tuple
    return _KINDS[f.name]


def _coerce(f, value, line):
    kind = _kind(f)
    bad = ConfigError(f.name, f"expected {kind.__name__}, got {value!r}", line)
    if kind is bool:
        if not isinstance(value, bool):
            raise bad
        return value
    if isinstance(value, bool):
        raise bad
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise bad
        return value
    if kind is float:
        if not isinstance(value, (int, float)):
            raise bad
        return float(value)
    if kind is tuple:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise bad
        return tuple(float(v) for v in value)
    if not isinstance(value, str):
        raise bad
    return value


def parse_config(text: str, source: str = "<string>") -> Config:
    """Parse configuration text; see the module docstring for the schema."""
    known = {f.name for f in fields()}
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition("=")
        key, rest = key.strip(), rest.strip()
        if not sep or not key:
            raise ConfigError(key or "?", f"expected 'key = value' in {source}", lineno)
        if key not in known:
            raise ConfigError(key, "unknown key", lineno)
        if key in values:
            raise ConfigError(key, f"repeated (first on line {lines[key]})", lineno)
        try:
            value = json.loads(rest)
        except json.JSONDecodeError:
            if not rest or not rest.replace("-", "").replace("_", "").replace(".", "").replace("/", "").isalnum():
                raise ConfigError(key, f"cannot parse value {rest!r}", lineno) from None
            value = rest
        values[key] = value
        lines[key] = lineno
    return Config(**values, lines=lines)


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def format_config(config: Config) -> str:
    out = []
    for key, value in config.to_dict().items():
        if isinstance(value, tuple):
            value = list(value)
        out.append(f"{key} = {json.dumps(value)}")
    return "\n".join(out) + "\n"


def save_config(config: Config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_config(config))
