"""Scenario configuration: INI sections with dotted command-line overrides."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .geometry import Ellipsoid, GeometrySpec, MaterialParams, SurfaceProfile, validate_geometry
from .incident import IncidentSpec, causal_pulse

MODES = ("sdomain", "time", "verify")

DEFAULTS = {
    "geometry": {
        "R": "1.0",
        "bump_amplitude": "0.1",
        "bump_radius": "0.5",
        "body": "yes",
        "body_center": "0.0, 0.0, 0.45",
        "body_axes": "0.25, 0.2, 0.15",
    },
    "material": {"rho_e": "2.0", "rho_0": "1.0", "c": "1.0", "lam": "2.0", "mu": "1.0"},
    "incident": {
        "theta": "0.3",
        "phi": "2.6",
        "pulse": "poly4",
        "width": "1.0",
        "gap": "0.05",
        "amplitude": "1.0",
    },
    "discretization": {
        "h": "0.1",
        "dt": "0.05",
        "t_final": "4.0",
        "n_max": "20",
        "seed": "0",
        "s1_min": "0.01",
        "s1_max": "100.0",
        "s2_max": "100.0",
        "n_s1": "7",
        "n_s2": "9",
        "s_snapshot": "1+1j",
        "snapshot_every": "20",
    },
    "run": {"mode": "time", "out": "out", "deterministic": "no", "workers": "1"},
}


def _floats(text: str, n: int, key: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected {n} numbers, got {text!r}") from exc
    if len(vals) != n:
        raise ConfigError(f"{key}: expected {n} numbers, got {text!r}")
    return vals


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: GeometrySpec
    material: MaterialParams
    incident: IncidentSpec
    h: float
    dt: float
    t_final: float
    n_max: int
    seed: int
    s_grid: dict
    s_snapshot: complex
    snapshot_every: int
    mode: str
    out: Path
    deterministic: bool
    workers: int
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def echo(self) -> dict:
        """Parsed sections without the output location (so reruns elsewhere match)."""
        out = {sec: dict(vals) for sec, vals in self.raw.items()}
        out.get("run", {}).pop("out", None)
        return out


def apply_override(parser: configparser.ConfigParser, item: str) -> None:
    """Apply ``section.key=value``."""
    lhs, sep, value = item.partition("=")
    section, dot, key = lhs.strip().partition(".")
    if not (sep and dot and section and key):
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    if not parser.has_section(section):
        raise ConfigError(f"override {item!r}: unknown section [{section}]")
    parser.set(section, key, value.strip())


def load_config(path=None, overrides=(), extra: dict | None = None) -> ScenarioConfig:
    """Read defaults, then ``path``, then ``extra`` and ``overrides`` (later wins)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_dict(DEFAULTS)
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    for section, vals in (extra or {}).items():
        for k, v in vals.items():
            parser.set(section, k, str(v))
    for item in overrides:
        apply_override(parser, item)
    return parse_config(parser)


def parse_config(parser: configparser.ConfigParser) -> ScenarioConfig:
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    for sec, keys in DEFAULTS.items():
        unknown = set(raw.get(sec, {})) - set(keys)
        if unknown:
            raise ConfigError(f"[{sec}]: unknown keys {sorted(unknown)}")

    def num(sec, key, kind=float):
        try:
            return kind(parser.get(sec, key))
        except ValueError as exc:
            raise ConfigError(f"{sec}.{key}: cannot read {parser.get(sec, key)!r}") from exc

    def flag(sec, key):
        try:
            return parser.getboolean(sec, key)
        except ValueError as exc:
            raise ConfigError(f"{sec}.{key}: expected yes/no") from exc

    mat = MaterialParams(rho_e=num("material", "rho_e"), rho_0=num("material", "rho_0"),
                         c=num("material", "c"), lam=num("material", "lam"), mu=num("material", "mu"))
    bad = mat.violations()
    if bad:
        raise ConfigError("; ".join(bad))

    R = num("geometry", "R")
    amp = num("geometry", "bump_amplitude")
    profile = SurfaceProfile.bump(amp, num("geometry", "bump_radius")) if amp != 0 else SurfaceProfile.flat()
    body = None
    if flag("geometry", "body"):
        body = Ellipsoid(_floats(parser.get("geometry", "body_center"), 3, "geometry.body_center"),
                         _floats(parser.get("geometry", "body_axes"), 3, "geometry.body_axes"))
    geom = GeometrySpec(R=R, profile=profile, body=body)
    gbad = validate_geometry(geom)
    if gbad:
        raise ConfigError("GeometrySpec: " + ", ".join(v.value for v in gbad) + " violated")

    try:
        pulse = causal_pulse(R, num("incident", "width"), num("incident", "gap"),
                             num("incident", "amplitude"), parser.get("incident", "pulse"))
        inc = IncidentSpec(num("incident", "theta"), num("incident", "phi"), mat.c, pulse)
    except ValueError as exc:
        raise ConfigError(f"IncidentSpec: {exc}") from exc

    h, dt, t_final = num("discretization", "h"), num("discretization", "dt"), num("discretization", "t_final")
    n_max = num("discretization", "n_max", int)
    for name, ok in (("h > 0", h > 0), ("dt > 0", dt > 0), ("t_final > 0", t_final > 0),
                     ("n_max >= 1", n_max >= 1)):
        if not ok:
            raise ConfigError(f"ScenarioConfig: {name} violated")
    grid = {k: num("discretization", k) for k in ("s1_min", "s1_max", "s2_max")}
    grid.update({k: num("discretization", k, int) for k in ("n_s1", "n_s2")})
    if not 0 < grid["s1_min"] <= grid["s1_max"]:
        raise ConfigError("ScenarioConfig: 0 < s1_min <= s1_max violated")
    try:
        s_snap = complex(parser.get("discretization", "s_snapshot").replace(" ", ""))
    except ValueError as exc:
        raise ConfigError("discretization.s_snapshot: not a complex number") from exc
    if not s_snap.real > 0:
        raise ConfigError("ScenarioConfig: Re s_snapshot > 0 violated")

    mode = parser.get("run", "mode")
    if mode not in MODES:
        raise ConfigError(f"run.mode must be one of {MODES}, got {mode!r}")
    workers = num("run", "workers", int)
    if workers < 1:
        raise ConfigError("ScenarioConfig: workers >= 1 violated")
    return ScenarioConfig(geom, mat, inc, h, dt, t_final, n_max, num("discretization", "seed", int), grid,
                          s_snap, num("discretization", "snapshot_every", int), mode,
                          Path(parser.get("run", "out")), flag("run", "deterministic"), workers, raw)


def s_grid_values(cfg: ScenarioConfig) -> list:
    from .sdomain import default_s_grid

    g = cfg.s_grid
    return default_s_grid(g["n_s1"], g["n_s2"], (g["s1_min"], g["s1_max"]), g["s2_max"])


def default_scenario(**extra) -> ScenarioConfig:
    """Built-in scenario: bump surface, ellipsoidal body, oblique pulse."""
    return load_config(extra=extra or None)


__all__ = ["ScenarioConfig", "load_config", "parse_config", "apply_override", "default_scenario",
           "s_grid_values", "DEFAULTS", "MODES"]
