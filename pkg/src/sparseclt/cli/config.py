"""Experiment configuration: flat key = value text, optional per-mode sections, flag overrides.

Keys before any section header belong to the experiment. A section named after
the active mode (e.g. ``[wick]``) overrides them; sections for other modes are
validated for unknown keys but otherwise ignored. Command-line flags override
both.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..limit.bessel import TILDE_RADIUS
from ..observables import parse_test_function

MODES = ("solve-limit", "identities", "lln", "variance", "wick", "clt", "covariance")
SECTION = "experiment"


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def parse_complex(text: str) -> complex:
    """'3', '3+0.5i', '2-i', '1.5i' (a trailing 'j' is accepted too)."""
    t = str(text).strip().replace(" ", "").lower()
    if not t:
        raise ValueError("empty complex literal")
    if t.endswith("i") or t.endswith("j"):
        body = t[:-1]
        if body in ("", "+", "-") or body[-1] in "+-":
            t = body + "1j"
        else:
            t = body + "j"
    return complex(t)


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n: int = 1000
    p: float = 2.0
    z: tuple = (3 + 0j,)
    u: tuple = (1.0,)
    phi: tuple = ("lambda^2",)
    replicas: int = 2000
    seed: int = 0
    out: str = "out"
    grid_points: int = 192
    vmax: float | None = None
    threads: int = 1
    ns: tuple = (250, 500, 1000, 2000)
    wick_orders: tuple = (3, 4)
    vj_v: float = 1.0
    u2: float = 1.0
    outer_replicas: int = 200
    inner_replicas: int = 1000
    m0_target: float = 0.5
    allow_unproven: bool = False


_LISTS = {"z": parse_complex, "u": float, "phi": str, "ns": int, "wick_orders": int}
_SCALARS = {
    "mode": str, "n": int, "p": float, "replicas": int, "seed": int, "out": str, "grid_points": int,
    "vmax": float, "threads": int, "vj_v": float, "u2": float, "outer_replicas": int,
    "inner_replicas": int, "m0_target": float, "allow_unproven": bool,
}
KEYS = tuple(f.name for f in fields(ExperimentConfig))


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _convert(key: str, raw, errors: list[str]):
    conv = {int: _int, bool: _bool}
    try:
        if key in _LISTS:
            items = raw if isinstance(raw, (list, tuple)) else [x for x in str(raw).replace(",", " ").split() if x]
            f = _LISTS[key]
            return tuple((conv.get(f, f))(x) for x in items)
        if key == "vmax" and (raw is None or str(raw).strip().lower() in ("", "auto", "none")):
            return None
        f = _SCALARS[key]
        return conv.get(f, f)(raw)
    except (TypeError, ValueError) as exc:
        errors.append(f"{key}: cannot parse {raw!r} ({exc})")
        return None


def _read_text(text: str, errors: list[str]) -> tuple[dict, dict]:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=", ":"), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(f"[{SECTION}]\n" + text)
    except configparser.Error as exc:
        errors.append(f"malformed config: {exc}")
        return {}, {}
    top = dict(cp[SECTION]) if cp.has_section(SECTION) else {}
    sections = {}
    for name in cp.sections():
        if name == SECTION:
            continue
        if name not in MODES:
            errors.append(f"unknown section [{name}]")
            continue
        sections[name] = dict(cp[name])
    for where, keys in [(SECTION, top)] + list(sections.items()):
        for k in keys:
            if k not in KEYS:
                errors.append(f"unknown key {k!r} in [{where}]")
            if where != SECTION and k == "mode":
                errors.append(f"mode cannot be set inside section [{where}]")
    return top, sections


def _validate(cfg: ExperimentConfig) -> list[str]:
    e: list[str] = []
    if cfg.mode not in MODES:
        e.append(f"mode: must be one of {', '.join(MODES)}")
    if cfg.n < 1:
        e.append("n: must be >= 1")
    if cfg.p < 0:
        e.append("p: must be >= 0")
    if cfg.n >= 1 and cfg.p / cfg.n > 1:
        e.append(f"p/n = {cfg.p / cfg.n:g} > 1: not a probability")
    need_z = cfg.mode not in ("identities", "clt", "covariance")
    if need_z and not cfg.z:
        e.append("z: at least one value required")
    for z in cfg.z:
        if z.real <= 0:
            e.append(f"z={format_complex(z)}: Re z must be > 0")
        elif need_z and z.real <= 2 and not cfg.allow_unproven:
            e.append(f"z={format_complex(z)}: Re z <= 2 needs allow_unproven = true")
    if cfg.mode in ("lln", "variance", "wick") and not cfg.u:
        e.append("u: at least one value required")
    if any(u < 0 for u in cfg.u) or cfg.u2 < 0:
        e.append("u: values must be >= 0")
    if cfg.replicas < 1:
        e.append("replicas: must be >= 1")
    if cfg.threads < 1:
        e.append("threads: must be >= 1")
    if cfg.grid_points < 16:
        e.append("grid_points: must be >= 16")
    if cfg.vmax is not None and cfg.vmax <= 0:
        e.append("vmax: must be > 0")
    if not 0 <= cfg.seed < 2**64:
        e.append("seed: must be a 64-bit unsigned integer")
    for k in cfg.ns if cfg.mode in ("lln", "variance") else ():
        if k < 1 or cfg.p / k > 1:
            e.append(f"ns: n={k} invalid for p={cfg.p:g}")
    if cfg.mode in ("lln", "variance") and (len(cfg.ns) < 4 or max(cfg.ns) < 8 * min(cfg.ns)):
        e.append("ns: need >= 4 sizes spanning >= 8x")
    if cfg.mode == "variance":
        for z in cfg.z:
            if z.real > 0 and abs(cfg.vj_v) / z.real**2 > TILDE_RADIUS:
                e.append(f"vj_v: |v|/(Re z)^2 exceeds {TILDE_RADIUS:g} at z={format_complex(z)}")
    for w in cfg.wick_orders:
        if w not in (3, 4, 6):
            e.append(f"wick_orders: {w} not in 3, 4, 6")
    for text in cfg.phi:
        try:
            if not parse_test_function(text).admissible():
                e.append(f"phi: {text} is not admissible")
        except ValueError as exc:
            e.append(f"phi: {exc}")
    if cfg.outer_replicas < 2 or cfg.inner_replicas < 2:
        e.append("outer_replicas and inner_replicas must be >= 2")
    if not 0 < cfg.m0_target < 1:
        e.append("m0_target: must lie in (0, 1)")
    return e


def parse_config(text: str | None = None, overrides: dict | None = None, mode: str | None = None) -> ExperimentConfig:
    """Build a validated config; raises ConfigError listing every violation."""
    errors: list[str] = []
    top, sections = _read_text(text, errors) if text else ({}, {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    for k in overrides:
        if k not in KEYS:
            errors.append(f"unknown key {k!r}")
    chosen = overrides.get("mode", mode) or top.get("mode")
    if chosen is None:
        errors.append("mode: missing")
        raise ConfigError(errors)
    merged = dict(top)
    merged.update(sections.get(chosen, {}))
    merged.update(overrides)
    merged["mode"] = chosen
    values = {}
    for k, raw in merged.items():
        if k in KEYS:
            v = _convert(k, raw, errors)
            if v is not None or k == "vmax":
                values[k] = v
    # fields that failed to parse keep their defaults so range checks still run
    cfg = ExperimentConfig(**values)
    errors += _validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path, overrides: dict | None = None, mode: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    return parse_config(text, overrides, mode)


def emit_config(cfg: ExperimentConfig) -> str:
    """Effective config as text that parses back to an identical object."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "z":
            s = ", ".join(format_complex(z) for z in v)
        elif f.name in _LISTS:
            s = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif v is None:
            s = "auto"
        elif isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v)
        lines.append(f"{f.name} = {s}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
