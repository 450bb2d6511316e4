"""Experiment config files (TOML).

Unknown blocks and unknown keys are errors.  Schema::

    [domain]   kind = "interval_grid", lo, hi, n      | kind = "finite_set", points = [...]
    [metric]   expr (in x, y), name?
    [map]      expr (in x), name?
    [zeta]     family + family keys (see ZETA_KEYS), or family = "custom", expr (in t, s)
    [solver]   x0 (number or list), step_tol?, fix_tol?, max_iter?, window?
    [output]   format? ("csv" | "json"), path?
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .picard import DEFAULT_FIX_TOL, DEFAULT_MAX_ITER, DEFAULT_STEP_TOL, DEFAULT_WINDOW

BLOCK_KEYS = {
    "domain": {"kind", "lo", "hi", "n", "points"},
    "metric": {"expr", "name"},
    "map": {"expr", "name"},
    "zeta": {"family", "lambda", "phi", "psi", "f", "g", "eta", "quad_tol", "expr"},
    "solver": {"x0", "step_tol", "fix_tol", "max_iter", "window"},
    "output": {"format", "path"},
}

ZETA_KEYS = {
    "banach": {"lambda"},
    "rhoades": {"phi"},
    "psi_phi": {"psi", "phi"},
    "ratio": {"f", "g"},
    "geraghty": {"phi"},
    "boyd_wong": {"eta"},
    "integral": {"phi"},
    "custom": {"expr"},
}
ZETA_OPTIONAL = {"integral": {"quad_tol"}}

DOMAIN_KEYS = {"interval_grid": {"lo", "hi", "n"}, "finite_set": {"points"}}


@dataclass(frozen=True)
class SolverSettings:
    x0: tuple[float, ...]
    step_tol: float = DEFAULT_STEP_TOL
    fix_tol: float = DEFAULT_FIX_TOL
    max_iter: int = DEFAULT_MAX_ITER
    window: int = DEFAULT_WINDOW


def load(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return validate(raw)


def loads(text: str) -> dict[str, Any]:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from None
    return validate(raw)


def _number(block: str, key: str, value, *, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{block}] {key} must be a number, got {value!r}")
    if integer and not isinstance(value, int):
        raise ConfigError(f"[{block}] {key} must be an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"[{block}] {key} must be positive, got {value!r}")
    return value


def _string(block: str, key: str, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"[{block}] {key} must be a string, got {value!r}")
    return value


def validate(raw: dict[str, Any]) -> dict[str, Any]:
    for name, block in raw.items():
        if name not in BLOCK_KEYS:
            raise ConfigError(f"unknown block [{name}]; expected one of {', '.join(BLOCK_KEYS)}")
        if not isinstance(block, dict):
            raise ConfigError(f"[{name}] must be a table")
        unknown = set(block) - BLOCK_KEYS[name]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")

    if "domain" in raw:
        d = raw["domain"]
        kind = d.get("kind")
        if kind not in DOMAIN_KEYS:
            raise ConfigError(f"[domain] kind must be one of {', '.join(DOMAIN_KEYS)}, got {kind!r}")
        _exact_keys("domain", d, DOMAIN_KEYS[kind] | {"kind"})
        if kind == "interval_grid":
            _number("domain", "lo", d["lo"])
            _number("domain", "hi", d["hi"])
            _number("domain", "n", d["n"], positive=True, integer=True)
        else:
            if not isinstance(d["points"], list):
                raise ConfigError("[domain] points must be a list of numbers")
            for p in d["points"]:
                _number("domain", "points", p)

    for name in ("metric", "map"):
        if name in raw:
            b = raw[name]
            if "expr" not in b:
                raise ConfigError(f"[{name}] needs expr")
            _string(name, "expr", b["expr"])
            if "name" in b:
                _string(name, "name", b["name"])

    if "zeta" in raw:
        z = raw["zeta"]
        fam = z.get("family")
        if fam not in ZETA_KEYS:
            raise ConfigError(f"[zeta] family must be one of {', '.join(ZETA_KEYS)}, got {fam!r}")
        allowed = ZETA_KEYS[fam] | ZETA_OPTIONAL.get(fam, set()) | {"family"}
        extra = set(z) - allowed
        if extra:
            raise ConfigError(f"[zeta] key(s) {', '.join(sorted(extra))} do not apply to family {fam!r}")
        missing = ZETA_KEYS[fam] - set(z)
        if missing:
            raise ConfigError(f"[zeta] family {fam!r} needs {', '.join(sorted(missing))}")
        if fam == "banach":
            _number("zeta", "lambda", z["lambda"])
        if "quad_tol" in z:
            _number("zeta", "quad_tol", z["quad_tol"], positive=True)
        for k in ("phi", "psi", "f", "g", "eta", "expr"):
            if k in z:
                _string("zeta", k, z[k])

    if "solver" in raw:
        s = raw["solver"]
        if "x0" not in s:
            raise ConfigError("[solver] needs x0")
        x0 = s["x0"] if isinstance(s["x0"], list) else [s["x0"]]
        if not x0:
            raise ConfigError("[solver] x0 must not be empty")
        for v in x0:
            _number("solver", "x0", v)
        for k in ("step_tol", "fix_tol"):
            if k in s:
                _number("solver", k, s[k], positive=True)
        for k in ("max_iter", "window"):
            if k in s:
                _number("solver", k, s[k], positive=True, integer=True)

    if "output" in raw:
        o = raw["output"]
        if "format" in o and o["format"] not in ("csv", "json"):
            raise ConfigError(f"[output] format must be csv or json, got {o['format']!r}")
        if "path" in o:
            _string("output", "path", o["path"])
    return raw


def _exact_keys(block: str, b: dict, expected: set[str]):
    extra = set(b) - expected
    if extra:
        raise ConfigError(f"[{block}] key(s) {', '.join(sorted(extra))} do not apply to kind {b.get('kind')!r}")
    missing = expected - set(b)
    if missing:
        raise ConfigError(f"[{block}] needs {', '.join(sorted(missing))}")


def require(cfg: dict, *blocks: str):
    missing = [b for b in blocks if b not in cfg]
    if missing:
        raise ConfigError(f"config lacks block(s): {', '.join('[' + b + ']' for b in missing)}")


def solver_settings(cfg: dict) -> SolverSettings:
    s = cfg["solver"]
    x0 = s["x0"] if isinstance(s["x0"], list) else [s["x0"]]
    return SolverSettings(
        tuple(float(v) for v in x0),
        float(s.get("step_tol", DEFAULT_STEP_TOL)),
        float(s.get("fix_tol", DEFAULT_FIX_TOL)),
        int(s.get("max_iter", DEFAULT_MAX_ITER)),
        int(s.get("window", DEFAULT_WINDOW)),
    )
