"""Simulation functions: constructors for the standard families and a
numerical check of the three axioms.

A simulation function zeta: [0, inf)^2 -> R must satisfy

* zeta(0, 0) = 0,
* zeta(t, s) < s - t for all t, s > 0,
* limsup zeta(t_n, s_n) < 0 whenever t_n, s_n -> l > 0 from (0, inf).

The third axiom is asymptotic; it is approximated on the tail of generated
sequence families.  Semicontinuity hypotheses on inner functions cannot be
decided from samples and are only checked pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import InvalidInnerFunction, InvalidParameter, NonFiniteValue, QuadratureFailure
from .exprparse import CompiledExpr
from .report import CheckEntry, VerificationReport

FAMILIES = ("banach", "rhoades", "psi_phi", "ratio", "geraghty", "boyd_wong", "integral", "custom")

BUILTINS = {
    "half": "u/2",
    "rational_gain": "1/(1+u)",
    "bw": "u/(1+u)",
    "const2": "2",
    "identity": "u",
    "double": "2*u",
}

# {m * 10^k : k in -3..1, m in 1..9}, built from decimal literals so that
# e.g. 0.3 is the same double a user would type
DEFAULT_GRID = np.array(sorted(float(f"{m}e{k}") for k in range(-3, 2) for m in range(1, 10)))

SEQUENCE_KINDS = ("constant", "above", "below", "alternating")
DEFAULT_LIMITS = (0.5, 1.0, 5.0)
SEQUENCE_LENGTH = 200
ZETA3_MARGIN = 1e-9  # scaled by the limit

DEFAULT_QUAD_TOL = 1e-10
MAX_PANELS = 2**20


@dataclass(frozen=True)
class SimulationFunction:
    func: Callable = field(compare=False, repr=False)
    family: str
    params: dict = field(default_factory=dict)

    def __call__(self, t, s):
        if np.ndim(t) == 0 and np.ndim(s) == 0:
            return float(np.asarray(self.func(np.array([float(t)]), np.array([float(s)])))[0])
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast_shapes(t.shape, s.shape)
        return np.broadcast_to(np.asarray(self.func(t, s), dtype=float), shape)

    @property
    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family}({inner})"

    def describe(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}


# ------------------------------------------------------------ inner functions


def inner_function(spec, args: Sequence[str] = ("u",)) -> tuple[Callable, str]:
    """Resolve a built-in name, an expression string or a callable.

    Returns a numpy-broadcasting callable and a printable label.
    """
    if isinstance(spec, str):
        src = BUILTINS.get(spec, spec) if tuple(args) == ("u",) else spec
        return CompiledExpr(src, args), spec
    if isinstance(spec, CompiledExpr):
        return spec, spec.source
    if callable(spec):
        return spec, getattr(spec, "__name__", repr(spec))
    if isinstance(spec, (int, float)):
        c = float(spec)
        return (lambda *a: np.full(np.broadcast_shapes(*(np.shape(v) for v in a)), c)), repr(c)
    raise TypeError(f"cannot build an inner function from {spec!r}")


def _sample(fn: Callable, *arrays) -> np.ndarray:
    shape = np.broadcast_shapes(*(np.shape(a) for a in arrays))
    return np.broadcast_to(np.asarray(fn(*arrays), dtype=float), shape)


def _reject(message: str, mask: np.ndarray, *coords):
    k = np.unravel_index(int(np.flatnonzero(mask)[0]), mask.shape)
    w = tuple(float(np.broadcast_to(c, mask.shape)[k]) for c in coords)
    raise InvalidInnerFunction(f"{message} at {w if len(w) > 1 else w[0]!r}", witness=w if len(w) > 1 else w[0])


_SAMPLE = np.concatenate(([0.0], DEFAULT_GRID))


# ------------------------------------------------------------ constructors


def make_banach(lam: float) -> SimulationFunction:
    """zeta(t, s) = s - t / lam.

    lam = 0 is excluded: a map with d(Tx, Ty) = 0 everywhere is a
    Z-contraction for any catalogue zeta, since zeta(0, s) >= 0 for all of
    them, so no special case is needed.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise InvalidParameter(f"lambda must lie in (0, 1), got {lam!r}", witness=lam)
    return SimulationFunction(lambda t, s: s - t / lam, "banach", {"lambda": lam})


def make_rhoades(phi) -> SimulationFunction:
    """zeta(t, s) = s - phi(s) - t, phi(0) = 0 and phi > 0 elsewhere."""
    fn, label = inner_function(phi)
    v = _sample(fn, _SAMPLE)
    if v[0] != 0.0:
        raise InvalidInnerFunction(f"phi(0) must be 0, got {v[0]!r}", witness=0.0)
    bad = ~(v[1:] > 0)
    if bad.any():
        _reject("phi must be positive for u > 0", bad, DEFAULT_GRID)
    return SimulationFunction(lambda t, s: s - fn(s) - t, "rhoades", {"phi": label})


def make_psi_phi(psi, phi) -> SimulationFunction:
    """zeta(t, s) = psi(s) - phi(t) with psi(u) < u <= phi(u) for u > 0."""
    fpsi, lpsi = inner_function(psi)
    fphi, lphi = inner_function(phi)
    vpsi = _sample(fpsi, _SAMPLE)
    vphi = _sample(fphi, _SAMPLE)
    if vpsi[0] != 0.0 or vphi[0] != 0.0:
        raise InvalidInnerFunction("psi(0) and phi(0) must both be 0", witness=0.0)
    g = DEFAULT_GRID
    for ok, msg in (
        (vpsi[1:] > 0, "psi must be positive for u > 0"),
        (vpsi[1:] < g, "psi(u) < u violated"),
        (g <= vphi[1:], "u <= phi(u) violated"),
    ):
        if not ok.all():
            _reject(msg, ~ok, g)
    return SimulationFunction(lambda t, s: fpsi(s) - fphi(t), "psi_phi", {"psi": lpsi, "phi": lphi})


def make_ratio(f, g) -> SimulationFunction:
    """zeta(t, s) = s - (f(t, s) / g(t, s)) t with f > g > 0."""
    ff, lf = inner_function(f, ("t", "s"))
    fg, lg = inner_function(g, ("t", "s"))
    T, S = np.meshgrid(_SAMPLE, _SAMPLE, indexing="ij")
    vf = _sample(ff, T, S)
    vg = _sample(fg, T, S)
    for ok, msg in ((vf > 0, "f must be positive"), (vg > 0, "g must be positive")):
        if not ok.all():
            _reject(msg, ~ok, T, S)
    ok = vf[1:, 1:] > vg[1:, 1:]
    if not ok.all():
        _reject("f(t,s) > g(t,s) violated", ~ok, T[1:, 1:], S[1:, 1:])
    return SimulationFunction(lambda t, s: s - (ff(t, s) / fg(t, s)) * t, "ratio", {"f": lf, "g": lg})


def make_geraghty(phi) -> SimulationFunction:
    """zeta(t, s) = s phi(s) - t with 0 <= phi < 1.

    The limsup condition on phi at every r > 0 is the caller's responsibility.
    """
    fn, label = inner_function(phi)
    # phi(0) never enters zeta (it is multiplied by s = 0), so only u > 0 is sampled
    v = _sample(fn, DEFAULT_GRID)
    ok = (v >= 0) & (v < 1)
    if not ok.all():
        _reject("phi must map into [0, 1)", ~ok, DEFAULT_GRID)
    return SimulationFunction(lambda t, s: s * fn(s) - t, "geraghty", {"phi": label})


def make_boyd_wong(eta) -> SimulationFunction:
    """zeta(t, s) = eta(s) - t with eta(0) = 0 and 0 <= eta(u) < u."""
    fn, label = inner_function(eta)
    v = _sample(fn, _SAMPLE)
    if v[0] != 0.0:
        raise InvalidInnerFunction(f"eta(0) must be 0, got {v[0]!r}", witness=0.0)
    ok = (v[1:] >= 0) & (v[1:] < DEFAULT_GRID)
    if not ok.all():
        _reject("0 <= eta(u) < u violated", ~ok, DEFAULT_GRID)
    return SimulationFunction(lambda t, s: fn(s) - t, "boyd_wong", {"eta": label})


def make_integral(phi, quad_tol: float = DEFAULT_QUAD_TOL) -> SimulationFunction:
    """zeta(t, s) = s - integral_0^t phi(u) du.

    The integral is computed by :func:`integrate_from_zero`.  phi must be
    nonnegative and carry more than unit mass on every [0, eps].
    """
    if not quad_tol > 0:
        raise InvalidParameter(f"quad_tol must be positive, got {quad_tol!r}", witness=quad_tol)
    fn, label = inner_function(phi)
    v = _sample(fn, _SAMPLE)
    if not (v >= 0).all():
        _reject("phi must be nonnegative", ~(v >= 0), _SAMPLE)
    mass = integrate_from_zero(fn, DEFAULT_GRID, quad_tol)
    ok = mass > DEFAULT_GRID
    if not ok.all():
        _reject("integral_0^eps phi > eps violated", ~ok, DEFAULT_GRID)

    def zeta(t, s):
        return s - integrate_from_zero(fn, t, quad_tol)

    return SimulationFunction(zeta, "integral", {"phi": label, "quad_tol": quad_tol})


def make_custom(src) -> SimulationFunction:
    """Arbitrary zeta(t, s) given as an expression; nothing is validated here."""
    fn, label = inner_function(src, ("t", "s"))
    return SimulationFunction(fn, "custom", {"expr": label})


# ------------------------------------------------------------ quadrature


def simpson(f: Callable, a: float, b: float, tol: float = DEFAULT_QUAD_TOL, max_panels: int = MAX_PANELS) -> float:
    """Composite Simpson on [a, b], doubling panels until two successive
    estimates differ by at most ``tol``."""
    return float(integrate_from_zero(lambda u: f(u + a), np.array([b - a]), tol, max_panels)[0])


def integrate_from_zero(f: Callable, upper, tol: float = DEFAULT_QUAD_TOL, max_panels: int = MAX_PANELS) -> np.ndarray:
    """Vectorised composite Simpson for integral_0^t f(u) du over an array of t.

    Each t is refined independently by panel doubling (2, 4, 8, ...) until
    successive estimates differ by at most ``tol``; raises QuadratureFailure
    if ``max_panels`` is reached first.  Repeated values of t are integrated
    once.
    """
    upper = np.asarray(upper, dtype=float)
    uniq, inverse = np.unique(upper.ravel(), return_inverse=True)
    out = np.zeros(uniq.shape)
    active = np.flatnonzero(uniq != 0.0)
    if active.size:
        out[active] = _simpson_doubling(f, uniq[active], tol, max_panels)
    return out[inverse].reshape(upper.shape)


def _simpson_doubling(f, t, tol, max_panels):
    def F(u):
        return np.asarray(f(u), dtype=float) * np.ones_like(u)

    m = 2
    ends = F(np.zeros_like(t)) + F(t)
    interior_even = np.zeros_like(t)  # sum over interior nodes of even index
    odd = F(t * 0.5)
    estimate = t / (3 * m) * (ends + 4 * odd + 2 * interior_even)
    result = np.empty_like(t)
    idx = np.arange(t.size)
    while True:
        m *= 2
        if m > max_panels:
            raise QuadratureFailure(
                f"no convergence to {tol!r} within {max_panels} panels at t={t[0]!r}", witness=float(t[0])
            )
        interior_even = interior_even + odd
        odd = _midpoint_sum(F, t, m)
        new = t / (3 * m) * (ends + 4 * odd + 2 * interior_even)
        if not np.all(np.isfinite(new)):
            k = int(np.flatnonzero(~np.isfinite(new))[0])
            raise QuadratureFailure(f"non-finite integral estimate at t={t[k]!r}", witness=float(t[k]))
        done = np.abs(new - estimate) <= tol
        result[idx[done]] = new[done]
        if done.all():
            return result
        keep = ~done
        idx, t, ends, interior_even, odd, estimate = (
            idx[keep], t[keep], ends[keep], interior_even[keep], odd[keep], new[keep]
        )


def _midpoint_sum(F, t, m, chunk_elems=1 << 22):
    """Sum of F at the odd nodes (2j+1) t / m, j = 0 .. m/2 - 1."""
    total = np.zeros_like(t)
    half = m // 2
    step = max(1, chunk_elems // max(1, t.size))
    for j0 in range(0, half, step):
        j = np.arange(j0, min(half, j0 + step))
        frac = (2 * j + 1) / m
        total += F(t[:, None] * frac[None, :]).sum(axis=1)
    return total


# ------------------------------------------------------------ zeta3 sequences


@dataclass(frozen=True)
class SequenceFamily:
    """Positive sequences t_n, s_n (n = 1..length) converging to ``limit``.

    * constant:    t_n = s_n = l
    * above:       t_n = l (1 + c/n),  s_n = l (1 + 2c/n)
    * below:       t_n = l (1 - c/n),  s_n = l (1 - c/(2n))
    * alternating: t_n = l (1 + (-1)^n c/n),  s_n = l (1 - (-1)^n c/n)
    """

    kind: str
    limit: float
    length: int = SEQUENCE_LENGTH
    c: float = 0.5

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise InvalidParameter(f"unknown sequence kind {self.kind!r}")
        if not self.limit > 0:
            raise InvalidParameter("sequence limit must be positive", witness=self.limit)
        if not 0 < self.c < 1:
            raise InvalidParameter("decay constant c must lie in (0, 1)", witness=self.c)
        if self.length < 2:
            raise InvalidParameter("sequence length must be at least 2", witness=self.length)

    def terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = np.arange(1, self.length + 1, dtype=float)
        l, c = self.limit, self.c
        if self.kind == "constant":
            t = np.full_like(n, l)
            s = t.copy()
        elif self.kind == "above":
            t, s = l * (1 + c / n), l * (1 + 2 * c / n)
        elif self.kind == "below":
            t, s = l * (1 - c / n), l * (1 - c / (2 * n))
        else:
            sign = np.where(n % 2 == 0, 1.0, -1.0)
            t, s = l * (1 + sign * c / n), l * (1 - sign * c / n)
        return n.astype(int), t, s

    @property
    def label(self) -> str:
        return f"{self.kind}(l={self.limit:g})"


def default_families(limits: Sequence[float] = DEFAULT_LIMITS) -> list[SequenceFamily]:
    return [SequenceFamily(k, float(l)) for l in limits for k in SEQUENCE_KINDS]


# ------------------------------------------------------------ axiom check


def _finite_or_raise(values: np.ndarray, where: str, *coords):
    bad = ~np.isfinite(values)
    if bad.any():
        k = np.unravel_index(int(np.flatnonzero(bad)[0]), bad.shape)
        w = tuple(float(np.broadcast_to(c, bad.shape)[k]) for c in coords)
        raise NonFiniteValue(f"zeta is not finite at {where} {w!r}", witness=w)


def check_axioms(
    zeta: SimulationFunction,
    grid: Sequence[float] | None = None,
    families: Sequence[SequenceFamily] | None = None,
) -> VerificationReport:
    """Check the three simulation-function axioms numerically.

    zeta1 is exact.  zeta2 is checked on every (t, s) in grid x grid; the
    witness is the smallest failing pair in sorted order, so it does not
    depend on the order of ``grid``.  zeta3 requires the maximum of
    zeta(t_n, s_n) over the second half of every family to be at most
    ``-1e-9 * limit``.
    """
    g = DEFAULT_GRID if grid is None else np.unique(np.asarray(grid, dtype=float))
    if g.size == 0 or not (g > 0).all():
        raise InvalidParameter("zeta2 grid must be nonempty and strictly positive")
    fams = default_families() if families is None else list(families)

    entries = []

    z00 = zeta(0.0, 0.0)
    if not np.isfinite(z00):
        raise NonFiniteValue("zeta(0, 0) is not finite", witness=(0.0, 0.0))
    entries.append(CheckEntry("zeta1", z00 == 0.0, None if z00 == 0.0 else (0.0, 0.0), z00))

    T, S = np.meshgrid(g, g, indexing="ij")
    Z = np.asarray(zeta(T, S))
    _finite_or_raise(Z, "(t, s) =", T, S)
    bad = ~(Z < S - T)
    if bad.any():
        i, j = np.unravel_index(int(np.flatnonzero(bad)[0]), bad.shape)
        entries.append(
            CheckEntry(
                "zeta2",
                False,
                (float(T[i, j]), float(S[i, j])),
                float(Z[i, j] - (S[i, j] - T[i, j])),
                "zeta(t,s) < s - t fails at witness (t, s)",
            )
        )
    else:
        entries.append(CheckEntry("zeta2", True, None, float(np.max(Z - (S - T))), f"{Z.size} pairs"))

    worst = None
    witness = None
    for fam in fams:
        n, t, s = fam.terms()
        z = np.asarray(zeta(t, s))
        _finite_or_raise(z, f"family {fam.label} (t, s) =", t, s)
        tail = n > fam.length // 2
        k = int(np.argmax(np.where(tail, z, -np.inf)))
        top = float(z[k])
        if worst is None or top > worst:
            worst = top
        if witness is None and top > -ZETA3_MARGIN * fam.limit:
            witness = {"family": fam.kind, "limit": fam.limit, "index": int(n[k])}
    entries.append(
        CheckEntry(
            "zeta3",
            witness is None,
            witness,
            worst,
            f"{len(fams)} families, tail max must be <= -{ZETA3_MARGIN:g}*limit",
        )
    )
    return VerificationReport(f"zeta {zeta.label}", tuple(entries))


# ------------------------------------------------------------ catalogue


def catalogue() -> dict[str, SimulationFunction]:
    """The fixed set of simulation functions used for sweeps and classification."""
    return {
        "banach(0.1)": make_banach(0.1),
        "banach(0.5)": make_banach(0.5),
        "banach(0.9)": make_banach(0.9),
        "rhoades": make_rhoades("half"),
        "psi_phi": make_psi_phi("half", "double"),
        "ratio": make_ratio("t + 2", "t + 1"),
        "geraghty": make_geraghty("rational_gain"),
        "boyd_wong": make_boyd_wong("bw"),
        "integral": make_integral("const2"),
    }


def from_config(block: dict[str, Any]) -> SimulationFunction:
    """Build a zeta from a ``[zeta]`` config block (already validated for keys)."""
    family = block.get("family")
    if family == "banach":
        return make_banach(block["lambda"])
    if family == "rhoades":
        return make_rhoades(block["phi"])
    if family == "psi_phi":
        return make_psi_phi(block["psi"], block["phi"])
    if family == "ratio":
        return make_ratio(block["f"], block["g"])
    if family == "geraghty":
        return make_geraghty(block["phi"])
    if family == "boyd_wong":
        return make_boyd_wong(block["eta"])
    if family == "integral":
        return make_integral(block["phi"], float(block.get("quad_tol", DEFAULT_QUAD_TOL)))
    if family == "custom":
        return make_custom(block["expr"])
    raise InvalidParameter(f"unknown zeta family {family!r}; expected one of {', '.join(FAMILIES)}")
