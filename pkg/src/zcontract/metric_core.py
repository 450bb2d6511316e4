"""Discretised domains, metrics and self-maps, with exhaustive axiom checks.

Completeness of the underlying space cannot be observed on a finite sample
and is taken as an assumption of the user.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateInterval,
    DomainError,
    DomainTooLarge,
    DuplicatePoint,
    EmptyDomain,
    NonFiniteDistance,
)
from .exprparse import CompiledExpr
from .report import CheckEntry, VerificationReport

SNAP_TOL = 1e-12
MAX_POINTS = 2048
# relative slack on d(x,y) + d(y,z); absorbs one or two roundings in the sum
TRIANGLE_RTOL = 1e-12


@dataclass(frozen=True)
class Domain:
    kind: str  # "interval_grid" | "finite_set"
    points: tuple[float, ...]
    lo: float | None = None
    hi: float | None = None
    resolution: int | None = None

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def __len__(self) -> int:
        return len(self.points)

    def contains(self, x: float) -> bool:
        if self.kind == "interval_grid":
            return self.lo <= x <= self.hi
        return bool(np.any(np.abs(self.array - x) <= SNAP_TOL))

    def snap_indices(self, values) -> np.ndarray:
        """Index of the member within SNAP_TOL of each value, or -1."""
        pts = self.array
        v = np.atleast_1d(np.asarray(values, dtype=float))
        pos = np.clip(np.searchsorted(pts, v), 0, len(pts) - 1)
        best = pos.copy()
        left = np.clip(pos - 1, 0, len(pts) - 1)
        closer = np.abs(pts[left] - v) < np.abs(pts[pos] - v)
        best[closer] = left[closer]
        ok = np.abs(pts[best] - v) <= SNAP_TOL
        return np.where(ok, best, -1)

    def describe(self) -> dict:
        if self.kind == "interval_grid":
            return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "n": self.resolution}
        return {"kind": self.kind, "points": list(self.points)}


def build_domain(config: Mapping) -> Domain:
    """Materialise a domain from ``{"kind": ..., ...}``.

    ``interval_grid`` takes ``lo``, ``hi`` and ``n`` (number of sub-intervals);
    ``finite_set`` takes ``points``.
    """
    kind = config.get("kind")
    if kind == "interval_grid":
        lo, hi, n = float(config["lo"]), float(config["hi"]), int(config["n"])
        if not lo < hi:
            raise DegenerateInterval(f"interval needs lo < hi, got [{lo}, {hi}]", witness=(lo, hi))
        if n < 1:
            raise EmptyDomain(f"grid resolution must be >= 1, got {n}")
        if n + 1 > MAX_POINTS:
            raise DomainTooLarge(f"{n + 1} grid points exceed the cap of {MAX_POINTS}")
        pts = lo + (np.arange(n + 1) * (hi - lo)) / n
        pts[-1] = hi
        dup = np.flatnonzero(np.diff(pts) <= 0)
        if dup.size:
            raise DuplicatePoint("grid too fine for double precision", witness=float(pts[dup[0]]))
        return Domain(kind, tuple(float(p) for p in pts), lo, hi, n)
    if kind == "finite_set":
        raw = [float(p) for p in config.get("points", ())]
        if not raw:
            raise EmptyDomain("finite_set needs at least one point")
        if len(raw) > MAX_POINTS:
            raise DomainTooLarge(f"{len(raw)} points exceed the cap of {MAX_POINTS}")
        seen = set()
        for p in raw:
            if p in seen:
                raise DuplicatePoint(f"duplicate point {p!r}", witness=p)
            seen.add(p)
        if not all(np.isfinite(raw)):
            raise EmptyDomain("finite_set points must be finite")
        return Domain(kind, tuple(sorted(raw)))
    raise ValueError(f"unknown domain kind {kind!r}")


@dataclass(frozen=True)
class MetricSpec:
    """A distance d(x, y). ``func`` must broadcast over numpy arrays."""

    func: Callable = field(compare=False)
    name: str = "d"
    source: str | None = None

    @classmethod
    def from_expr(cls, src: str, name: str | None = None) -> "MetricSpec":
        return cls(CompiledExpr(src, ("x", "y")), name or src, src)

    @classmethod
    def from_table(cls, points: Sequence[float], table, name: str = "table") -> "MetricSpec":
        """Metric on a finite point set given as an explicit distance matrix."""
        pts = np.asarray(points, dtype=float)
        tab = np.asarray(table, dtype=float)
        order = np.argsort(pts)
        pts, tab = pts[order], tab[np.ix_(order, order)]

        def lookup(x, y):
            i = np.searchsorted(pts, x)
            j = np.searchsorted(pts, y)
            return tab[i, j]

        return cls(lookup, name)

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), shape)

    def distance(self, x: float, y: float) -> float:
        if isinstance(self.func, CompiledExpr):
            return float(self.func(float(x), float(y)))
        return float(self(np.array([x]), np.array([y]))[0])

    def matrix(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.array(self(p[:, None], p[None, :]))


@dataclass(frozen=True)
class MappingSpec:
    """A self-map T(x). ``func`` must broadcast over numpy arrays."""

    func: Callable = field(compare=False)
    name: str = "T"
    source: str | None = None

    @classmethod
    def from_expr(cls, src: str, name: str | None = None) -> "MappingSpec":
        return cls(CompiledExpr(src, ("x",)), name or src, src)

    @classmethod
    def from_table(cls, points: Sequence[float], images: Sequence[float], name: str = "table") -> "MappingSpec":
        pts = np.asarray(points, dtype=float)
        img = np.asarray(images, dtype=float)
        order = np.argsort(pts)
        pts, img = pts[order], img[order]

        def lookup(x):
            return img[np.searchsorted(pts, x)]

        return cls(lookup, name)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape)

    def point(self, x: float) -> float:
        if isinstance(self.func, CompiledExpr):
            return float(self.func(float(x)))
        return float(self(np.array([x]))[0])


def _first(mask: np.ndarray):
    idx = np.flatnonzero(mask)
    return None if idx.size == 0 else np.unravel_index(idx[0], mask.shape)


def verify_metric(d: MetricSpec, domain: Domain) -> VerificationReport:
    """Check nonnegativity, identity of indiscernibles, symmetry and the
    triangle inequality over every pair and ordered triple of the domain.

    Witnesses are the lexicographically smallest offending tuple (by point
    order).  Raises NonFiniteDistance if any distance is NaN or infinite.
    """
    pts = domain.array
    n = len(pts)
    M = d.matrix(pts)
    bad = _first(~np.isfinite(M))
    if bad is not None:
        i, j = bad
        raise NonFiniteDistance(
            f"d({pts[i]!r}, {pts[j]!r}) is not finite", witness=(float(pts[i]), float(pts[j]))
        )

    entries = []

    w = _first(M < 0)
    entries.append(
        CheckEntry(
            "nonnegativity",
            w is None,
            None if w is None else (float(pts[w[0]]), float(pts[w[1]])),
            None if w is None else float(M[w]),
        )
    )

    # points are pairwise distinct, so zeros belong exactly on the diagonal
    eye = np.eye(n, dtype=bool)
    w = _first((M == 0) != eye)
    entries.append(
        CheckEntry(
            "identity",
            w is None,
            None if w is None else (float(pts[w[0]]), float(pts[w[1]])),
            None if w is None else float(M[w]),
        )
    )

    w = _first(np.triu(M != M.T, 1))
    entries.append(
        CheckEntry(
            "symmetry",
            w is None,
            None if w is None else (float(pts[w[0]]), float(pts[w[1]])),
            None if w is None else float(M[w] - M.T[w]),
        )
    )

    witness = None
    excess = None
    scaled = M * (1.0 + TRIANGLE_RTOL)
    via = np.empty_like(M)
    viol = np.empty(M.shape, dtype=bool)
    for i in range(n):
        # via[j, k] = (d(x_i, x_j) + d(x_j, x_k)) * (1 + rtol)
        np.add(scaled[i][:, None], scaled, out=via)
        np.greater(M[i][None, :], via, out=viol)
        if viol.any():
            j, k = _first(viol)
            witness = (float(pts[i]), float(pts[j]), float(pts[k]))
            excess = float(M[i, k] - (M[i, j] + M[j, k]))
            break
    entries.append(
        CheckEntry(
            "triangle",
            witness is None,
            witness,
            excess,
            "" if witness is None else "d(x,z) > d(x,y) + d(y,z) at witness (x, y, z)",
        )
    )
    return VerificationReport(f"metric {d.name}", tuple(entries))


def images(T: MappingSpec, domain: Domain) -> np.ndarray:
    """T applied to every domain point; locates the offending x on a domain error."""
    pts = domain.array
    try:
        return np.array(T(pts))
    except DomainError as exc:
        for x in pts:
            try:
                T.point(float(x))
            except DomainError:
                raise DomainError(f"T({x!r}): {exc}", witness=float(x)) from exc
        raise


def check_closure(T: MappingSpec, domain: Domain) -> VerificationReport:
    """Check that T maps the domain into itself.

    Interval grids require ``lo <= T(x) <= hi``; finite sets require every
    image to coincide with a member within ``SNAP_TOL``.
    """
    pts = domain.array
    try:
        img = images(T, domain)
    except DomainError as exc:
        entry = CheckEntry("closure", False, exc.witness, None, str(exc))
        return VerificationReport(f"map {T.name}", (entry,))
    finite = np.isfinite(img)
    if domain.kind == "interval_grid":
        ok = finite & (img >= domain.lo) & (img <= domain.hi)
    else:
        ok = finite & (domain.snap_indices(img) >= 0)
    bad = np.flatnonzero(~ok)
    if bad.size:
        k = bad[0]
        entry = CheckEntry(
            "closure", False, (float(pts[k]), float(img[k])), None, "T(x) leaves the domain at witness (x, T(x))"
        )
    else:
        entry = CheckEntry("closure", True)
    return VerificationReport(f"map {T.name}", (entry,))
