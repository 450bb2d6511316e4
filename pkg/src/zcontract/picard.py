"""Picard iteration x_{n+1} = T(x_n) with convergence diagnostics.

Iteration stops at the first n with d(x_n, x_{n+1}) <= step_tol and
d(x_{n+1}, T x_{n+1}) <= fix_tol; the fixed-point estimate is x_{n+1} and
the step count reported is n.  On an interval grid the continuous map is
iterated (images are not snapped); on a finite set images are snapped to
member points.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NonFinitePoint, PointNotInDomain, WindowTooLarge
from .metric_core import Domain, MappingSpec, MetricSpec
from .report import CheckEntry, VerificationReport

DEFAULT_STEP_TOL = 1e-9
DEFAULT_FIX_TOL = 1e-9
DEFAULT_MAX_ITER = 10**6
DEFAULT_WINDOW = 32

CONVERGED = "converged"
MAX_ITER_EXCEEDED = "max_iter_exceeded"
DIVERGED_NONFINITE = "diverged_nonfinite"


@dataclass(frozen=True)
class IterationTrace:
    orbit: tuple[float, ...]
    step_dist: tuple[float, ...]  # d(x_n, x_{n+1}), one per step
    cauchy_modulus: tuple[float, ...]  # windowed sup distance from index n, one per step
    verdict: str
    fixed_point: float | None
    n_steps: int
    residual: float
    step_tol: float
    fix_tol: float
    window: int
    metric: MetricSpec | None = field(default=None, compare=False, repr=False)

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "fixed_point": self.fixed_point,
            "n_steps": self.n_steps,
            "residual": self.residual,
            "step_tol": self.step_tol,
            "fix_tol": self.fix_tol,
            "window": self.window,
            "orbit": list(self.orbit),
            "step_dist": list(self.step_dist),
            "cauchy_modulus": list(self.cauchy_modulus),
        }


def _snap(domain: Domain, x: float) -> float:
    k = int(domain.snap_indices([x])[0])
    if k < 0:
        raise PointNotInDomain(f"T produced {x!r}, which is not a member of the finite set", witness=x)
    return domain.points[k]


def iterate(
    domain: Domain,
    metric: MetricSpec,
    mapping: MappingSpec,
    x0: float,
    step_tol: float = DEFAULT_STEP_TOL,
    fix_tol: float = DEFAULT_FIX_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    window: int = DEFAULT_WINDOW,
) -> IterationTrace:
    """Run Picard iteration from ``x0``.

    Raises NonFinitePoint (carrying the partial trace) if T or d produces a
    NaN or an infinity.  The Cauchy modulus is computed with
    ``min(window, len(orbit))``.
    """
    if not (step_tol > 0 and fix_tol > 0):
        raise ValueError("tolerances must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if window < 1:
        raise ValueError("window must be at least 1")
    x0 = float(x0)
    if not domain.contains(x0):
        raise PointNotInDomain(f"start point {x0!r} is outside the domain", witness=x0)

    finite_set = domain.kind == "finite_set"
    if finite_set:
        x0 = _snap(domain, x0)

    def apply(x):
        y = mapping.point(x)
        if not math.isfinite(y):
            return y
        return _snap(domain, y) if finite_set else y

    orbit = [x0]
    steps: list[float] = []

    def diverged(bad_value, n):
        partial = _finish(orbit, steps, DIVERGED_NONFINITE, None, n, math.nan, step_tol, fix_tol, window, metric)
        raise NonFinitePoint(f"iterate left the reals at step {n}: {bad_value!r}", witness=n, trace=partial)

    x = x0
    fx = apply(x)
    for n in range(max_iter):
        if not math.isfinite(fx):
            diverged(fx, n)
        orbit.append(fx)
        step = metric.distance(x, fx)
        if not math.isfinite(step):
            diverged(step, n)
        steps.append(step)
        ffx = apply(fx)
        if step <= step_tol:
            if not math.isfinite(ffx):
                diverged(ffx, n + 1)
            res = metric.distance(fx, ffx)
            if res <= fix_tol:
                return _finish(orbit, steps, CONVERGED, fx, n, res, step_tol, fix_tol, window, metric)
        x, fx = fx, ffx
    last = orbit[-1]
    res = metric.distance(last, fx) if math.isfinite(fx) else math.inf
    return _finish(orbit, steps, MAX_ITER_EXCEEDED, None, max_iter, res, step_tol, fix_tol, window, metric)


def _finish(orbit, steps, verdict, u, n, res, step_tol, fix_tol, window, metric) -> IterationTrace:
    w = max(1, min(window, len(orbit)))
    cm = _windowed_modulus(orbit, metric, w) if len(orbit) > 1 else np.zeros(0)
    return IterationTrace(
        tuple(orbit), tuple(steps), tuple(float(c) for c in cm), verdict, u, n, res, step_tol, fix_tol, w, metric
    )


def _windowed_modulus(orbit, metric: MetricSpec, window: int) -> np.ndarray:
    """C_n = max d(x_i, x_j) over n <= i, j <= min(n + window, L - 1), for n < L - 1."""
    x = np.asarray(orbit, dtype=float)
    L = x.size
    out = np.zeros(L - 1)
    for lag in range(1, min(window, L - 1) + 1):
        d = np.asarray(metric(x[:-lag], x[lag:]), dtype=float)  # d(x_i, x_{i+lag}), i < L - lag
        # window [n, n + window] holds the pairs (i, i + lag) with n <= i <= n + window - lag
        span = window - lag + 1
        padded = np.concatenate((d, np.full(span - 1, -np.inf)))
        best = sliding_window_view(padded, span).max(axis=1)  # best[n] for n < L - lag
        m = min(L - 1, best.size)
        np.maximum(out[:m], best[:m], out=out[:m])
    return out


def cauchy_modulus(trace: IterationTrace, window: int, metric: MetricSpec | None = None) -> list[float]:
    """Windowed Cauchy modulus of the orbit, one value per step."""
    if window < 1 or window > len(trace.orbit):
        raise WindowTooLarge(f"window {window} does not fit a trace of {len(trace.orbit)} points", witness=window)
    metric = metric or trace.metric
    if metric is None:
        raise ValueError("trace carries no metric; pass one explicitly")
    if len(trace.orbit) < 2:
        return []
    return [float(c) for c in _windowed_modulus(trace.orbit, metric, window)]


def check_cauchy_modulus(trace: IterationTrace, window: int | None = None, metric: MetricSpec | None = None) -> VerificationReport:
    """The windowed modulus must be nonincreasing and its last value at most
    2 * step_tol * window (the last value spans the final step only)."""
    w = trace.window if window is None else window
    cm = cauchy_modulus(trace, w, metric) if (window is not None or metric is not None) else list(trace.cauchy_modulus)
    entries = []
    rise = [k for k in range(1, len(cm)) if cm[k] > cm[k - 1]]
    entries.append(
        CheckEntry(
            "cauchy_nonincreasing",
            not rise,
            rise[0] if rise else None,
            (cm[rise[0]] - cm[rise[0] - 1]) if rise else None,
            "" if not rise else "modulus increases at index",
        )
    )
    bound = 2 * trace.step_tol * w
    final = cm[-1] if cm else 0.0
    entries.append(
        CheckEntry(
            "cauchy_decay",
            final <= bound,
            None if final <= bound else len(cm) - 1,
            final,
            f"final modulus must be <= 2*step_tol*W = {bound:.3g}",
        )
    )
    return VerificationReport("Cauchy modulus", tuple(entries))


def check_asymptotic_regularity(trace: IterationTrace) -> VerificationReport:
    """Step distances must be nonincreasing and end at or below step_tol."""
    st = trace.step_dist
    if not st:
        raise ValueError("trace has no steps")
    rise = next((k for k in range(1, len(st)) if st[k] > st[k - 1]), None)
    entries = [
        CheckEntry(
            "steps_nonincreasing",
            rise is None,
            rise,
            None if rise is None else st[rise] - st[rise - 1],
            "" if rise is None else "d(x_n, x_n+1) increases at index n",
        ),
        CheckEntry(
            "final_step",
            st[-1] <= trace.step_tol,
            None if st[-1] <= trace.step_tol else len(st) - 1,
            st[-1],
            f"must be <= step_tol = {trace.step_tol:g}",
        ),
    ]
    return VerificationReport("asymptotic regularity", tuple(entries))


def check_boundedness(trace: IterationTrace, metric: MetricSpec | None = None) -> VerificationReport:
    """Report the orbit diameter max d(x_i, x_j); pass iff it is finite."""
    metric = metric or trace.metric
    if metric is None:
        raise ValueError("trace carries no metric; pass one explicitly")
    if not trace.orbit:
        raise ValueError("empty trace")
    pts = np.unique(np.asarray(trace.orbit, dtype=float))
    diam = 0.0
    chunk = max(1, (1 << 22) // pts.size)
    for start in range(0, pts.size, chunk):
        block = np.asarray(metric(pts[start : start + chunk, None], pts[None, :]))
        diam = max(diam, float(block.max()))
    ok = math.isfinite(diam)
    entry = CheckEntry("bounded", ok, None, diam, "orbit diameter")
    return VerificationReport("boundedness", (entry,))


# ------------------------------------------------------------ export


def _num(v) -> str:
    return "" if v is None else format(v, ".17g")


def trace_to_csv(trace: IterationTrace) -> str:
    """CSV with columns n, x_n, step_dist, cauchy_modulus (last row has no step)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "x_n", "step_dist", "cauchy_modulus"])
    for n, x in enumerate(trace.orbit):
        sd = trace.step_dist[n] if n < len(trace.step_dist) else None
        cm = trace.cauchy_modulus[n] if n < len(trace.cauchy_modulus) else None
        w.writerow([n, _num(x), _num(sd), _num(cm)])
    return buf.getvalue()
