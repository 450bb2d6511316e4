"""Randomised finite-scale check of fixed-point uniqueness and Picard convergence.

Random metric spaces of at most 8 points are built from random symmetric
weights closed under shortest paths (so the triangle inequality holds), and
paired with random self-maps.  Whenever some catalogue zeta certifies the map
as a Z-contraction, the map must have exactly one fixed point and Picard
iteration must reach it from every start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contraction import ContractionInstance, brute_force_fixed_points, pair_data, verify_z
from .metric_core import Domain, MappingSpec, MetricSpec, build_domain, verify_metric
from .picard import check_asymptotic_regularity, check_cauchy_modulus, iterate
from .simfun import SimulationFunction, catalogue

MAP_KINDS = ("uniform", "monotone", "small_image")


@dataclass(frozen=True)
class FiniteInstance:
    domain: Domain
    metric: MetricSpec
    mapping: MappingSpec
    table: np.ndarray
    images: tuple[int, ...]
    map_kind: str


def repaired_metric(weights: np.ndarray) -> np.ndarray:
    """Shortest-path closure (Floyd-Warshall) of a symmetric positive weight matrix."""
    D = np.array(weights, dtype=float)
    np.fill_diagonal(D, 0.0)
    for k in range(D.shape[0]):
        D = np.minimum(D, D[:, k : k + 1] + D[k : k + 1, :])
    return D


def random_instance(rng: np.random.Generator, max_points: int = 8) -> FiniteInstance:
    n = int(rng.integers(2, max_points + 1))
    points = np.arange(n, dtype=float)
    if rng.random() < 0.5:
        w = rng.uniform(0.1, 1.0, size=(n, n))
        table = repaired_metric(np.triu(w, 1) + np.triu(w, 1).T)
    else:
        coords = np.sort(rng.uniform(0.0, 1.0, size=n))
        table = np.abs(coords[:, None] - coords[None, :])
    kind = MAP_KINDS[int(rng.integers(len(MAP_KINDS)))]
    if kind == "uniform":
        img = rng.integers(0, n, size=n)
    elif kind == "monotone":
        img = np.sort(rng.integers(0, n, size=n))
    else:
        support = rng.choice(n, size=min(n, int(rng.integers(1, 3))), replace=False)
        img = support[rng.integers(0, support.size, size=n)]
    domain = build_domain({"kind": "finite_set", "points": points.tolist()})
    metric = MetricSpec.from_table(points, table, "random")
    mapping = MappingSpec.from_table(points, points[img], kind)
    return FiniteInstance(domain, metric, mapping, table, tuple(int(i) for i in img), kind)


def run_oracle(seed: int = 0, count: int = 300, zetas: dict[str, SimulationFunction] | None = None) -> dict:
    """Generate ``count`` instances and check every certified one.

    Returns a JSON-ready summary; ``counterexamples`` lists every certified
    instance that violated uniqueness, convergence or the diagnostics.
    """
    rng = np.random.default_rng(seed)
    zetas = catalogue() if zetas is None else zetas
    records = []
    counterexamples = []
    certified = 0
    for idx in range(count):
        inst = random_instance(rng)
        if not verify_metric(inst.metric, inst.domain).passed:
            counterexamples.append({"index": idx, "reason": "repaired metric failed its axioms"})
            continue
        pd = pair_data(inst.domain, inst.metric, inst.mapping)
        via = [name for name, z in zetas.items() if verify_z(ContractionInstance(inst.domain, inst.metric, inst.mapping, z), pd).passed]
        rec = {"index": idx, "n": len(inst.domain), "map_kind": inst.map_kind, "images": list(inst.images), "certified_by": via}
        if via:
            certified += 1
            problems = _check_certified(inst)
            rec["fixed_points"] = brute_force_fixed_points(inst.domain, inst.mapping)
            if problems:
                rec["problems"] = problems
                counterexamples.append(rec)
        records.append(rec)
    return {
        "seed": seed,
        "count": count,
        "certified": certified,
        "counterexamples": counterexamples,
        "instances": records,
    }


def _check_certified(inst: FiniteInstance) -> list[str]:
    problems = []
    fps = brute_force_fixed_points(inst.domain, inst.mapping)
    if len(fps) != 1:
        problems.append(f"{len(fps)} fixed points")
    for x0 in inst.domain.points:
        tr = iterate(inst.domain, inst.metric, inst.mapping, x0, max_iter=10 * len(inst.domain) + 10)
        if not tr.converged:
            problems.append(f"no convergence from {x0:g}")
            continue
        if len(fps) == 1 and tr.fixed_point != fps[0]:
            problems.append(f"start {x0:g} converged to {tr.fixed_point:g}, not {fps[0]:g}")
        if not check_asymptotic_regularity(tr).passed:
            problems.append(f"step distances increase from {x0:g}")
        if not check_cauchy_modulus(tr).entries[0].passed:
            problems.append(f"Cauchy modulus increases from {x0:g}")
    return problems
