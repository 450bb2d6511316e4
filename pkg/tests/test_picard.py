import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zcontract.errors import NonFinitePoint, PointNotInDomain, WindowTooLarge
from zcontract.metric_core import MappingSpec, MetricSpec, build_domain
from zcontract.picard import (
    CONVERGED,
    DIVERGED_NONFINITE,
    MAX_ITER_EXCEEDED,
    cauchy_modulus,
    check_asymptotic_regularity,
    check_boundedness,
    check_cauchy_modulus,
    iterate,
    trace_to_csv,
)

ABS = MetricSpec.from_expr("abs(x - y)")
MAXM = MetricSpec.from_expr("if(x = y, 0, max(x, y))")
EX2_MAP = MappingSpec.from_expr("if(x <= 0.5, x/2, 0)")
UNIT = build_domain({"kind": "interval_grid", "lo": 0.0, "hi": 1.0, "n": 1000})


def brute_force_modulus(orbit, d, window):
    """C_n = max over n <= i, j <= min(n + window, L - 1), straight from the definition."""
    L = len(orbit)
    out = []
    for n in range(L - 1):
        hi = min(n + window, L - 1)
        out.append(max(d.distance(orbit[i], orbit[j]) for i in range(n, hi + 1) for j in range(n, hi + 1)))
    return out


def test_example2_from_half():
    tr = iterate(UNIT, MAXM, EX2_MAP, 0.5)
    assert tr.verdict == CONVERGED
    assert tr.fixed_point == pytest.approx(0.0, abs=1e-9)
    for n in range(10):
        assert tr.orbit[n] == 0.5 / 2**n
    # under the max-metric d(x_n, x_{n+1}) = x_n
    assert tr.step_dist[:5] == (0.5, 0.25, 0.125, 0.0625, 0.03125)
    assert 25 <= tr.n_steps <= 35
    assert tr.residual <= 1e-9


def test_already_fixed():
    tr = iterate(UNIT, MAXM, EX2_MAP, 0.0)
    assert tr.verdict == CONVERGED and tr.n_steps == 0 and tr.residual == 0.0
    assert tr.step_dist == (0.0,)
    assert check_asymptotic_regularity(tr).passed


def test_halving_step_count():
    tr = iterate(UNIT, ABS, MappingSpec.from_expr("x/2"), 1.0, step_tol=1e-6, fix_tol=1e-6)
    assert tr.converged
    # first n with 2^-(n+1) <= 1e-6 is n = 19
    assert tr.n_steps == 19
    assert tr.fixed_point == 2.0**-20


def test_max_iter_and_oscillation():
    tr = iterate(UNIT, ABS, MappingSpec.from_expr("1 - x"), 0.2, max_iter=50)
    assert tr.verdict == MAX_ITER_EXCEEDED and tr.fixed_point is None
    assert all(abs(s - 0.6) < 1e-12 for s in tr.step_dist)
    rep = check_asymptotic_regularity(tr)
    assert not rep["final_step"].passed
    assert rep["final_step"].value == pytest.approx(0.6)
    cm = cauchy_modulus(tr, 4)
    assert all(abs(c - 0.6) < 1e-12 for c in cm)
    rep = check_cauchy_modulus(tr, 4)
    assert rep["cauchy_nonincreasing"].passed and not rep["cauchy_decay"].passed


def test_nonfinite_carries_trace():
    dom = build_domain({"kind": "interval_grid", "lo": 0.0, "hi": 10.0, "n": 10})
    T = MappingSpec(lambda x: np.where(x > 3, np.inf, x + 1.5), "blowup")
    with pytest.raises(NonFinitePoint) as info:
        iterate(dom, ABS, T, 0.0)
    tr = info.value.trace
    assert tr.verdict == DIVERGED_NONFINITE
    assert tr.orbit == (0.0, 1.5, 3.0, 4.5)
    assert info.value.witness == 3


def test_start_outside_domain():
    with pytest.raises(PointNotInDomain):
        iterate(UNIT, ABS, EX2_MAP, 1.5)


def test_finite_set_snaps():
    dom = build_domain({"kind": "finite_set", "points": [0.0, 0.1, 0.2]})
    T = MappingSpec.from_expr("max(x - 0.1, 0)")
    tr = iterate(dom, ABS, T, 0.2)
    assert tr.converged and tr.fixed_point == 0.0
    assert tr.orbit == (0.2, 0.1, 0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(
    x0=st.floats(0.0, 1.0),
    window=st.integers(1, 12),
    map_src=st.sampled_from(["x/2", "x*x", "if(x <= 0.5, x/2, 0)", "1 - x", "x/(1+x)"]),
    metric=st.sampled_from([ABS, MAXM]),
)
def test_modulus_matches_brute_force(x0, window, map_src, metric):
    tr = iterate(UNIT, metric, MappingSpec.from_expr(map_src), x0, max_iter=40)
    w = min(window, len(tr.orbit))
    assert cauchy_modulus(tr, w) == brute_force_modulus(tr.orbit, metric, w)


def test_example2_modulus_equals_orbit():
    tr = iterate(UNIT, MAXM, EX2_MAP, 0.5)
    cm = cauchy_modulus(tr, 8)
    assert cm == list(tr.orbit[:-1])
    assert check_cauchy_modulus(tr, 8).passed


def test_window_too_large():
    tr = iterate(UNIT, ABS, MappingSpec.from_expr("x/2"), 1.0, step_tol=0.1, fix_tol=0.1)
    with pytest.raises(WindowTooLarge):
        cauchy_modulus(tr, len(tr.orbit) + 1)


def test_boundedness():
    tr = iterate(UNIT, MAXM, EX2_MAP, 0.5)
    rep = check_boundedness(tr)
    assert rep.passed and rep["bounded"].value == 0.5
    tr = iterate(UNIT, MAXM, EX2_MAP, 0.0)
    assert check_boundedness(tr)["bounded"].value == 0.0


def test_csv_export():
    tr = iterate(UNIT, ABS, MappingSpec.from_expr("x/2"), 1.0, step_tol=1e-3, fix_tol=1e-3)
    rows = list(csv.reader(io.StringIO(trace_to_csv(tr))))
    assert rows[0] == ["n", "x_n", "step_dist", "cauchy_modulus"]
    assert len(rows) == len(tr.orbit) + 1
    assert rows[-1][2:] == ["", ""]
    for n, row in enumerate(rows[1:-1]):
        assert int(row[0]) == n
        assert float(row[1]) == tr.orbit[n]
        assert float(row[2]) == tr.step_dist[n]
        assert float(row[3]) == tr.cauchy_modulus[n]


def test_json_export_round_trip():
    tr = iterate(UNIT, ABS, MappingSpec.from_expr("x/3"), 0.9)
    back = json.loads(json.dumps(tr.to_dict()))
    assert back["orbit"] == list(tr.orbit)
    assert back["verdict"] == CONVERGED
    assert math.isclose(back["fixed_point"], tr.fixed_point)


def test_bad_arguments():
    with pytest.raises(ValueError):
        iterate(UNIT, ABS, EX2_MAP, 0.5, step_tol=0.0)
    with pytest.raises(ValueError):
        iterate(UNIT, ABS, EX2_MAP, 0.5, max_iter=0)
