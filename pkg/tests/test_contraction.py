import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zcontract.contraction import (
    ContractionInstance,
    brute_force_fixed_points,
    check_remark1,
    classify,
    pair_data,
    verify_z,
)
from zcontract.metric_core import MappingSpec, MetricSpec, build_domain
from zcontract.oracle import random_instance
from zcontract.simfun import catalogue, make_banach, make_custom, make_ratio

ABS = MetricSpec.from_expr("abs(x - y)")
MAXM = MetricSpec.from_expr("if(x = y, 0, max(x, y))")
EX2_MAP = MappingSpec.from_expr("if(x <= 0.5, x/2, 0)")


def grid(n, lo=0.0, hi=1.0):
    return build_domain({"kind": "interval_grid", "lo": lo, "hi": hi, "n": n})


def finite(*pts):
    return build_domain({"kind": "finite_set", "points": list(pts)})


def scalar_verify_z(domain, d, T, zeta):
    """Double loop over unordered pairs; most negative value, first on ties."""
    worst, where = np.inf, None
    for i, j in itertools.combinations_with_replacement(range(len(domain)), 2):
        x, y = domain.points[i], domain.points[j]
        v = zeta(d.distance(T.point(x), T.point(y)), d.distance(x, y))
        if v < worst:
            worst, where = v, (x, y)
    return worst >= 0, where


def test_example2_instance():
    zeta = make_ratio("t + 2", "t + 1")
    rep = verify_z(ContractionInstance(grid(200), MAXM, EX2_MAP, zeta))
    assert rep.passed
    assert "20301 pairs" in rep["z_contraction"].detail


def test_halving_banach():
    assert verify_z(ContractionInstance(grid(50), ABS, MappingSpec.from_expr("x/2"), make_banach(0.6))).passed
    rep = verify_z(ContractionInstance(grid(50), ABS, MappingSpec.from_expr("x/2"), make_banach(0.4)))
    assert not rep.passed


@pytest.mark.parametrize("name", list(catalogue()))
def test_identity_fails_every_zeta(name):
    rep = verify_z(ContractionInstance(finite(0.0, 1.0), ABS, MappingSpec.from_expr("x"), catalogue()[name]))
    assert not rep.passed
    assert rep["z_contraction"].witness == (0.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), name=st.sampled_from(list(catalogue())))
def test_verify_z_matches_scalar_loop(seed, name):
    inst = random_instance(np.random.default_rng(seed))
    zeta = catalogue()[name]
    rep = verify_z(ContractionInstance(inst.domain, inst.metric, inst.mapping, zeta))
    ok, where = scalar_verify_z(inst.domain, inst.metric, inst.mapping, zeta)
    assert rep.passed == ok
    if not ok:
        assert rep["z_contraction"].witness == where


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), lam=st.sampled_from([0.2, 0.5, 0.8]))
def test_banach_embeds_in_larger_lambda(seed, lam):
    inst = random_instance(np.random.default_rng(seed))
    pd = pair_data(inst.domain, inst.metric, inst.mapping)
    if verify_z(ContractionInstance(inst.domain, inst.metric, inst.mapping, make_banach(lam)), pd).passed:
        for bigger in (lam + 0.05, 0.95):
            z = make_banach(bigger)
            assert verify_z(ContractionInstance(inst.domain, inst.metric, inst.mapping, z), pd).passed


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_z_contraction_implies_remark1(seed):
    inst = random_instance(np.random.default_rng(seed))
    pd = pair_data(inst.domain, inst.metric, inst.mapping)
    certified = any(
        verify_z(ContractionInstance(inst.domain, inst.metric, inst.mapping, z), pd).passed
        for z in catalogue().values()
    )
    if certified:
        assert check_remark1(inst.domain, inst.metric, inst.mapping, pd).passed


def test_remark1():
    assert check_remark1(grid(20), ABS, MappingSpec.from_expr("x/2")).passed
    rep = check_remark1(finite(0.0, 1.0), ABS, MappingSpec.from_expr("1 - x"))
    assert not rep.passed and rep["distance_not_preserved"].witness == (0.0, 1.0)
    rep = check_remark1(finite(0.0, 1.0), ABS, MappingSpec.from_expr("x"))
    assert rep["distance_not_preserved"].witness == (0.0, 1.0)


def test_brute_force_fixed_points():
    assert brute_force_fixed_points(finite(0.0, 0.5, 1.0), MappingSpec.from_expr("x/2")) == [0.0]
    assert brute_force_fixed_points(finite(0.0, 1.0), MappingSpec.from_expr("x")) == [0.0, 1.0]
    with pytest.raises(ValueError):
        brute_force_fixed_points(grid(4), MappingSpec.from_expr("x/2"))


def test_classify_halving():
    res = classify(grid(100), ABS, MappingSpec.from_expr("x/2"))
    assert res.banach_lambda == 0.5
    assert res["banach"].passed and res["z_contraction"].passed
    assert res["rhoades"].passed and res["boyd_wong"].passed and res["geraghty"].passed


def test_classify_identity_short_circuit():
    res = classify(finite(0.0, 1.0, 2.0), ABS, MappingSpec.from_expr("x"))
    assert not any(v.passed for v in res.verdicts.values())
    assert res.banach_lambda is None
    assert any("no simulation function" in n for n in res.notes)


def test_classify_example2_reports_discrepancy():
    res = classify(grid(200), MAXM, EX2_MAP)
    assert res["z_contraction"].passed
    assert "ratio" in res.z_witnesses
    assert res.banach_lambda == 0.5
    assert any(n.startswith("discrepancy") for n in res.notes)


def test_classify_boyd_wong_not_banach():
    # T x = x/(1+x): d(Tx,Ty) / d(x,y) -> 1 near 0, so no lambda on the grid works
    res = classify(grid(400), ABS, MappingSpec.from_expr("x/(1+x)"))
    assert not res["banach"].passed
    assert res["banach"].witness[0] == 0.0
    assert res["boyd_wong"].passed
    assert res["z_contraction"].passed


def test_classify_json_ready():
    import json

    res = classify(grid(10), ABS, MappingSpec.from_expr("x/2"))
    json.dumps(res.to_dict())
    assert "banach" in res.format()


def test_verify_z_custom_zeta_witness():
    zeta = make_custom("s - 3*t")
    rep = verify_z(ContractionInstance(grid(4), ABS, MappingSpec.from_expr("x/2"), zeta))
    assert not rep.passed
    assert rep["z_contraction"].witness == (0.0, 1.0)
    assert rep["z_contraction"].value == pytest.approx(-0.5)
