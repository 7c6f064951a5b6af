import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiqida.layers import (FinesseRatio, LayerBuildError, LayerPlan, build_layers, ladder_layer, merge_layers,
                              single_threshold_qida)


def test_finesse_uniform():
    f = FinesseRatio.uniform()
    assert f.thresholds == (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)
    assert list(f.bands())[:2] == [(0.9, None), (0.8, 0.9)]


@pytest.mark.parametrize("bad", [(), (0.5, 0.5), (0.3, 0.6), (1.2,), (0.0,)])
def test_finesse_validation(bad):
    with pytest.raises(ValueError):
        FinesseRatio(bad)


def test_two_qubits():
    plan = build_layers(np.array([[0, 1.0], [1.0, 0]]))
    assert plan.qida_layers == [[(0, 1)]]
    assert plan.closure_layers == [[(0, 1)]]


def test_all_zero_qmi_errors():
    with pytest.raises(LayerBuildError):
        build_layers(np.zeros((4, 4)))


def test_exhausted_thresholds_report_uncovered_qubits():
    q = np.zeros((4, 4))
    q[0, 1] = q[1, 0] = 1.0
    q[2, 3] = q[3, 2] = 0.05  # below the lowest threshold
    with pytest.raises(LayerBuildError, match=r"uncovered qubits \[2, 3\]"):
        build_layers(q)


def test_nonsymmetric_rejected():
    q = np.zeros((3, 3))
    q[0, 1] = 1
    with pytest.raises(ValueError):
        build_layers(q)


def test_3x4_layers_and_snapshot_regression(exact_refs):
    from multiqida.qmi import qmi_matrix
    q = qmi_matrix(exact_refs["3x4"].state)
    plan = build_layers(q)
    assert plan.pair_sets() == [
        {(0, 1), (2, 3), (8, 9), (10, 11)},
        {(0, 4), (3, 7), (4, 8), (7, 11)},
        {(1, 5), (2, 6), (4, 5), (5, 9), (6, 7), (6, 10)},
        {(1, 2), (5, 6), (9, 10)},
    ]
    assert plan.bands[-1] == (0.3, 0.4)
    assert plan.n_pairs == 17
    immediate = build_layers(q, commit="immediate")
    assert not {(4, 5), (5, 9)} <= set(immediate.qida_layers[2])
    assert set(single_threshold_qida(q, 0.9)) == {(0, 1), (2, 3), (8, 9), (10, 11)}


def _random_qmi(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 1, (n, n))
    q = np.triu(a, 1)
    return q + q.T


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 9), seed=st.integers(0, 100_000))
def test_plans_cover_and_connect(n, seed):
    q = _random_qmi(n, seed)
    try:
        plan = build_layers(q)
    except LayerBuildError:
        return
    plan.validate()
    assert {x for layer in plan.qida_layers for p in layer for x in p} == set(range(n))
    assert plan.closure_layers == [ladder_layer(n)]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 8), seed=st.integers(0, 100_000))
def test_snapshot_acceptance_is_order_independent(n, seed):
    # quantised values create many ties; relabelling qubits must not change the pair sets
    q = np.round(_random_qmi(n, seed) * 4) / 4
    try:
        plan = build_layers(q)
    except LayerBuildError:
        return
    perm = np.random.default_rng(seed).permutation(n)
    plan_p = build_layers(q[np.ix_(perm, perm)])
    mapped = [{tuple(sorted((int(perm[i]), int(perm[j])))) for i, j in layer} for layer in plan_p.qida_layers]
    assert mapped == [set(layer) for layer in plan.qida_layers]


def test_deterministic():
    q = _random_qmi(7, 3)
    assert build_layers(q).to_text() == build_layers(q).to_text()


def test_text_roundtrip():
    plan = LayerPlan(5, [[(2, 3), (0, 1)], [(1, 2)], [(3, 4)]], [ladder_layer(5)])
    text = plan.to_text()
    assert text.splitlines()[1] == "0-1 2-3"
    back = LayerPlan.from_text(text)
    assert back.n_qubits == 5
    assert back.pair_sets() == plan.pair_sets()
    assert back.closure_layers == plan.closure_layers


def test_merge_layers():
    plan = LayerPlan(6, [[(0, 3)], [(1, 4)], [(2, 5)], [(0, 1)]], [ladder_layer(6)])
    merged = merge_layers(plan, [[0, 1, 2]])
    assert merged.qida_layers == [[(0, 3), (1, 4), (2, 5)], [(0, 1)]]
    assert merge_layers(plan, [[1]]).qida_layers == plan.qida_layers
    with pytest.raises(ValueError):
        merge_layers(plan, [[0, 3]])
    assert len(merge_layers(plan, [[0, 3]], allow_overlap=True).qida_layers) == 3


def test_single_threshold():
    bell = np.array([[0, 2.0], [2.0, 0]])
    assert single_threshold_qida(bell, 0.5) == [(0, 1)]
    q = np.zeros((3, 3))
    q[0, 2] = q[2, 0] = 0.4
    assert single_threshold_qida(q, 0.0) == [(0, 2)]
    with pytest.raises(ValueError):
        single_threshold_qida(q, 1.0)
