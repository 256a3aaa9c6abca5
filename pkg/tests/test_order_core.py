import math
from collections import deque
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isocone_lab.order_core import (
    INFINITY,
    CycleError,
    FiniteOrder,
    InvalidOrderError,
    MetricPointCloud,
    Relation,
    closedness_proxy,
    epsilon_cutoff,
    incomparability_ball,
    incomparability_balls,
    lambda_order_1d,
    levin_utility,
    transitive_closure,
    validate_order,
)


def reachability(n, edges):
    adj = {i: [] for i in range(n)}
    for x, y in edges:
        adj[x].append(y)
    out = set()
    for s in range(n):
        seen = set()
        queue = deque(adj[s])
        while queue:
            v = queue.popleft()
            if v not in seen:
                seen.add(v)
                queue.extend(adj[v])
        out |= {(s, v) for v in seen}
    return out


def longest_chain_to(order: FiniteOrder):
    preds = {y: [x for x in range(order.size) if order.less(x, y)] for y in range(order.size)}

    @lru_cache(maxsize=None)
    def depth(y):
        return max((depth(x) + 1 for x in preds[y]), default=0)

    return [depth(y) for y in range(order.size)]


def random_dag(rng, n, p):
    perm = rng.permutation(n)
    return [(int(perm[i]), int(perm[j])) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


def test_validate_examples():
    assert validate_order({(0, 1), (1, 2), (0, 2)}, 3).valid
    r = validate_order({(0, 1), (1, 0)}, 2)
    assert ("antisymmetry", (0, 1)) in r.violations
    r = validate_order({(0, 1), (1, 2)}, 3)
    assert r.violations == [("transitivity", (0, 1, 2))]
    with pytest.raises(IndexError):
        validate_order({(0, 5)}, 3)


def test_irreflexivity_witness():
    r = validate_order({(1, 1)}, 2)
    assert ("irreflexivity", (1, 1)) in r.violations


def test_closure_examples():
    assert transitive_closure({(0, 1), (1, 2)}, 3).pairs == [(0, 1), (0, 2), (1, 2)]
    assert transitive_closure(set(), 4).pair_count == 0


def test_closure_cycle_reports_path():
    with pytest.raises(CycleError) as exc:
        transitive_closure({(0, 1), (1, 2), (2, 0), (3, 0)}, 4)
    cyc = exc.value.cycle
    assert cyc[0] == cyc[-1]
    assert all((a, b) in {(0, 1), (1, 2), (2, 0)} for a, b in zip(cyc, cyc[1:]))


@pytest.mark.parametrize("seed", range(10))
def test_closure_matches_reachability(seed):
    rng = np.random.default_rng(seed)
    edges = random_dag(rng, 20, 0.12)
    closed = transitive_closure(edges, 20)
    assert set(closed.pairs) == reachability(20, edges)
    assert transitive_closure(closed, 20) == closed
    assert validate_order(closed, 20).valid


def test_levin_examples():
    chain = FiniteOrder.from_pairs(3, [(0, 1), (1, 2), (0, 2)])
    assert levin_utility(chain).values.tolist() == [0, 1, 2]
    assert levin_utility(FiniteOrder.empty(5)).values.tolist() == [0] * 5
    diamond = FiniteOrder.from_pairs(4, [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3)])
    assert levin_utility(diamond).values.tolist() == [0, 1, 1, 2]
    with pytest.raises(InvalidOrderError):
        levin_utility(FiniteOrder.from_pairs(3, [(0, 1), (1, 2)]))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.floats(0.0, 0.5), st.integers(0, 2**32 - 1))
def test_levin_gap_and_isotony(n, p, seed):
    rng = np.random.default_rng(seed)
    order = transitive_closure(random_dag(rng, n, p), n)
    g = levin_utility(order)
    assert g.gap_violations(order) == []
    assert g.values.tolist() == longest_chain_to(order)
    m = order.matrix | np.eye(n, dtype=bool)
    xs, ys = np.nonzero(m)
    assert np.all(g.values[xs] <= g.values[ys])


def test_epsilon_examples():
    cloud = MetricPointCloud.euclidean([0.0, 0.3, 1.0])
    assert epsilon_cutoff(cloud, FiniteOrder.empty(3)) is INFINITY
    order = FiniteOrder.from_pairs(3, [(0, 2), (1, 2)])
    assert epsilon_cutoff(cloud, order) == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(ValueError):
        epsilon_cutoff(cloud, FiniteOrder.empty(2))


def test_incomparability_examples():
    cloud = MetricPointCloud.euclidean([0.0, 1.0, 5.0])
    order = FiniteOrder.from_pairs(3, [(0, 1)])
    assert incomparability_ball(cloud, order, 0) == 1.0
    assert incomparability_ball(cloud, order, 1) == 1.0
    assert incomparability_ball(cloud, order, 2) == math.inf


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_balls_bound_cutoff(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    order = transitive_closure(random_dag(rng, n, 0.2), n)
    cloud = MetricPointCloud.euclidean(pts)
    balls = incomparability_balls(cloud, order)
    eps = epsilon_cutoff(cloud, order)
    assert balls.min() == eps
    assert all(incomparability_ball(cloud, order, x) == balls[x] for x in range(n))
    if order.pair_count:
        assert eps > 0


def test_metric_table_checks():
    with pytest.raises(ValueError, match="triangle"):
        MetricPointCloud.from_table([0, 1, 2], [[0, 1, 5], [1, 0, 1], [5, 1, 0]], check_triples=500)
    with pytest.raises(ValueError):
        MetricPointCloud.from_table([0, 1], [[0, 1], [2, 0]])
    c = MetricPointCloud.from_json({"points": [[0.0], [3.0]], "metric": "euclidean"})
    assert c.distances[0, 1] == 3.0


def test_lambda_1d_examples():
    order, report = lambda_order_1d([0, 0.2, 0.5], 0.3)
    assert report.valid
    assert order.pairs == [(0, 2), (1, 2)]
    order, _ = lambda_order_1d(np.linspace(0, 1, 11), 2.0)
    assert order.pair_count == 0
    with pytest.raises(ValueError):
        lambda_order_1d([0, 1], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=30), st.integers(0, 2**32 - 1))
def test_lambda_1d_always_transitive(xs, seed):
    rng = np.random.default_rng(seed)
    s = np.sort(xs)
    lam = rng.uniform(1e-3, 0.6, size=s.size)
    _, report = lambda_order_1d(s, lam)
    assert report.valid


def test_closedness_proxy_lsc_vs_jump():
    samples = sorted(set(np.round(np.linspace(0, 1, 101), 12).tolist()))

    def lsc(x):
        return 0.2 if x == 0.3 else 0.5

    def jump_up(x):
        return 0.8 if x == 0.3 else 0.5

    assert closedness_proxy(samples, lsc) == (True, None)
    ok, witness = closedness_proxy(samples, jump_up)
    assert not ok
    assert witness[0] == 0.3


def test_relation_flags():
    assert Relation.from_flags(True, True) is Relation.EQUAL
    assert Relation.from_flags(False, False) is Relation.INCOMPARABLE
    assert Relation.LESS_OR_EQUAL.flipped() is Relation.GREATER_OR_EQUAL


def test_order_json_roundtrip():
    o = FiniteOrder.from_pairs(4, [(0, 3), (1, 3)])
    assert FiniteOrder.from_json(o.to_json()) == o
