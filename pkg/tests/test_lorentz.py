import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isocone_lab.lorentz import (
    LorentzPatch,
    boost_transform,
    cone_membership,
    cone_sum_check,
    euclidean_distances,
    lambda_boundary_mask,
    lambda_order,
    lambda_order_from_table,
    lorentz_distance,
    minkowski_sq,
    translate,
)
from isocone_lab.order_core import MetricPointCloud, epsilon_cutoff, transitive_closure, validate_order

BOX = [[0, 4], [-2, 2]]


def test_minkowski_examples():
    assert minkowski_sq([1, 0]) == 1
    assert minkowski_sq([1, 1]) == 0
    assert minkowski_sq([0.5, 0.3, 0.4]) == pytest.approx(0.0, abs=1e-15)


def test_lorentz_distance_examples():
    assert lorentz_distance([0, 0], [0, 0]) == 0
    assert lorentz_distance([0, 0], [2, 0]) == 2
    assert lorentz_distance([0, 0], [1, 2]) == 0
    with pytest.raises(ValueError):
        lorentz_distance([0, 0], [1, 0, 0])


def test_cone_membership_examples():
    assert cone_membership([0, 0], 1.0, include_zero=True)
    assert not cone_membership([0, 0], 1.0, include_zero=False)
    assert cone_membership([2, 0], 1.0)
    assert not cone_membership([0.5, 0], 1.0)
    assert not cone_membership([-2, 0], 1.0)


def test_lambda_order_examples():
    patch = LorentzPatch.from_points([[0, 0], [2, 0]])
    assert lambda_order(patch, 1.0).pairs == [(0, 1)]
    assert lambda_order(LorentzPatch.sprinkle(100, BOX, 0), 10.0).pair_count == 0
    with pytest.raises(ValueError):
        lambda_order(patch, 0.0)


def test_sprinkled_order_is_closed():
    patch = LorentzPatch.sprinkle(2000, BOX, 3)
    order = lambda_order(patch, 0.5)
    assert validate_order(order, patch.size).valid
    assert transitive_closure(order, patch.size) == order


def test_boost_identity_and_null_vectors():
    patch = LorentzPatch.sprinkle(50, BOX, 1)
    np.testing.assert_allclose(boost_transform(patch, 0.0).points, patch.points, atol=0)
    null = LorentzPatch.from_points([[0, 0, 0], [1, 0.6, 0.8]])
    boosted = boost_transform(null, 1.3, axis=2)
    v = boosted.points[1] - boosted.points[0]
    assert abs(minkowski_sq(v)) < 1e-9
    with pytest.raises(ValueError):
        boost_transform(null, 1.0, axis=0)


@pytest.mark.parametrize("seed", range(5))
def test_poincare_invariance(seed):
    rng = np.random.default_rng(seed)
    patch = LorentzPatch.sprinkle(400, BOX, seed)
    lam = 0.5
    moved = translate(boost_transform(patch, rng.uniform(-2, 2)), rng.normal(size=2))
    ties = lambda_boundary_mask(patch, lam) | lambda_boundary_mask(moved, lam)
    a = lambda_order(patch, lam).matrix
    b = lambda_order(moved, lam).matrix
    assert not np.any((a != b) & ~ties)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.integers(0, 1000))
def test_monotone_in_lambda(l1, l2, seed):
    patch = LorentzPatch.sprinkle(150, BOX, seed)
    lo, hi = sorted((l1, l2))
    small = lambda_order(patch, lo).matrix
    large = lambda_order(patch, hi).matrix
    assert not np.any(large & ~small)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 3.0), st.integers(0, 1000), st.integers(2, 4))
def test_epsilon_bound(lam, seed, dim):
    box = [[0, 4]] + [[-2, 2]] * (dim - 1)
    patch = LorentzPatch.sprinkle(200, box, seed)
    order = lambda_order(patch, lam)
    eps = epsilon_cutoff(MetricPointCloud(patch.points, euclidean_distances(patch)), order)
    assert eps >= lam


def test_lambda_zero_is_causal_order():
    rng = np.random.default_rng(2)
    for v in rng.uniform(-2, 2, size=(2000, 3)):
        causal = v[0] >= 0 and v[0] ** 2 >= v[1] ** 2 + v[2] ** 2
        assert cone_membership(v, 0.0) == causal


def test_table_order_matches_flat():
    patch = LorentzPatch.sprinkle(120, BOX, 5)
    p = patch.points
    d = np.array([[lorentz_distance(x, y) for y in p] for x in p])
    from_table = lambda_order_from_table(d, p[:, 0], 0.5)
    # the table is symmetric, so the time column orients each pair
    assert from_table == lambda_order(patch, 0.5)


def test_cone_sum_examples():
    assert cone_sum_check(1, 1, 2).holds
    r = cone_sum_check(0.4, 0.4, 1.0)
    assert not r.holds
    np.testing.assert_allclose(r.witness[0] + r.witness[1], [0.8, 0])
    assert cone_sum_check(0.7, 1.3, 0.0).holds
    with pytest.raises(ValueError):
        cone_sum_check(1, 1, 1, sample_count=10)


def test_patch_io_roundtrip():
    patch = LorentzPatch.sprinkle(10, [[0, 1], [0, 1], [0, 1]], 9)
    assert np.array_equal(LorentzPatch.from_csv(patch.to_csv()).points, patch.points)
    back = LorentzPatch.from_json(patch.to_json())
    assert np.array_equal(back.box, patch.box)
    with pytest.raises(ValueError):
        LorentzPatch([[5.0, 0.0]], [[0, 1], [0, 1]])
