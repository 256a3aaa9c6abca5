import json

import numpy as np
import pytest

from oracles import figure1_isocone

from isocone_lab.hermitian import HermitianMatrix, IsotoneFunction, PureStateVector
from isocone_lab.isocone_fd import (
    AlgebraElement,
    ElementSet,
    LexIsocone,
    LocalIsocone,
    SitedPureState,
    empirical_order,
    induced_order,
    isocone_axiom_suite,
    lex_membership,
    sample_elements,
    strict_gap_check,
)
from isocone_lab.order_core import InvalidOrderError, Relation
from isocone_lab.qubit_geometry import CapRegion, state_from_bloch


def scalars(*vals):
    return AlgebraElement(tuple(HermitianMatrix([[v]]) for v in vals))


@pytest.fixture(scope="module")
def fig1():
    return figure1_isocone()


@pytest.fixture(scope="module")
def fig1_elems(fig1):
    return sample_elements(fig1, 200, seed=1, mesh_deg=2.0)


def test_scalar_chain_membership():
    lex = LexIsocone.from_profile([1, 1], [(0, 1)])
    assert lex_membership(scalars(0, 1), lex)
    m = lex_membership(scalars(1, 0), lex)
    assert not m and m.witness == ("gap", 0, 1)


def test_constants_are_members(fig1):
    for c in (-4.0, 0.0, 2.0):
        assert lex_membership(AlgebraElement.constant(fig1.profile, c), fig1)


def test_mixed_block_membership():
    lex = LexIsocone.from_profile([1, 2], [(0, 1)])
    bad = AlgebraElement((HermitianMatrix([[1]]), HermitianMatrix.diag([0, 2])))
    good = AlgebraElement((HermitianMatrix([[0]]), HermitianMatrix.diag([1, 2])))
    assert not lex_membership(bad, lex)
    assert lex_membership(good, lex)


def test_block_outside_cap():
    lex = LexIsocone.from_profile([2], [], {0: CapRegion.cap([0, 0, 1], 30)})
    m = lex_membership(AlgebraElement((HermitianMatrix.diag([0, 1]),)), lex)
    assert not m and m.witness == ("block", 0)


def test_shape_and_type_checks():
    with pytest.raises(ValueError):
        LocalIsocone.trivial(2)
    with pytest.raises(ValueError):
        LocalIsocone(3, LocalIsocone.qubit(CapRegion.whole_sphere()).cone)
    with pytest.raises(InvalidOrderError):
        LexIsocone.from_profile([1, 1], [(0, 1), (1, 0)])
    with pytest.raises(ValueError):
        lex_membership(scalars(0), LexIsocone.from_profile([1, 1], []))


def test_figure1_induced_examples(fig1):
    rng = np.random.default_rng(0)
    states = [SitedPureState(x, PureStateVector.random(n, rng)) for x, n in enumerate(fig1.profile)]
    assert induced_order(fig1, states[0], states[3]) is Relation.LESS_OR_EQUAL
    assert induced_order(fig1, states[3], states[0]) is Relation.GREATER_OR_EQUAL
    assert induced_order(fig1, states[1], states[2]) is Relation.INCOMPARABLE
    other = SitedPureState(2, PureStateVector.random(3, rng))
    assert induced_order(fig1, states[2], other) is Relation.INCOMPARABLE
    assert induced_order(fig1, states[2], states[2]) is Relation.EQUAL
    south = SitedPureState(3, state_from_bloch([0, 0, -1]))
    north = SitedPureState(3, state_from_bloch([0, 0, 1]))
    assert induced_order(fig1, south, north) is Relation.LESS_OR_EQUAL


def test_sampler_without_relations():
    lex = LexIsocone.from_profile([2, 3], [], {0: CapRegion.cap([1, 0, 0], 20)})
    elems = sample_elements(lex, 1, seed=4)
    assert all(lex_membership(a, lex) for a in elems)


def test_sampler_on_scalar_chain():
    lex = LexIsocone.from_profile([1, 1, 1], [(0, 1), (1, 2), (0, 2)])
    for a in sample_elements(lex, 50, seed=2):
        v = [b.entries[0, 0].real for b in a.blocks]
        assert v[0] <= v[1] + 1e-9 and v[1] <= v[2] + 1e-9


def test_sampler_members_and_determinism(fig1, fig1_elems):
    assert len(fig1_elems) >= 200
    assert all(lex_membership(a, fig1) for a in fig1_elems)
    again = sample_elements(fig1, 200, seed=1, mesh_deg=2.0)
    assert all(a.to_json() == b.to_json() for a, b in zip(fig1_elems, again))
    json.dumps(fig1_elems[5].to_json())


def test_continuous_sampling_members(fig1):
    elems = sample_elements(fig1, 60, seed=8, mesh_deg=None)
    assert all(lex_membership(a, fig1) for a in elems)


def test_empirical_constants_only_is_degenerate(caplog):
    lex = LexIsocone.from_profile([1, 1], [(0, 1)])
    elems = ElementSet([AlgebraElement.constant(lex.profile, c) for c in (0.0, 3.0)])
    assert elems.is_degenerate()
    s = SitedPureState(0, PureStateVector([1]))
    t = SitedPureState(1, PureStateVector([1]))
    with caplog.at_level("WARNING"):
        assert empirical_order(elems, s, t) is Relation.EQUAL
    assert "separates no states" in caplog.text


def test_empirical_two_chain():
    lex = LexIsocone.from_profile([1, 1], [(0, 1)])
    elems = sample_elements(lex, 20, seed=0)
    s = SitedPureState(0, PureStateVector([1]))
    t = SitedPureState(1, PureStateVector([1]))
    assert empirical_order(elems, s, t) is Relation.LESS_OR_EQUAL


def test_soundness_on_small_sample(fig1):
    """A handful of elements can only merge classes, never reverse an induced relation."""
    rng = np.random.default_rng(3)
    elems = sample_elements(fig1, 4, seed=3, mesh_deg=2.0, generators=False)
    for _ in range(200):
        s, t = (SitedPureState(x, PureStateVector.random(fig1.profile[x], rng)) for x in rng.integers(4, size=2))
        ind = induced_order(fig1, s, t, 2.0)
        emp = empirical_order(elems, s, t)
        if ind is Relation.LESS_OR_EQUAL:
            assert emp in (Relation.LESS_OR_EQUAL, Relation.EQUAL)
        if ind is Relation.GREATER_OR_EQUAL:
            assert emp in (Relation.GREATER_OR_EQUAL, Relation.EQUAL)


def test_completeness_on_figure1(fig1, fig1_elems):
    rng = np.random.default_rng(12)
    for _ in range(200):
        s, t = (SitedPureState(x, PureStateVector.random(fig1.profile[x], rng)) for x in rng.integers(4, size=2))
        assert empirical_order(fig1_elems, s, t) is induced_order(fig1, s, t, 2.0)


def test_trivial_site_states_never_comparable(fig1, fig1_elems):
    rng = np.random.default_rng(6)
    for _ in range(50):
        s = SitedPureState(2, PureStateVector.random(3, rng))
        t = SitedPureState(2, PureStateVector.random(3, rng))
        assert empirical_order(fig1_elems, s, t) is Relation.INCOMPARABLE


def test_strict_gap_check(fig1, fig1_elems):
    gaps = strict_gap_check(fig1_elems, fig1)
    for x, y in fig1.poset.pairs:
        assert gaps[(x, y)]
    assert not gaps[(1, 2)] and not gaps[(2, 1)]
    assert not gaps[(3, 0)]


def test_axiom_suite(fig1, fig1_elems):
    report = isocone_axiom_suite(fig1_elems, fig1, IsotoneFunction.clip_below(0.0), pairs=100, seed=0)
    assert report.passed
    assert report.addition_checked == 100 and report.calculus_checked == 100
    assert "not checkable" in report.norm_closure


def test_lex_json_roundtrip(fig1):
    back = LexIsocone.from_json(json.loads(json.dumps(fig1.to_json())))
    assert back.profile == fig1.profile and back.poset == fig1.poset
