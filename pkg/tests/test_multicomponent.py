import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_tables, rules_hold

from isocone_lab.lorentz import LorentzPatch, lambda_order
from isocone_lab.multicomponent import (
    POSITIVITY,
    LambdaSystem,
    RuleViolationError,
    component_incomparability,
    enumerate_valid_tables,
    mixed_relation,
    mk_mixed_order,
    table1_system,
    validate_rules,
    violation_patch,
)
from isocone_lab.order_core import validate_order, validate_reflexive_order

# Frozen from the brute-force enumerator in tests/oracles.py (levels {0, 1}).
VALID_COUNTS = {(1,): 2, (2,): 1, (1, 2): 8, (2, 2): 5, (1, 1): 14, (1, 2, 3): 96}


def keys(systems):
    return sorted((tuple(s.in_p.ravel().tolist()), tuple(s.lam.ravel().tolist())) for s in systems)


def test_table1_passes():
    report = validate_rules(table1_system())
    assert report.passed, report.summary()


def test_table1_mutations():
    assert validate_rules(table1_system().with_lambda(1, 1, 0.0)).failures == {"O": (1,)}
    moved = validate_rules(table1_system().with_cell(0, 1, False))
    assert not moved.status("T2")
    assert not moved.passed


def test_p_cell_needs_positive_lambda():
    report = validate_rules(table1_system().with_cell(1, 2, True))
    assert report.failures[POSITIVITY] == (1, 2)
    with pytest.raises(ValueError):
        LambdaSystem((1,), [[False]], [[-1.0]])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        LambdaSystem((1, 2), [[False]], [[0.0]])


@pytest.mark.parametrize("profile", [(1,), (2,), (1, 1), (1, 2), (2, 2)])
def test_enumeration_matches_brute_force_small(profile):
    assert keys(enumerate_valid_tables(profile)) == brute_force_tables(profile)
    assert len(enumerate_valid_tables(profile)) == VALID_COUNTS[profile]


def test_enumeration_matches_brute_force_three_components():
    got = enumerate_valid_tables((1, 2, 3))
    assert keys(got) == brute_force_tables((1, 2, 3))
    assert len(got) == VALID_COUNTS[(1, 2, 3)]


def test_single_component_examples():
    ones = enumerate_valid_tables((1,))
    assert sorted(s.lam[0, 0] for s in ones) == [0.0, 1.0]
    assert all(not s.in_p[0, 0] for s in ones)
    (two,) = enumerate_valid_tables((2,))
    assert two.lam[0, 0] == 1.0


def test_table1_in_enumeration():
    target = keys([table1_system()])[0]
    assert target in keys(enumerate_valid_tables((1, 2, 3)))


def test_enumeration_sorted_and_deterministic():
    a = enumerate_valid_tables((1, 2, 3))
    assert keys(a) == [(tuple(s.in_p.ravel().tolist()), tuple(s.lam.ravel().tolist())) for s in a]
    assert [s.to_json() for s in a] == [s.to_json() for s in enumerate_valid_tables((1, 2, 3))]


def test_enumeration_limits():
    with pytest.raises(ValueError, match="K <= 4"):
        enumerate_valid_tables((1,) * 5)


def test_fewest_nonzero_lambda_is_not_unique():
    """Six configurations tie at five non-zero entries: one per linear ordering of the components."""
    systems = enumerate_valid_tables((1, 2, 3))
    fewest = min(int(np.count_nonzero(s.lam)) for s in systems)
    best = [s for s in systems if np.count_nonzero(s.lam) == fewest]
    assert fewest == 5 and len(best) == 6
    assert keys([table1_system()])[0] in keys(best)
    orderings = set()
    for s in best:
        ahead = s.in_p.sum(axis=1)  # components strictly below-or-ahead of each row
        orderings.add(tuple(np.argsort(-ahead).tolist()))
    assert orderings == set(itertools.permutations(range(3)))


@pytest.mark.parametrize("scale", [1e-3, 0.5, 7.0, 1e4])
def test_rules_homogeneous(scale):
    for s in enumerate_valid_tables((1, 2)) + enumerate_valid_tables((2, 1, 2))[:40]:
        assert validate_rules(s.scaled(scale)).passed


def test_t2_consequences_in_every_config():
    for s in enumerate_valid_tables((1, 2, 3)):
        lam = s.lam
        for k, l in zip(*np.nonzero(~s.in_p)):
            assert lam[k, l] <= min(lam[k, k], lam[l, l])
            assert lam[l, k] >= max(lam[k, k], lam[l, l])


@pytest.mark.parametrize("seed", range(4))
def test_valid_systems_give_orders(seed):
    systems = enumerate_valid_tables((1, 2, 3))
    rng = np.random.default_rng(seed)
    patch = LorentzPatch.sprinkle(60, [[0, 3], [-1.5, 1.5]], seed)
    for i in rng.choice(len(systems), size=10, replace=False):
        s = systems[i].scaled(rng.uniform(0.2, 1.0))
        rel = mixed_relation(patch, s)
        assert validate_reflexive_order(rel, rel.shape[0]).valid
        assert validate_order(mk_mixed_order(patch, s), rel.shape[0]).valid


def test_single_component_reduces_to_lambda_order():
    patch = LorentzPatch.sprinkle(100, [[0, 4], [-2, 2]], 2)
    system = LambdaSystem((2,), [[False]], [[0.7]])
    assert mk_mixed_order(patch, system) == lambda_order(patch, 0.7)


def test_table1_mixed_order_on_patch():
    patch = LorentzPatch.sprinkle(200, [[0, 4], [-2, 2]], 0)
    system = table1_system(1.0)
    order = mk_mixed_order(patch, system)
    assert validate_order(order, order.size).valid
    n = patch.size
    p = patch.points
    for i, j in [(0, 0), (3, 17), (17, 3), (40, 41)]:
        v = p[j] - p[i]
        causal = v[0] >= 0 and v[0] ** 2 - v[1] ** 2 >= 0
        # (2, x) < (1, y) iff y - x lies in C(0), which already holds the zero vector
        assert order.less(1 * n + i, 0 * n + j) == causal
        assert not order.less(0 * n + i, 1 * n + j) or v[0] ** 2 - v[1] ** 2 >= 1.0
    assert order.less(1 * n + 5, 2 * n + 5)
    assert component_incomparability(order, patch, system, 1) >= 1.0
    assert component_incomparability(order, patch, system, 2) >= 1.0
    with pytest.raises(ValueError):
        component_incomparability(order, patch, system, 0)


def test_invalid_system_rejected_before_construction():
    patch = LorentzPatch.sprinkle(10, [[0, 1], [0, 1]], 0)
    with pytest.raises(RuleViolationError):
        mk_mixed_order(patch, table1_system().with_lambda(1, 1, 0.0))


AXIOM_OF_RULE = {"R": "antisymmetry", "A": "antisymmetry", "T1": "transitivity", "T2": "transitivity", "T3": "transitivity"}


def random_system(rng, k):
    in_p = rng.random((k, k)) < 0.5
    lam = rng.choice([0.0, 0.5, 1.0, 1.5], size=(k, k))
    lam = np.where(in_p & (lam == 0), 1.0, lam)
    return LambdaSystem(tuple(rng.integers(1, 4, size=k)), in_p, lam)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_rule_failures_break_order_axioms(seed, k):
    system = random_system(np.random.default_rng(seed), k)
    report = validate_rules(system)
    assert report.passed == rules_hold(system.profile, system.in_p.tolist(), system.lam.tolist())
    for rule, witness in report.failures.items():
        if rule not in AXIOM_OF_RULE:
            continue
        patch = violation_patch(system, rule, witness)
        rel = mixed_relation(patch, system)
        broken = {axiom for axiom, _ in validate_reflexive_order(rel, rel.shape[0]).violations}
        assert AXIOM_OF_RULE[rule] in broken or broken, (rule, witness)


def test_specific_violation_witnesses():
    # Po cells both ways between components 0 and 1: the zero vector relates them both ways
    a = LambdaSystem((1, 1), [[False, False], [False, False]], [[0, 0], [0, 0]])
    rel = mixed_relation(violation_patch(a, "A", validate_rules(a).failures["A"]), a)
    assert ("antisymmetry", (0, 1)) in validate_reflexive_order(rel, 2).violations
    # reversed triangle inequality fails: 0 -> 1 -> 2 chained steps are short of Lambda_02
    t1 = LambdaSystem((1, 1, 1), [[False, True, True], [False, False, True], [False, False, False]], [[0, 0.2, 2], [0, 0, 0.2], [0, 0, 0]])
    w = validate_rules(t1).failures["T1"]
    rel = mixed_relation(violation_patch(t1, "T1", w), t1)
    names = [v[0] for v in validate_reflexive_order(rel, rel.shape[0]).violations]
    assert "transitivity" in names


def test_system_json_and_tables():
    s = table1_system()
    back = LambdaSystem.from_json(json.loads(json.dumps(s.to_json())))
    assert keys([back]) == keys([s])
    text = s.format_tables()
    assert "Po" in text and "Λ" in text
    with pytest.raises(ValueError):
        LambdaSystem.from_json({"profile": [1], "partition": [["X"]], "lambda": [[0]]})
