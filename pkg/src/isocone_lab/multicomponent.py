"""Multi-component Lambda-orders on ``{1..K} x M``.

A system is a profile of block sizes ``n_k``, a partition of the index
square into ``P`` and ``Po`` cells, and a table of non-negative
``Lambda[k, l]``. It orders ``(k, x) <= (l, y)`` iff ``y - x`` lies in
``C(Lambda[k, l])`` (``P`` cells) or in ``C(Lambda[k, l])`` plus the zero
vector (``Po`` cells).

Components are 0-based in code and 1-based in every printed table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .lorentz import LorentzPatch, separations
from .order_core import FiniteOrder

RULES = ("R", "A", "T1", "T2", "T3", "O")
POSITIVITY = "P>0"
MAX_ENUM_K = 4
RULE_TOL = 1e-12


class RuleViolationError(ValueError):
    def __init__(self, report: RuleReport):
        super().__init__(report.summary())
        self.report = report


@dataclass(frozen=True, eq=False)
class LambdaSystem:
    profile: tuple[int, ...]
    in_p: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        prof = tuple(int(n) for n in self.profile)
        in_p = np.array(self.in_p, dtype=bool)
        lam = np.array(self.lam, dtype=float)
        k = len(prof)
        if k < 1 or any(n < 1 for n in prof):
            raise ValueError("profile needs at least one positive block size")
        if in_p.shape != (k, k) or lam.shape != (k, k):
            raise ValueError(f"partition {in_p.shape} and lambda {lam.shape} tables must be {k}x{k}")
        if np.any(lam < 0):
            raise ValueError("lambda values must be non-negative")
        in_p.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "profile", prof)
        object.__setattr__(self, "in_p", in_p)
        object.__setattr__(self, "lam", lam)

    @property
    def k(self) -> int:
        return len(self.profile)

    def with_lambda(self, k: int, l: int, value: float) -> LambdaSystem:
        lam = self.lam.copy()
        lam[k, l] = value
        return LambdaSystem(self.profile, self.in_p, lam)

    def with_cell(self, k: int, l: int, in_p: bool) -> LambdaSystem:
        part = self.in_p.copy()
        part[k, l] = in_p
        return LambdaSystem(self.profile, part, self.lam)

    def scaled(self, c: float) -> LambdaSystem:
        return LambdaSystem(self.profile, self.in_p, c * self.lam)

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile),
            "partition": [["P" if c else "Po" for c in row] for row in self.in_p],
            "lambda": self.lam.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> LambdaSystem:
        labels = {"P": True, "Po": False, "P°": False}
        try:
            part = [[labels[c] for c in row] for row in data["partition"]]
        except KeyError as exc:
            raise ValueError(f"unknown partition label {exc}") from None
        return cls(tuple(data["profile"]), part, data["lambda"])

    def format_tables(self, symbol: str | None = "Λ") -> str:
        """Side-by-side partition and Lambda tables, laid out like the worked example."""
        k = self.k
        unit = self.lam.max() if self.lam.max() > 0 else 1.0

        def lam_label(v: float) -> str:
            if symbol is None:
                return f"{v:g}"
            if v == 0:
                return "0"
            if v == unit:
                return symbol
            return f"{v / unit:g}{symbol}"

        head = "k\\l | " + " | ".join(str(i + 1) for i in range(k))
        left = [head] + [f"{i + 1:>3} | " + " | ".join("P " if self.in_p[i, j] else "Po" for j in range(k)) for i in range(k)]
        right = [head] + [f"{i + 1:>3} | " + " | ".join(f"{lam_label(self.lam[i, j]):<2}" for j in range(k)) for i in range(k)]
        width = max(len(s) for s in left)
        return "\n".join(f"{a:<{width}}    {b}" for a, b in zip(left, right))


def table1_system(lam: float = 1.0) -> LambdaSystem:
    """The worked three-component example for C + M2(C) + M3(C)."""
    po, p = False, True
    part = [[po, p, p], [po, po, po], [po, p, po]]
    table = [[0, lam, lam], [0, lam, 0], [0, lam, lam]]
    return LambdaSystem((1, 2, 3), part, table)


@dataclass
class RuleReport:
    k: int
    failures: dict[str, tuple[int, ...]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def status(self, rule: str) -> bool:
        return rule not in self.failures

    def summary(self) -> str:
        lines = []
        for rule in RULES + (POSITIVITY,):
            w = self.failures.get(rule)
            if w is None:
                lines.append(f"{rule:>3}: pass")
            else:
                lines.append(f"{rule:>3}: FAIL at " + ",".join(str(i + 1) for i in w))
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "rules": {r: (None if r not in self.failures else [i + 1 for i in self.failures[r]]) for r in RULES + (POSITIVITY,)},
        }


def validate_rules(system: LambdaSystem) -> RuleReport:
    """Exhaustive check of the six rules plus ``Lambda > 0`` on ``P`` cells; first witness per rule."""
    k = system.k
    po = ~system.in_p
    lam = system.lam
    tol = RULE_TOL * (1.0 + float(lam.max(initial=0.0)))
    report = RuleReport(k)
    fail = report.failures
    for a in range(k):
        if system.in_p[a, a]:
            fail.setdefault("R", (a,))
        if system.profile[a] >= 2 and not lam[a, a] > 0:
            fail.setdefault("O", (a,))
    for a, b in itertools.combinations(range(k), 2):
        if po[a, b] and po[b, a]:
            fail.setdefault("A", (a, b))
            break
    for a in range(k):
        for b in range(k):
            if system.in_p[a, b] and not lam[a, b] > 0:
                fail.setdefault(POSITIVITY, (a, b))
            for c in range(k):
                if "T1" not in fail and lam[a, b] + lam[b, c] < lam[a, c] - tol:
                    fail["T1"] = (a, b, c)
                if "T2" not in fail and po[a, b] and (lam[b, c] < lam[a, c] - tol or lam[c, a] < lam[c, b] - tol):
                    fail["T2"] = (a, b, c)
                if "T3" not in fail and po[a, b] and po[b, c] and not po[a, c]:
                    fail["T3"] = (a, b, c)
    return report


def _partitions(k: int) -> Iterator[np.ndarray]:
    """Partitions obeying (R) and (A); each off-diagonal pair takes one of three label patterns."""
    pairs = list(itertools.combinations(range(k), 2))
    for choice in itertools.product(((True, True), (True, False), (False, True)), repeat=len(pairs)):
        part = np.zeros((k, k), dtype=bool)
        for (a, b), (ab, ba) in zip(pairs, choice):
            part[a, b] = ab
            part[b, a] = ba
        yield part


def _t3_ok(part: np.ndarray) -> bool:
    po = (~part).astype(int)
    return not np.any(((po @ po) > 0) & part)


def enumerate_valid_tables(profile: Sequence[int], level: float = 1.0) -> list[LambdaSystem]:
    """Every (partition, Lambda table) with values in ``{0, level}`` passing all rules.

    Pruned in the order (R), (A), (T3), then the Lambda rules, which are
    checked vectorized over all assignments of the free ``Po`` cells.
    Output is sorted canonically.
    """
    profile = tuple(int(n) for n in profile)
    k = len(profile)
    if k > MAX_ENUM_K:
        raise ValueError(f"exhaustive enumeration is limited to K <= {MAX_ENUM_K} (got K={k})")
    if level <= 0:
        raise ValueError("level must be positive")
    big = np.array([n >= 2 for n in profile])
    found = []
    for part in _partitions(k):
        if not _t3_ok(part):
            continue
        free = np.argwhere(~part)
        # P cells must carry the non-zero level; Po cells range over {0, level}
        bits = np.array(list(itertools.product((0.0, level), repeat=len(free))))
        lam = np.broadcast_to(np.where(part, level, 0.0), (bits.shape[0], k, k)).copy()
        lam[:, free[:, 0], free[:, 1]] = bits
        diag = lam[:, np.arange(k), np.arange(k)]
        ok = np.all((diag > 0) | ~big, axis=1)
        t1 = lam[:, :, :, None] + lam[:, None, :, :] >= lam[:, :, None, :] - RULE_TOL
        ok &= t1.all(axis=(1, 2, 3))
        po = ~part
        # T2: for (a,b) in Po and all c: lam[b,c] >= lam[a,c] and lam[c,a] >= lam[c,b]
        rows = lam[:, None, :, :] >= lam[:, :, None, :]  # [s, a, b, c] = lam[b,c] >= lam[a,c]
        cols = np.swapaxes(lam, 1, 2)[:, :, None, :] >= np.swapaxes(lam, 1, 2)[:, None, :, :]  # lam[c,a] >= lam[c,b]
        t2 = (rows & cols).all(axis=3) | ~po[None, :, :]
        ok &= t2.all(axis=(1, 2))
        for s in np.flatnonzero(ok):
            found.append(LambdaSystem(profile, part, lam[s]))
    found.sort(key=canonical_key)
    return found


def canonical_key(system: LambdaSystem) -> tuple:
    return (tuple(system.in_p.ravel().tolist()), tuple(system.lam.ravel().tolist()))


def mixed_relation(patch: LorentzPatch, system: LambdaSystem) -> np.ndarray:
    """Non-strict relation on ``K * N`` composite points; index ``k * N + i`` is ``(k, x_i)``."""
    n = patch.size
    k = system.k
    dt, space_sq, time_sq = separations(patch)
    interval = time_sq - space_sq
    future = dt >= 0
    eye = np.eye(n, dtype=bool)
    rel = np.zeros((k * n, k * n), dtype=bool)
    for a in range(k):
        for b in range(k):
            block = future & (interval >= system.lam[a, b] ** 2)
            if not system.in_p[a, b]:
                block = block | eye
            rel[a * n : (a + 1) * n, b * n : (b + 1) * n] = block
    return rel


def mk_mixed_order(patch: LorentzPatch, system: LambdaSystem, validate: bool = True) -> FiniteOrder:
    """Strict part of the multi-component order; rejects rule-violating systems unless ``validate=False``."""
    if validate:
        report = validate_rules(system)
        if not report.passed:
            raise RuleViolationError(report)
    rel = mixed_relation(patch, system)
    np.fill_diagonal(rel, False)
    return FiniteOrder(rel)


def component_incomparability(order: FiniteOrder, patch: LorentzPatch, system: LambdaSystem, k: int) -> float:
    """Smallest Euclidean distance between strictly related points of component ``k``."""
    if system.profile[k] < 2:
        raise ValueError(f"component {k + 1} is commutative (n = {system.profile[k]}); no incomparability scale")
    n = patch.size
    block = order.matrix[k * n : (k + 1) * n, k * n : (k + 1) * n]
    if not block.any():
        return float("inf")
    _, space_sq, time_sq = separations(patch)
    return float(np.sqrt(time_sq + space_sq)[block].min())


def violation_patch(system: LambdaSystem, rule: str, witness: tuple[int, ...], dim: int = 2) -> LorentzPatch:
    """Small patch on which the composite relation breaks the order axiom behind ``rule``."""
    lam = system.lam
    e0 = np.zeros(dim)
    e0[0] = 1.0
    if rule in ("R", "A", "T3"):
        return LorentzPatch.from_points(np.zeros((1, dim)))
    if rule == "T1":
        a, b, c = witness
        gap = lam[a, c] - lam[a, b] - lam[b, c]
        d = gap / 4
        s1, s2 = lam[a, b] + d, lam[b, c] + d
        return LorentzPatch.from_points([0 * e0, s1 * e0, (s1 + s2) * e0])
    if rule == "T2":
        a, b, c = witness
        if lam[b, c] < lam[a, c]:
            t = 0.5 * (lam[b, c] + lam[a, c])
            return LorentzPatch.from_points([0 * e0, t * e0])
        t = 0.5 * (lam[c, a] + lam[c, b])
        return LorentzPatch.from_points([0 * e0, t * e0])
    raise ValueError(f"rule {rule} does not correspond to an order axiom")
