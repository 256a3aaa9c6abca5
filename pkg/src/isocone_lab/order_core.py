"""Finite strict partial orders on metric point clouds."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

INFINITY = math.inf


class Relation(str, enum.Enum):
    """Outcome of comparing two elements under a (non-strict) order."""

    LESS_OR_EQUAL = "LessOrEqual"
    GREATER_OR_EQUAL = "GreaterOrEqual"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"

    @classmethod
    def from_flags(cls, le: bool, ge: bool) -> Relation:
        if le and ge:
            return cls.EQUAL
        if le:
            return cls.LESS_OR_EQUAL
        if ge:
            return cls.GREATER_OR_EQUAL
        return cls.INCOMPARABLE

    def flipped(self) -> Relation:
        if self is Relation.LESS_OR_EQUAL:
            return Relation.GREATER_OR_EQUAL
        if self is Relation.GREATER_OR_EQUAL:
            return Relation.LESS_OR_EQUAL
        return self


class InvalidOrderError(ValueError):
    def __init__(self, report: OrderReport):
        super().__init__(report.summary())
        self.report = report


class CycleError(ValueError):
    def __init__(self, cycle: list[int]):
        super().__init__("relation contains a cycle: " + " -> ".join(map(str, cycle)))
        self.cycle = cycle


def _as_matrix(rel, size: int) -> np.ndarray:
    if isinstance(rel, FiniteOrder):
        if rel.size != size:
            raise ValueError(f"order has size {rel.size}, expected {size}")
        return rel.matrix
    if isinstance(rel, np.ndarray):
        m = np.asarray(rel, dtype=bool)
        if m.shape != (size, size):
            raise ValueError(f"relation matrix has shape {m.shape}, expected {(size, size)}")
        return m
    m = np.zeros((size, size), dtype=bool)
    for x, y in rel:
        if not (0 <= x < size and 0 <= y < size):
            raise IndexError(f"pair ({x}, {y}) out of range for size {size}")
        m[x, y] = True
    return m


@dataclass(frozen=True, eq=False)
class FiniteOrder:
    """Strict relation ``x < y`` on ``range(size)``, held as a boolean matrix.

    Construction does not validate the poset axioms; use
    :func:`validate_order` for that.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("relation matrix must be square")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pairs(cls, size: int, pairs: Iterable[tuple[int, int]]) -> FiniteOrder:
        return cls(_as_matrix(list(pairs), size))

    @classmethod
    def empty(cls, size: int) -> FiniteOrder:
        return cls(np.zeros((size, size), dtype=bool))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        xs, ys = np.nonzero(self.matrix)
        return list(zip(xs.tolist(), ys.tolist()))

    @property
    def pair_count(self) -> int:
        return int(self.matrix.sum())

    def less(self, x: int, y: int) -> bool:
        return bool(self.matrix[x, y])

    def comparable(self) -> np.ndarray:
        """Symmetric mask of strictly comparable pairs."""
        return self.matrix | self.matrix.T

    def __eq__(self, other):
        return isinstance(other, FiniteOrder) and np.array_equal(self.matrix, other.matrix)

    def to_json(self) -> dict:
        return {"size": self.size, "strict": [list(p) for p in self.pairs]}

    @classmethod
    def from_json(cls, data: dict) -> FiniteOrder:
        return cls.from_pairs(int(data["size"]), [tuple(p) for p in data["strict"]])


@dataclass
class OrderReport:
    size: int
    violations: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.valid:
            return f"valid strict partial order on {self.size} points"
        lines = [f"invalid relation on {self.size} points:"]
        lines += [f"  {axiom} violated, witness {w}" for axiom, w in self.violations]
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "valid": self.valid,
            "violations": [{"axiom": a, "witness": list(w)} for a, w in self.violations],
        }


def validate_order(rel, size: int) -> OrderReport:
    """Check irreflexivity, antisymmetry and transitivity; one witness per failed axiom.

    ``rel`` may be an iterable of pairs, a boolean matrix or a FiniteOrder.
    """
    m = _as_matrix(rel, size)
    report = OrderReport(size)
    diag = np.flatnonzero(np.diag(m))
    if diag.size:
        report.violations.append(("irreflexivity", (int(diag[0]), int(diag[0]))))
    both = np.triu(m & m.T, k=1)
    if both.any():
        x, y = np.argwhere(both)[0]
        report.violations.append(("antisymmetry", (int(x), int(y))))
    if size:
        f = m.astype(np.float32)
        two_step = (f @ f) > 0.5
        missing = two_step & ~m
        if missing.any():
            x, z = np.argwhere(missing)[0]
            y = int(np.flatnonzero(m[x] & m[:, z])[0])
            report.violations.append(("transitivity", (int(x), y, int(z))))
    return report


def validate_reflexive_order(rel, size: int) -> OrderReport:
    """Axioms of a non-strict order: reflexivity, antisymmetry, transitivity."""
    m = _as_matrix(rel, size)
    report = OrderReport(size)
    missing = np.flatnonzero(~np.diag(m))
    if missing.size:
        report.violations.append(("reflexivity", (int(missing[0]), int(missing[0]))))
    both = np.triu(m & m.T, k=1)
    if both.any():
        x, y = np.argwhere(both)[0]
        report.violations.append(("antisymmetry", (int(x), int(y))))
    if size:
        f = m.astype(np.float32)
        missing = ((f @ f) > 0.5) & ~m
        if missing.any():
            x, z = np.argwhere(missing)[0]
            y = int(np.flatnonzero(m[x] & m[:, z])[0])
            report.violations.append(("transitivity", (int(x), y, int(z))))
    return report


def _find_cycle(m: np.ndarray) -> list[int]:
    n = m.shape[0]
    succ = [np.flatnonzero(m[i]).tolist() for i in range(n)]
    color = [0] * n
    parent = [-1] * n
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
            elif color[nxt] == 0:
                color[nxt] = 1
                parent[nxt] = node
                stack.append((nxt, iter(succ[nxt])))
            elif color[nxt] == 1:
                cycle = [nxt]
                cur = node
                while cur != nxt:
                    cycle.append(cur)
                    cur = parent[cur]
                cycle.append(nxt)
                return cycle[::-1]
    return []


def transitive_closure(rel, size: int) -> FiniteOrder:
    """Smallest transitive superset of ``rel``; raises CycleError if it is not a strict order."""
    m = _as_matrix(rel, size).copy()
    if m.diagonal().any():
        x = int(np.flatnonzero(m.diagonal())[0])
        raise CycleError([x, x])
    closed = m.copy()
    for k in range(size):
        closed |= closed[:, k, None] & closed[None, k, :]
    if closed.diagonal().any():
        raise CycleError(_find_cycle(m))
    return FiniteOrder(closed)


@dataclass(frozen=True, eq=False)
class UtilityFunction:
    values: np.ndarray

    def gap_violations(self, order: FiniteOrder, gap: float = 1.0) -> list[tuple[int, int]]:
        xs, ys = np.nonzero(order.matrix)
        bad = self.values[ys] - self.values[xs] < gap
        return list(zip(xs[bad].tolist(), ys[bad].tolist()))


def levin_utility(order: FiniteOrder) -> UtilityFunction:
    """Integer utility with ``g(y) - g(x) >= 1`` whenever ``x < y``.

    ``g(y)`` is the length of the longest chain ending at ``y``.
    """
    report = validate_order(order, order.size)
    if not report.valid:
        raise InvalidOrderError(report)
    m = order.matrix
    n = order.size
    indeg = m.sum(axis=0).astype(int)
    level = np.zeros(n, dtype=int)
    ready = [i for i in range(n) if indeg[i] == 0]
    while ready:
        ready.sort()
        nxt = []
        for x in ready:
            for y in np.flatnonzero(m[x]):
                level[y] = max(level[y], level[x] + 1)
                indeg[y] -= 1
                if indeg[y] == 0:
                    nxt.append(int(y))
        ready = nxt
    return UtilityFunction(level)


@dataclass(frozen=True, eq=False)
class MetricPointCloud:
    """Point cloud with a pairwise distance table.

    ``metric`` is ``"euclidean"`` or an explicit symmetric table.
    """

    points: np.ndarray
    distances: np.ndarray

    @classmethod
    def euclidean(cls, points) -> MetricPointCloud:
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        diff = p[:, None, :] - p[None, :, :]
        return cls(p, np.sqrt(np.sum(diff * diff, axis=-1)))

    @classmethod
    def from_table(cls, points, table, check_triples: int = 2000, seed: int = 0) -> MetricPointCloud:
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        d = np.asarray(table, dtype=float)
        n = p.shape[0]
        if d.shape != (n, n):
            raise ValueError(f"distance table shape {d.shape} does not match {n} points")
        if np.any(np.diag(d) != 0) or np.any(d < 0) or not np.array_equal(d, d.T):
            raise ValueError("distance table must be symmetric, non-negative, zero on the diagonal")
        if n >= 3:
            rng = np.random.default_rng(seed)
            i, j, k = rng.integers(0, n, size=(3, check_triples))
            bad = d[i, k] > d[i, j] + d[j, k] + 1e-9
            if bad.any():
                w = int(np.flatnonzero(bad)[0])
                raise ValueError(f"triangle inequality fails on ({i[w]}, {j[w]}, {k[w]})")
        return cls(p, d)

    @classmethod
    def from_json(cls, data: dict) -> MetricPointCloud:
        metric = data.get("metric", "euclidean")
        if metric == "euclidean":
            return cls.euclidean(data["points"])
        return cls.from_table(data["points"], metric)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def _check_sizes(cloud: MetricPointCloud, order: FiniteOrder) -> None:
    if cloud.size != order.size:
        raise ValueError(f"cloud has {cloud.size} points but order has {order.size}")


def epsilon_cutoff(cloud: MetricPointCloud, order: FiniteOrder) -> float:
    """Smallest distance between strictly related points (``inf`` for an empty relation)."""
    _check_sizes(cloud, order)
    if not order.matrix.any():
        return INFINITY
    return float(cloud.distances[order.matrix].min())


def incomparability_ball(cloud: MetricPointCloud, order: FiniteOrder, x: int) -> float:
    """Distance from ``x`` to the nearest point comparable with it."""
    _check_sizes(cloud, order)
    comp = order.matrix[x] | order.matrix[:, x]
    if not comp.any():
        return INFINITY
    return float(cloud.distances[x, comp].min())


def incomparability_balls(cloud: MetricPointCloud, order: FiniteOrder) -> np.ndarray:
    _check_sizes(cloud, order)
    comp = order.comparable()
    d = np.where(comp, cloud.distances, np.inf)
    return d.min(axis=1)


def lambda_order_1d(samples: Sequence[float], lam: Sequence[float]) -> tuple[FiniteOrder, OrderReport]:
    """Order ``x < y`` iff ``y - x >= lam(x)`` on sorted samples of [0, 1].

    The relation is returned together with its validation report; a
    failing report is not repaired.
    """
    s = np.asarray(samples, dtype=float)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), s.shape)
    if np.any(np.diff(s) < 0):
        raise ValueError("samples must be sorted")
    if np.any(lam <= 0):
        raise ValueError("lam must be positive")
    m = (s[None, :] - s[:, None]) >= lam[:, None]
    order = FiniteOrder(m)
    return order, validate_order(order, order.size)


def _default_scales(delta: float) -> list[float]:
    scales = []
    h = 1e-2
    while h > delta / 4:
        scales.append(h)
        h /= 10
    scales.append(delta / 4)
    return scales


def closedness_proxy(
    samples: Sequence[float],
    lam: Callable[[float], float],
    delta: float = 1e-6,
    scales: Sequence[float] | None = None,
) -> tuple[bool, tuple[float, float] | None]:
    """Finite stand-in for closedness of the 1-D lambda order.

    A sample pair ``(x, y)`` that is not strictly related (by more than
    ``delta``) is a witness if, at every refinement scale ``h``, some
    perturbed pair ``(x + a, y + b)`` with ``a, b in {-h, 0, h}`` is
    strictly related: the pair is then a limit of strictly related pairs.
    Returns ``(passed, witness)``.
    """
    s = np.asarray(samples, dtype=float)
    lam_s = np.array([lam(x) for x in s])
    scales = list(scales) if scales is not None else _default_scales(delta)
    offsets = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    gap = s[None, :] - s[:, None]
    candidates = np.argwhere(gap < lam_s[:, None] - delta)
    for i, j in candidates:
        x, y = s[i], s[j]
        limit = True
        for h in scales:
            hit = False
            for a, b in offsets:
                xp, yp = x + a * h, y + b * h
                if 0.0 <= xp <= 1.0 and 0.0 <= yp <= 1.0 and yp - xp >= lam(xp):
                    hit = True
                    break
            if not hit:
                limit = False
                break
        if limit:
            return False, (float(x), float(y))
    return True, None
