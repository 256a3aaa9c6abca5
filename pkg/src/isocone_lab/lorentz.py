"""Flat Minkowski patches and the Lambda-cone order.

``C(L) = {v : v0 >= 0 and v.v >= L^2}`` with signature (+ - ... -), and
``x <=_L y  iff  y - x in C(L) or y == x``. For ``L > 0`` the strict
part is closed and points closer than ``L`` are never related.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .order_core import FiniteOrder

BOUNDARY_TOL = 1e-9


def minkowski_sq(v) -> np.ndarray | float:
    """``v0^2 - sum_i vi^2`` along the last axis."""
    v = np.asarray(v, dtype=float)
    sq = v * v
    out = sq[..., 0] - np.sum(sq[..., 1:], axis=-1)
    return float(out) if out.ndim == 0 else out


def lorentz_distance(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return math.sqrt(max(0.0, minkowski_sq(y - x)))


def cone_membership(v, lam: float, include_zero: bool = False) -> bool:
    v = np.asarray(v, dtype=float)
    if include_zero and not np.any(v):
        return True
    return bool(v[0] >= 0 and minkowski_sq(v) >= lam * lam)


@dataclass(frozen=True, eq=False)
class LorentzPatch:
    """Points of R^{1,D-1}; column 0 is time."""

    points: np.ndarray
    box: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] < 2:
            raise ValueError("points must be an (N, D) array with D >= 2")
        box = np.array(self.box, dtype=float)
        if box.shape != (p.shape[1], 2):
            raise ValueError("box must give (low, high) per coordinate")
        if p.shape[0] and (np.any(p < box[:, 0] - 1e-12) or np.any(p > box[:, 1] + 1e-12)):
            raise ValueError("points outside the bounding box")
        p.setflags(write=False)
        box.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "box", box)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points) -> LorentzPatch:
        p = np.asarray(points, dtype=float)
        return cls(p, np.column_stack([p.min(axis=0), p.max(axis=0)]))

    @classmethod
    def sprinkle(cls, n: int, box, seed: int) -> LorentzPatch:
        """``n`` i.i.d. uniform points in ``box``."""
        box = np.asarray(box, dtype=float)
        rng = np.random.default_rng(seed)
        pts = box[:, 0] + rng.random((n, box.shape[0])) * (box[:, 1] - box[:, 0])
        return cls(pts, box)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{i}" for i in range(1, self.dim)])
        for row in self.points:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> LorentzPatch:
        rows = list(csv.reader(io.StringIO(text)))
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        return cls.from_points([[float(v) for v in r] for r in rows if r])

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "box": self.box.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> LorentzPatch:
        if "box" in data:
            return cls(data["points"], data["box"])
        return cls.from_points(data["points"])


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def separations(patch: LorentzPatch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise ``(dt, squared spatial distance, squared time)`` for ``y - x`` at ``[x, y]``."""
    p = patch.points
    diff = p[None, :, :] - p[:, None, :]
    sq = diff * diff
    return diff[..., 0], np.sum(sq[..., 1:], axis=-1), sq[..., 0]


def lambda_order(patch: LorentzPatch, lam: float) -> FiniteOrder:
    """Strict Lambda-order: ``x < y`` iff ``y - x in C(lam)``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    dt, space_sq, time_sq = separations(patch)
    return FiniteOrder((dt >= 0) & (time_sq - space_sq >= lam * lam))


def lambda_boundary_mask(patch: LorentzPatch, lam: float, tol: float = BOUNDARY_TOL) -> np.ndarray:
    """Pairs whose cone inequality holds or fails by less than ``tol`` (tie band)."""
    dt, space_sq, time_sq = separations(patch)
    return (np.abs(time_sq - space_sq - lam * lam) < tol) | ((np.abs(dt) < tol) & (time_sq - space_sq >= lam * lam - tol))


def euclidean_distances(patch: LorentzPatch) -> np.ndarray:
    """Coordinate-Euclidean distances, accumulated from the same squares as the order test."""
    _, space_sq, time_sq = separations(patch)
    return np.sqrt(time_sq + space_sq)


def lambda_order_from_table(distance: np.ndarray, times, lam: float) -> FiniteOrder:
    """Lambda-order from a user Lorentzian-distance table and a global time function."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    d = np.asarray(distance, dtype=float)
    t = np.asarray(times, dtype=float)
    if d.shape != (t.size, t.size):
        raise ValueError("distance table does not match the time column")
    return FiniteOrder((t[None, :] >= t[:, None]) & (d >= lam))


def boost_matrix(dim: int, rapidity: float, axis: int) -> np.ndarray:
    if not 1 <= axis < dim:
        raise ValueError(f"boost axis must be a spatial index in 1..{dim - 1}")
    b = np.eye(dim)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    b[0, 0] = b[axis, axis] = ch
    b[0, axis] = b[axis, 0] = -sh
    return b


def boost_transform(patch: LorentzPatch, rapidity: float, axis: int = 1) -> LorentzPatch:
    """Orthochronous boost along spatial ``axis``; the box becomes the new bounding box."""
    b = boost_matrix(patch.dim, rapidity, axis)
    return LorentzPatch.from_points(patch.points @ b.T)


def translate(patch: LorentzPatch, shift) -> LorentzPatch:
    shift = np.asarray(shift, dtype=float)
    return LorentzPatch(patch.points + shift, patch.box + shift[:, None])


@dataclass
class ConeSumResult:
    holds: bool
    witness: tuple[np.ndarray, np.ndarray] | None = None

    def __str__(self) -> str:
        if self.holds:
            return "Holds"
        v1, v2 = self.witness
        return f"CounterexampleFound({v1.tolist()}, {v2.tolist()})"


def _sample_cone(lam: float, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Vectors of C(lam): proper time ``lam`` + exponential excess, random spatial part."""
    tau = lam + rng.exponential(1.0, size=n) * (rng.random(n) < 0.7)
    direction = rng.normal(size=(n, dim - 1))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    speed = rng.exponential(2.0, size=n)
    spatial = direction * speed[:, None]
    t = np.sqrt(tau * tau + speed * speed)
    return np.column_stack([t, spatial])


def cone_sum_check(l1: float, l2: float, lam: float, sample_count: int = 10_000, seed: int = 0, dim: int = 2) -> ConeSumResult:
    """Randomized search for ``v1 in C(l1)``, ``v2 in C(l2)`` with ``v1 + v2`` outside ``C(lam)``."""
    if sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    if min(l1, l2, lam) < 0:
        raise ValueError("cone parameters must be non-negative")
    if l1 + l2 < lam:
        v1 = np.zeros(dim)
        v2 = np.zeros(dim)
        v1[0], v2[0] = l1, l2
        if not cone_membership(v1 + v2, lam):
            return ConeSumResult(False, (v1, v2))
    rng = np.random.default_rng(seed)
    a = _sample_cone(l1, sample_count, dim, rng)
    b = _sample_cone(l2, sample_count, dim, rng)
    s = a + b
    scale = 1.0 + np.abs(s).max(axis=1) ** 2
    bad = (s[:, 0] < 0) | (minkowski_sq(s) < lam * lam - 1e-12 * scale)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return ConeSumResult(False, (a[i], b[i]))
    return ConeSumResult(l1 + l2 >= lam)
