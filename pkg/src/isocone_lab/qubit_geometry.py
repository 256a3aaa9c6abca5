"""Bloch-sphere picture of the qubit isocones.

Pure states of M2(C) are points of the unit sphere. An isocone of M2(C)
is fixed by a closed convex region K of that sphere (here always an
intersection of closed hemispheres / caps, or the whole sphere), and
orders states by ``p <= q  iff  d(x, p) >= d(x, q) for all x in K``.

Distances are measured on the unit sphere. The rank-one projections sit
on a sphere of Frobenius radius sqrt(2)/2; multiply by ``FROBENIUS_RADIUS``
to convert. The order is unchanged by that rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .hermitian import HermitianMatrix, PureStateVector
from .order_core import Relation

FROBENIUS_RADIUS = math.sqrt(2) / 2
TIE_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9
MAX_MESH_DEG = 2.0

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot normalize the zero vector")
    return v / n


def as_sphere_point(v, tol: float = 1e-12) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError(f"not a unit 3-vector: {v!r}")
    return v


def bloch_map(xi: PureStateVector) -> np.ndarray:
    """Bloch vector ``v`` with ``|xi><xi| = (1 + v . sigma) / 2``."""
    if xi.dim != 2:
        raise ValueError(f"Bloch map needs a qubit state, got dimension {xi.dim}")
    a0, a1 = xi.amplitudes
    c = np.conj(a0) * a1
    return np.array([2 * c.real, 2 * c.imag, abs(a0) ** 2 - abs(a1) ** 2])


def density_from_bloch(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return 0.5 * (np.eye(2) + np.tensordot(v, PAULI, axes=1))


def bloch_from_hermitian(h: HermitianMatrix) -> tuple[float, np.ndarray]:
    """Split a 2x2 Hermitian matrix as ``t * 1 + w . sigma``; returns ``(t, w)``."""
    if h.dim != 2:
        raise ValueError("expected a 2x2 matrix")
    a = h.entries
    t = 0.5 * float(np.real(a[0, 0] + a[1, 1]))
    w = np.array([a[0, 1].real, -a[0, 1].imag, 0.5 * float(np.real(a[0, 0] - a[1, 1]))])
    return t, w


def state_from_bloch(v) -> PureStateVector:
    v = as_sphere_point(unit(v), tol=1e-9)
    theta = math.acos(max(-1.0, min(1.0, v[2])))
    phi = math.atan2(v[1], v[0])
    return PureStateVector.normalized([math.cos(theta / 2), math.sin(theta / 2) * np.exp(1j * phi)])


def geodesic_distance(p, q) -> float:
    """Great-circle angle between unit vectors, in [0, pi]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(math.atan2(np.linalg.norm(np.cross(p, q)), float(np.dot(p, q))))


def angles_to(points: np.ndarray, q) -> np.ndarray:
    points = np.atleast_2d(points)
    q = np.asarray(q, dtype=float)
    return np.arctan2(np.linalg.norm(np.cross(points, q), axis=-1), points @ q)


def _frame(axis) -> np.ndarray:
    """Orthonormal basis whose third vector is ``axis``."""
    z = unit(axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = unit(np.cross(helper, z))
    y = np.cross(z, x)
    return np.stack([x, y, z])


@lru_cache(maxsize=32)
def _polar_grid(step: float, max_angle: float) -> np.ndarray:
    rings = int(math.ceil(max_angle / step))
    pts = [np.array([[0.0, 0.0, 1.0]])]
    for i in range(1, rings + 1):
        theta = min(i * step, max_angle)
        m = max(1, int(math.ceil(2 * math.pi * math.sin(theta) / step)))
        phi = (np.arange(m) + 0.5 * (i % 2)) * (2 * math.pi / m)
        st = math.sin(theta)
        pts.append(np.column_stack([st * np.cos(phi), st * np.sin(phi), np.full(m, math.cos(theta))]))
    grid = np.concatenate(pts)
    grid.setflags(write=False)
    return grid


def sphere_grid(step_deg: float, center=(0.0, 0.0, 1.0), max_angle: float = math.pi) -> np.ndarray:
    """Near-uniform grid of rings around ``center`` with spacing ``step_deg``."""
    step = math.radians(step_deg)
    local = _polar_grid(round(step, 15), round(max_angle, 15))
    return local @ _frame(center)


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = math.pi * (3 - math.sqrt(5)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@dataclass(frozen=True, eq=False)
class CapRegion:
    """``{v : <v, n_i> >= c_i for all i}`` on the unit sphere, or the whole sphere."""

    normals: np.ndarray
    offsets: np.ndarray
    whole: bool = False

    def __post_init__(self):
        normals = np.array(self.normals, dtype=float).reshape(-1, 3)
        offsets = np.array(self.offsets, dtype=float).reshape(-1)
        if normals.shape[0] != offsets.shape[0]:
            raise ValueError("one offset per hemisphere normal")
        if self.whole:
            if normals.shape[0]:
                raise ValueError("the whole sphere carries no hemispheres")
        else:
            if not normals.shape[0]:
                raise ValueError("a cap region needs at least one hemisphere (or whole=True)")
            if np.any(np.abs(np.linalg.norm(normals, axis=1) - 1) > 1e-9):
                raise ValueError("hemisphere normals must be unit vectors")
            if np.any(np.abs(offsets) > 1):
                raise ValueError("offsets must lie in [-1, 1]")
            normals = unit(normals)
        normals.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        if not self.whole:
            centre, slack = self._interior_search()
            if slack <= 0:
                raise ValueError("cap region has empty interior")
            object.__setattr__(self, "_centre", centre)
            if np.any(self.offsets < 0):
                ok, witness = is_geodesically_convex(self.mesh(4.0), tol=math.radians(6.0), allow_antipodal=True)
                if not ok:
                    raise ValueError(f"cap region is not geodesically convex (witness {witness})")
        else:
            object.__setattr__(self, "_centre", np.array([0.0, 0.0, 1.0]))

    @classmethod
    def whole_sphere(cls) -> CapRegion:
        return cls(np.zeros((0, 3)), np.zeros(0), whole=True)

    @classmethod
    def cap(cls, center, radius_deg: float) -> CapRegion:
        return cls([unit(center)], [math.cos(math.radians(radius_deg))])

    @classmethod
    def hemisphere(cls, normal) -> CapRegion:
        return cls([unit(normal)], [0.0])

    def intersect(self, other: CapRegion) -> CapRegion:
        if self.whole:
            return other
        if other.whole:
            return self
        return CapRegion(np.vstack([self.normals, other.normals]), np.concatenate([self.offsets, other.offsets]))

    @property
    def centre(self) -> np.ndarray:
        return self._centre

    @property
    def is_single_cap(self) -> bool:
        return not self.whole and self.normals.shape[0] == 1

    def angular_slack(self, points) -> np.ndarray:
        """Signed angular margin of each point inside the region (min over hemispheres)."""
        pts = np.atleast_2d(points)
        if self.whole:
            return np.full(pts.shape[0], math.pi)
        ang = np.arctan2(
            np.linalg.norm(np.cross(pts[:, None, :], self.normals[None, :, :]), axis=-1),
            pts @ self.normals.T,
        )
        return np.min(np.arccos(np.clip(self.offsets, -1, 1))[None, :] - ang, axis=1)

    def contains(self, points, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        return self.angular_slack(points) >= -tol

    def _interior_search(self) -> tuple[np.ndarray, float]:
        cands = [self.normals, unit(self.normals.sum(axis=0, keepdims=True)) if np.linalg.norm(self.normals.sum(axis=0)) > 1e-12 else self.normals[:1], fibonacci_sphere(4000)]
        cands = np.concatenate(cands)
        slack = self.angular_slack(cands)
        best = int(np.argmax(slack))
        if self.is_single_cap:
            return self.normals[0].copy(), float(math.acos(self.offsets[0]))

        def neg_slack(x):
            return -float(self.angular_slack(unit(x))[0])

        res = minimize(neg_slack, cands[best], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
        x = unit(res.x)
        s = float(self.angular_slack(x)[0])
        if s < slack[best]:
            return cands[best], float(slack[best])
        return x, s

    def angular_radius(self) -> float:
        """Largest angle from ``centre`` to any point of the region (upper bound)."""
        if self.whole:
            return math.pi
        if self.is_single_cap:
            return math.acos(self.offsets[0])
        return math.pi

    def boundary_points(self, step_deg: float) -> np.ndarray:
        """Samples of every boundary circle (spacing <= step) that lie in the region, plus vertices."""
        if self.whole:
            return np.zeros((0, 3))
        step = math.radians(step_deg)
        pts = []
        for n, c in zip(self.normals, self.offsets):
            r = math.sqrt(max(0.0, 1 - c * c))
            if r == 0:
                continue
            m = max(8, int(math.ceil(2 * math.pi * r / step)))
            phi = np.arange(m) * (2 * math.pi / m)
            f = _frame(n)
            circle = c * n + r * (np.cos(phi)[:, None] * f[0] + np.sin(phi)[:, None] * f[1])
            pts.append(circle)
        pts.append(self.vertices())
        pts = np.concatenate(pts) if pts else np.zeros((0, 3))
        return pts[self.contains(pts, tol=1e-12)]

    def vertices(self) -> np.ndarray:
        out = []
        k = self.normals.shape[0]
        for i in range(k):
            for j in range(i + 1, k):
                out.extend(_circle_intersections(self.normals[i], self.offsets[i], self.normals[j], self.offsets[j]))
        if not out:
            return np.zeros((0, 3))
        pts = np.array(out)
        return pts[self.contains(pts, tol=1e-12)]

    def mesh(self, step_deg: float) -> np.ndarray:
        """Uniform grid of the region at spacing ``step_deg`` plus its boundary samples."""
        grid = sphere_grid(step_deg, center=self.centre, max_angle=self.angular_radius())
        if self.whole:
            return grid
        inside = grid[self.contains(grid, tol=1e-12)]
        return np.concatenate([inside, self.boundary_points(step_deg)])

    def project(self, u) -> np.ndarray:
        """Nearest point of the region to the unit vector ``u`` (geodesic distance)."""
        u = unit(u)
        if self.whole or self.contains(u, tol=1e-12)[0]:
            return u
        cands = []
        for n, c in zip(self.normals, self.offsets):
            t = u - float(u @ n) * n
            if np.linalg.norm(t) < 1e-15:
                t = _frame(n)[0]
            cands.append(c * n + math.sqrt(max(0.0, 1 - c * c)) * unit(t))
        cands.extend(self.vertices().tolist())
        cands = np.array(cands)
        cands = cands[self.contains(cands, tol=1e-9)]
        if not cands.shape[0]:
            raise RuntimeError("projection found no boundary candidate")
        return unit(cands[int(np.argmin(angles_to(cands, u)))])

    def distance(self, u) -> float:
        return geodesic_distance(unit(u), self.project(u))

    def to_json(self) -> dict:
        if self.whole:
            return {"whole": True}
        return {"hemispheres": [{"n": n.tolist(), "c": float(c)} for n, c in zip(self.normals, self.offsets)]}

    @classmethod
    def from_json(cls, data: dict) -> CapRegion:
        if data.get("whole"):
            return cls.whole_sphere()
        hs = data["hemispheres"]
        return cls([h["n"] for h in hs], [h["c"] for h in hs])


def _circle_intersections(n1, c1, n2, c2) -> list[np.ndarray]:
    """Points ``u`` on the unit sphere with ``u.n1 = c1`` and ``u.n2 = c2``."""
    g = float(n1 @ n2)
    det = 1 - g * g
    if det < 1e-14:
        return []
    a = (c1 - c2 * g) / det
    b = (c2 - c1 * g) / det
    base = a * n1 + b * n2
    rest = 1 - float(base @ base)
    if rest < 0:
        return []
    perp = unit(np.cross(n1, n2))
    h = math.sqrt(rest)
    return [base + h * perp, base - h * perp]


@dataclass(frozen=True, eq=False)
class QubitCone:
    """``R+ * K + R * 1``: the isocone of M2(C) fixed by the region K."""

    cap: CapRegion

    def contains(self, h: HermitianMatrix, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.distance(h) <= tol

    def distance(self, h: HermitianMatrix) -> float:
        """Angular distance of the traceless direction of ``h`` to the cap (0 for scalars)."""
        _, w = bloch_from_hermitian(h)
        norm = np.linalg.norm(w)
        if norm <= 1e-12 * max(1.0, float(np.abs(h.entries).max())):
            return 0.0
        return max(0.0, -float(self.cap.angular_slack(w / norm)[0]))

    @staticmethod
    def element(direction, radial: float = 1.0, shift: float = 0.0) -> HermitianMatrix:
        """``radial * projector(direction) + shift * 1``."""
        return HermitianMatrix(radial * density_from_bloch(unit(direction)) + shift * np.eye(2))


def order_margins(cap: CapRegion, p, q, mesh_deg: float) -> tuple[float, float]:
    """``(min_x <x, q - p>, min_x <x, p - q>)`` over the mesh of ``cap``.

    ``p <= q`` holds on the mesh iff the first margin is >= -TIE_TOL.
    """
    w = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    vals = _mesh_cached(cap, mesh_deg) @ w
    return float(vals.min()), float(-vals.max())


_MESH_CACHE: dict[tuple[int, float], np.ndarray] = {}


def _mesh_cached(cap: CapRegion, mesh_deg: float) -> np.ndarray:
    key = (id(cap), float(mesh_deg))
    hit = _MESH_CACHE.get(key)
    if hit is None or hit[0] is not cap:
        if len(_MESH_CACHE) > 64:
            _MESH_CACHE.clear()
        hit = (cap, cap.mesh(mesh_deg))
        _MESH_CACHE[key] = hit
    return hit[1]


def qubit_order(cap: CapRegion, p, q, mesh_deg: float = 1.0, tol: float = TIE_TOL) -> Relation:
    """Compare Bloch points ``p`` and ``q`` under the order fixed by ``cap``.

    The defining inequality is tested on a grid of the cap plus its
    boundary; violations smaller than TIE_TOL count as satisfied.
    """
    if mesh_deg > MAX_MESH_DEG:
        raise ValueError(f"mesh must be at most {MAX_MESH_DEG} degrees")
    le, ge = order_margins(cap, p, q, mesh_deg)
    return Relation.from_flags(le >= -tol, ge >= -tol)


def is_geodesically_convex(points, tol: float, allow_antipodal: bool = False):
    """Midpoint test on a sampled region.

    True iff for all sample pairs the geodesic midpoint is within angle
    ``tol`` of some sample. Returns ``(convex, witness_pair)``.
    """
    pts = unit(np.atleast_2d(points))
    if pts.shape[0] < 3:
        raise ValueError("need at least 3 points")
    tree = cKDTree(pts)
    chord = 2 * math.sin(tol / 2)
    n = pts.shape[0]
    for i in range(n - 1):
        s = pts[i] + pts[i + 1 :]
        norms = np.linalg.norm(s, axis=1)
        antipodal = norms < 1e-9
        if antipodal.any():
            if not allow_antipodal:
                j = i + 1 + int(np.flatnonzero(antipodal)[0])
                raise ValueError(f"antipodal pair ({i}, {j}) has no unique midpoint")
            s, norms = s[~antipodal], norms[~antipodal]
            idx = (i + 1 + np.flatnonzero(~antipodal))
        else:
            idx = np.arange(i + 1, n)
        mids = s / norms[:, None]
        dist, _ = tree.query(mids, distance_upper_bound=chord * (1 + 1e-12))
        bad = np.isinf(dist)
        if bad.any():
            return False, (i, int(idx[np.flatnonzero(bad)[0]]))
    return True, None


def uniform_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    return unit(rng.normal(size=(n, 3)))


def uniform_in_cap(cap: CapRegion, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples of the region by rejection from the sphere."""
    if cap.whole:
        return uniform_sphere(n, rng)
    if cap.is_single_cap:
        c = cap.offsets[0]
        z = rng.uniform(c, 1.0, size=n)
        phi = rng.uniform(0, 2 * math.pi, size=n)
        r = np.sqrt(1 - z * z)
        local = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        return local @ _frame(cap.normals[0])
    out = []
    count = 0
    while count < n:
        batch = uniform_sphere(max(1000, 4 * n), rng)
        batch = batch[cap.contains(batch, tol=0.0)]
        out.append(batch)
        count += batch.shape[0]
    return np.concatenate(out)[:n]


def cap_measure(cap: CapRegion, samples: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo area of the region in steradians; returns ``(area, standard_error)``."""
    if cap.whole:
        return 4 * math.pi, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    chunk = 200_000
    while done < samples:
        m = min(chunk, samples - done)
        hits += int(cap.contains(uniform_sphere(m, rng), tol=0.0).sum())
        done += m
    frac = hits / samples
    return 4 * math.pi * frac, 4 * math.pi * math.sqrt(frac * (1 - frac) / samples)
