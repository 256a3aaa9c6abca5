"""Set-valued maps of local qubit isocones over a finite metric base, and their selections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .hermitian import HermitianMatrix
from .isocone_fd import LocalIsocone
from .order_core import MetricPointCloud
from .qubit_geometry import CapRegion, QubitCone, bloch_from_hermitian, unit

DEFAULT_DIRECTION_MESH_DEG = 1.0


def mesh_size(cloud: MetricPointCloud) -> float:
    """Largest nearest-neighbour distance in the cloud (0 for a single point)."""
    if cloud.size < 2:
        return 0.0
    d = cloud.distances + np.diag(np.full(cloud.size, np.inf))
    return float(d.min(axis=1).max())


def region_distances(cap: CapRegion, directions: np.ndarray) -> np.ndarray:
    """Geodesic distance from each unit direction to the region."""
    if cap.whole:
        return np.zeros(directions.shape[0])
    if cap.is_single_cap:
        return np.maximum(0.0, -cap.angular_slack(directions))
    inside = cap.contains(directions, tol=0.0)
    out = np.zeros(directions.shape[0])
    for i in np.flatnonzero(~inside):
        out[i] = cap.distance(directions[i])
    return out


@dataclass(frozen=True, eq=False)
class LocalIsoconeMap:
    cloud: MetricPointCloud
    cones: tuple[LocalIsocone, ...]

    def __post_init__(self):
        object.__setattr__(self, "cones", tuple(self.cones))
        if len(self.cones) != self.cloud.size:
            raise ValueError(f"{len(self.cones)} cones for {self.cloud.size} base points")
        sizes = {c.size for c in self.cones}
        if len(sizes) != 1:
            raise ValueError("all local cones of a map must act on blocks of one size")

    @classmethod
    def from_caps(cls, cloud: MetricPointCloud, caps: Sequence[CapRegion]) -> LocalIsoconeMap:
        return cls(cloud, tuple(LocalIsocone.qubit(c) for c in caps))

    @property
    def caps(self) -> list[CapRegion]:
        return [c.cone.cap if c.is_qubit else CapRegion.whole_sphere() for c in self.cones]

    def to_json(self) -> dict:
        return {
            "points": self.cloud.points.tolist(),
            "cones": [c.to_json() for c in self.cones],
        }

    @classmethod
    def from_json(cls, data: dict) -> LocalIsoconeMap:
        cloud = MetricPointCloud.from_json(data)
        return cls(cloud, tuple(LocalIsocone.from_json(c) for c in data["cones"]))


@dataclass
class LhcResult:
    passed: bool
    point: int | None = None
    direction: np.ndarray | None = None
    neighbor: int | None = None
    gap_deg: float | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        if self.passed:
            return {"result": "Pass"}
        return {
            "result": "Fail",
            "point": self.point,
            "direction": self.direction.tolist(),
            "neighbor": self.neighbor,
            "gap_deg": self.gap_deg,
        }


class LhcError(ValueError):
    def __init__(self, result: LhcResult):
        super().__init__(f"map is not lower hemi-continuous at point {result.point} (neighbour {result.neighbor})")
        self.result = result


def _cap_key(cap: CapRegion):
    return repr(cap.to_json())


def check_lhc(lmap: LocalIsoconeMap, radius: float, direction_mesh_deg: float = DEFAULT_DIRECTION_MESH_DEG) -> LhcResult:
    """Finite lower hemi-continuity test.

    For every base point ``x`` (in index order) and every mesh direction
    ``y`` of its cap, each ``x'`` with ``d(x, x') < radius`` must have a cap
    meeting the open angular ball of half-angle ``direction_mesh_deg``
    around ``y``. The first failure is returned as the witness.
    """
    if radius < mesh_size(lmap.cloud):
        raise ValueError(f"radius {radius} is below the cloud mesh size {mesh_size(lmap.cloud)}")
    half = math.radians(direction_mesh_deg)
    caps = lmap.caps
    keys = [_cap_key(c) for c in caps]
    meshes: dict[str, np.ndarray] = {}
    d = lmap.cloud.distances
    for x in range(lmap.cloud.size):
        nbrs = [j for j in np.flatnonzero(d[x] < radius) if j != x and keys[j] != keys[x]]
        if not nbrs:
            continue
        if keys[x] not in meshes:
            meshes[keys[x]] = caps[x].mesh(direction_mesh_deg)
        dirs = meshes[keys[x]]
        for j in nbrs:
            gap = region_distances(caps[j], dirs)
            bad = gap >= half
            if bad.any():
                i = int(np.argmax(gap))
                return LhcResult(False, x, dirs[i].copy(), int(j), math.degrees(float(gap[i])))
    return LhcResult(True)


@dataclass(frozen=True, eq=False)
class SelectionField:
    values: tuple[HermitianMatrix, ...]
    lipschitz: float = 0.0
    radius: float = 0.0

    def directions(self) -> np.ndarray:
        """Unit Bloch direction of each value's traceless part (zero rows for scalars)."""
        out = []
        for h in self.values:
            _, w = bloch_from_hermitian(h)
            n = np.linalg.norm(w)
            out.append(w / n if n > 1e-12 else np.zeros(3))
        return np.array(out)

    def plus_scalar(self, scalars: Sequence[float]) -> SelectionField:
        return SelectionField(tuple(h + float(s) for h, s in zip(self.values, scalars)), self.lipschitz, self.radius)

    def times(self, factors: Sequence[float]) -> SelectionField:
        if any(f < 0 for f in factors):
            raise ValueError("only non-negative multiples preserve the cones")
        return SelectionField(tuple(float(f) * h for h, f in zip(self.values, factors)), self.lipschitz, self.radius)

    def to_json(self) -> list:
        return [h.to_json() for h in self.values]


def is_selection(lmap: LocalIsoconeMap, field: SelectionField, tol: float = 1e-9) -> bool:
    return len(field.values) == lmap.cloud.size and all(c.contains(h, tol) for c, h in zip(lmap.cones, field.values))


def lipschitz_constant(cloud: MetricPointCloud, values: Sequence[HermitianMatrix], radius: float) -> float:
    d = cloud.distances
    best = 0.0
    for x in range(cloud.size):
        for y in np.flatnonzero((d[x] < radius) & (d[x] > 0)):
            diff = float(np.linalg.norm(values[x].entries - values[y].entries))
            best = max(best, diff / d[x, y])
    return best


def build_selection(
    lmap: LocalIsoconeMap,
    seed_direction,
    direction_mesh_deg: float = DEFAULT_DIRECTION_MESH_DEG,
) -> SelectionField:
    """Selection through the map: nearest cap point to ``seed_direction``, lifted to a unit projector.

    Raises LhcError when the map fails :func:`check_lhc` at the cloud's
    mesh radius.
    """
    radius = mesh_size(lmap.cloud) * (1 + 1e-6)
    result = check_lhc(lmap, radius, direction_mesh_deg)
    if not result:
        raise LhcError(result)
    seed = unit(seed_direction)
    values = []
    for cone in lmap.cones:
        if not cone.is_qubit:
            values.append(HermitianMatrix.identity(cone.size))
            continue
        values.append(QubitCone.element(cone.cone.cap.project(seed), radial=1.0))
    values = tuple(values)
    return SelectionField(values, lipschitz_constant(lmap.cloud, values, radius), radius)


def selection_density_check(lmap: LocalIsoconeMap, fields: Sequence[SelectionField], x: int, coverage_mesh_deg: float) -> float:
    """One-sided Hausdorff distance, in degrees, from the cap mesh at ``x`` to the selected directions at ``x``."""
    cap = lmap.caps[x]
    mesh = cap.mesh(coverage_mesh_deg)
    dirs = np.array([f.directions()[x] for f in fields])
    dirs = dirs[np.linalg.norm(dirs, axis=1) > 0]
    if not dirs.shape[0]:
        return 180.0
    _, idx = cKDTree(dirs).query(mesh)
    ang = np.arctan2(np.linalg.norm(np.cross(mesh, dirs[idx]), axis=1), np.sum(mesh * dirs[idx], axis=1))
    return math.degrees(float(ang.max()))
