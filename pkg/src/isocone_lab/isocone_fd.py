"""Isocones of finite direct sums of matrix algebras.

A lexicographic isocone is fixed by a finite poset of sites and, per site,
a local isocone: the full self-adjoint part for blocks of size other than
two, or a Bloch-cap cone for qubit blocks. An element ``a = (a_x)`` belongs
to it when each block lies in its local cone and ``max spec(a_x) <=
min spec(a_y)`` for every strict pair ``x < y``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .hermitian import HermitianMatrix, IsotoneFunction, PureStateVector, apply_isotone, spec_bounds
from .order_core import FiniteOrder, InvalidOrderError, Relation, levin_utility, validate_order
from .qubit_geometry import CapRegion, QubitCone, bloch_map, qubit_order

log = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-9
TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LocalIsocone:
    """Local cone of one site; ``cone is None`` means the whole self-adjoint part."""

    size: int
    cone: QubitCone | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("block size must be positive")
        if self.cone is None and self.size == 2:
            raise ValueError("qubit blocks take a Bloch-cap cone (use CapRegion.whole_sphere() for the full cone)")
        if self.cone is not None and self.size != 2:
            raise ValueError("Bloch-cap cones exist only for 2x2 blocks")

    @classmethod
    def trivial(cls, n: int) -> LocalIsocone:
        return cls(n)

    @classmethod
    def qubit(cls, cap: CapRegion) -> LocalIsocone:
        return cls(2, QubitCone(cap))

    @property
    def is_qubit(self) -> bool:
        return self.cone is not None

    def contains(self, block: HermitianMatrix, tol: float = MEMBERSHIP_TOL) -> bool:
        if block.dim != self.size:
            raise ValueError(f"block of size {block.dim} at a site of size {self.size}")
        return True if self.cone is None else self.cone.contains(block, tol)

    def random_block(self, rng: np.random.Generator, directions: np.ndarray | None = None) -> HermitianMatrix:
        """Random member: uniform cap point, exponential radial scale, uniform trace shift."""
        if self.cone is None:
            return HermitianMatrix.random(self.size, rng)
        if directions is None:
            from .qubit_geometry import uniform_in_cap

            u = uniform_in_cap(self.cone.cap, 1, rng)[0]
        else:
            u = directions[rng.integers(directions.shape[0])]
        return QubitCone.element(u, radial=rng.exponential(1.0), shift=rng.uniform(-2.0, 2.0))

    def to_json(self) -> dict:
        if self.cone is None:
            return {"trivial": self.size}
        return {"qubit": self.cone.cap.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> LocalIsocone:
        if "trivial" in data:
            return cls.trivial(int(data["trivial"]))
        return cls.qubit(CapRegion.from_json(data["qubit"]))


@dataclass(frozen=True, eq=False)
class LexIsocone:
    poset: FiniteOrder
    cones: tuple[LocalIsocone, ...]

    def __post_init__(self):
        object.__setattr__(self, "cones", tuple(self.cones))
        if len(self.cones) != self.poset.size:
            raise ValueError(f"{len(self.cones)} local cones for {self.poset.size} sites")
        report = validate_order(self.poset, self.poset.size)
        if not report.valid:
            raise InvalidOrderError(report)

    @property
    def profile(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.cones)

    @property
    def sites(self) -> int:
        return len(self.cones)

    @classmethod
    def from_profile(cls, profile: Sequence[int], strict: Sequence[tuple[int, int]], caps: dict[int, CapRegion] | None = None) -> LexIsocone:
        caps = caps or {}
        cones = []
        for i, n in enumerate(profile):
            if n == 2:
                cones.append(LocalIsocone.qubit(caps.get(i, CapRegion.whole_sphere())))
            else:
                cones.append(LocalIsocone.trivial(n))
        return cls(FiniteOrder.from_pairs(len(profile), strict), tuple(cones))

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile),
            "strict": [list(p) for p in self.poset.pairs],
            "cones": [c.to_json() for c in self.cones],
        }

    @classmethod
    def from_json(cls, data: dict) -> LexIsocone:
        profile = [int(n) for n in data["profile"]]
        poset = FiniteOrder.from_pairs(len(profile), [tuple(p) for p in data["strict"]])
        cones = tuple(LocalIsocone.from_json(c) for c in data["cones"])
        if tuple(c.size for c in cones) != tuple(profile):
            raise ValueError("cone sizes do not match the profile")
        return cls(poset, cones)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    blocks: tuple[HermitianMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @classmethod
    def constant(cls, profile: Sequence[int], c: float) -> AlgebraElement:
        return cls(tuple(HermitianMatrix.identity(n, c) for n in profile))

    @classmethod
    def from_utility(cls, profile: Sequence[int], g: Sequence[float]) -> AlgebraElement:
        return cls(tuple(HermitianMatrix.identity(n, float(v)) for n, v in zip(profile, g)))

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def scaled(self, s: float) -> AlgebraElement:
        return AlgebraElement(tuple(s * b for b in self.blocks))

    def apply(self, f: IsotoneFunction) -> AlgebraElement:
        return AlgebraElement(tuple(apply_isotone(b, f) for b in self.blocks))

    def bounds(self) -> list[tuple[float, float]]:
        return [spec_bounds(b) for b in self.blocks]

    def to_json(self) -> list:
        return [b.to_json() for b in self.blocks]


@dataclass(frozen=True, eq=False)
class SitedPureState:
    site: int
    state: PureStateVector


@dataclass
class Membership:
    member: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.member


def _check_shape(a: AlgebraElement, lex: LexIsocone) -> None:
    if len(a.blocks) != lex.sites:
        raise ValueError(f"element has {len(a.blocks)} blocks, isocone has {lex.sites} sites")
    for i, (b, n) in enumerate(zip(a.blocks, lex.profile)):
        if b.dim != n:
            raise ValueError(f"block {i} has size {b.dim}, expected {n}")


def lex_membership(a: AlgebraElement, lex: LexIsocone, tol: float = MEMBERSHIP_TOL) -> Membership:
    """Membership of ``a`` in the lexicographic isocone.

    Witness is ``("block", x)`` for a block outside its local cone or
    ``("gap", x, y)`` for a strict pair with ``max spec(a_x) > min spec(a_y)``.
    """
    _check_shape(a, lex)
    for x, (b, cone) in enumerate(zip(a.blocks, lex.cones)):
        if not cone.contains(b, tol):
            return Membership(False, ("block", x))
    bounds = a.bounds()
    for x, y in lex.poset.pairs:
        hi = bounds[x][1]
        lo = bounds[y][0]
        if hi > lo + tol * (1.0 + max(abs(lo), abs(hi))):
            return Membership(False, ("gap", x, y))
    return Membership(True)


def local_relation(cone: LocalIsocone, s: PureStateVector, t: PureStateVector, mesh_deg: float = 1.0) -> Relation:
    if cone.cone is None:
        same = np.allclose(s.density_matrix(), t.density_matrix(), atol=TIE_TOL, rtol=0)
        return Relation.EQUAL if same else Relation.INCOMPARABLE
    return qubit_order(cone.cone.cap, bloch_map(s), bloch_map(t), mesh_deg)


def induced_order(lex: LexIsocone, s: SitedPureState, t: SitedPureState, mesh_deg: float = 1.0) -> Relation:
    """Lexicographic order on sited pure states: the poset decides across sites, the local cone within one."""
    for st in (s, t):
        if not 0 <= st.site < lex.sites:
            raise ValueError(f"site {st.site} out of range")
        if st.state.dim != lex.profile[st.site]:
            raise ValueError(f"state of dimension {st.state.dim} at a site of size {lex.profile[st.site]}")
    if s.site != t.site:
        if lex.poset.less(s.site, t.site):
            return Relation.LESS_OR_EQUAL
        if lex.poset.less(t.site, s.site):
            return Relation.GREATER_OR_EQUAL
        return Relation.INCOMPARABLE
    return local_relation(lex.cones[s.site], s.state, t.state, mesh_deg)


class ElementSet(Sequence):
    """List of algebra elements with per-site stacked blocks for fast evaluation."""

    def __init__(self, elements: Sequence[AlgebraElement]):
        self._elements = list(elements)
        if not self._elements:
            raise ValueError("need at least one element")
        nsites = len(self._elements[0].blocks)
        self._stacks = [np.stack([e.blocks[x].entries for e in self._elements]) for x in range(nsites)]

    def __getitem__(self, i):
        return self._elements[i]

    def __len__(self) -> int:
        return len(self._elements)

    def evaluate(self, s: SitedPureState) -> np.ndarray:
        """``xi^dagger a_x xi`` for every element ``a``."""
        v = s.state.amplitudes
        stack = self._stacks[s.site]
        if stack.shape[1] != v.size:
            raise ValueError("state dimension does not match the site")
        return np.real(np.einsum("i,eij,j->e", v.conj(), stack, v))

    def bounds(self, site: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-element ``(min spec, max spec)`` of the blocks at ``site``."""
        b = [e.blocks[site].eigh[0] for e in self._elements]
        return np.array([w[0] for w in b]), np.array([w[-1] for w in b])

    def is_degenerate(self) -> bool:
        """True when every element is a multiple of the identity blockwise and constant across sites."""
        for e in self._elements:
            c = None
            for b in e.blocks:
                d = b.entries
                if not np.allclose(d, d[0, 0].real * np.eye(b.dim), atol=TIE_TOL):
                    return False
                if c is None:
                    c = d[0, 0].real
                elif abs(d[0, 0].real - c) > TIE_TOL:
                    return False
        return True


def _shift_positive(blocks: list[HermitianMatrix]) -> list[HermitianMatrix]:
    m = min(spec_bounds(b)[0] for b in blocks)
    return [b - m for b in blocks]


def witness_element(lex: LexIsocone, blocks: list[HermitianMatrix], g: np.ndarray) -> AlgebraElement:
    """``F' + L g`` with ``F' = F - min spec F`` and ``L = max spec F'``."""
    fp = _shift_positive(blocks)
    lam = max(spec_bounds(b)[1] for b in fp)
    return AlgebraElement(tuple(b + lam * float(gx) for b, gx in zip(fp, g)))


def scaled_witness_element(lex: LexIsocone, blocks: list[HermitianMatrix], g: np.ndarray) -> AlgebraElement:
    """``exp(W g) F'`` with ``F' >= 1`` and ``W = log(max spec F' / min spec F')``."""
    fp = [b + 1.0 for b in _shift_positive(blocks)]
    lo = min(spec_bounds(b)[0] for b in fp)
    hi = max(spec_bounds(b)[1] for b in fp)
    omega = math.log(hi / lo)
    return AlgebraElement(tuple(math.exp(omega * float(gx)) * b for b, gx in zip(fp, g)))


def sample_elements(
    lex: LexIsocone,
    count: int,
    seed: int = 0,
    mesh_deg: float | None = 1.0,
    generators: bool = True,
) -> ElementSet:
    """Deterministic sample of members of ``lex``.

    Contains constants, the Levin utility ``g`` of the poset, ``count``
    random witness elements (additive and multiplicative constructions,
    alternating) and, when ``generators`` is set, one witness element per
    mesh direction of every qubit cap. Qubit directions come from the cap
    mesh at ``mesh_deg`` (continuous uniform sampling if ``None``).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    profile = lex.profile
    g = levin_utility(lex.poset).values.astype(float)
    meshes = {
        x: (c.cone.cap.mesh(mesh_deg) if mesh_deg is not None else None)
        for x, c in enumerate(lex.cones)
        if c.is_qubit
    }
    out = [AlgebraElement.constant(profile, c) for c in (0.0, 1.0, -2.5)]
    out.append(AlgebraElement.from_utility(profile, g))
    for i in range(count):
        blocks = [c.random_block(rng, meshes.get(x)) for x, c in enumerate(lex.cones)]
        if i % 2 == 0:
            out.append(witness_element(lex, blocks, g))
        else:
            out.append(scaled_witness_element(lex, blocks, g))
    if generators:
        for x, mesh in meshes.items():
            if mesh is None:
                continue
            for u in mesh:
                blocks = [HermitianMatrix.identity(n, 0.0) for n in profile]
                blocks[x] = QubitCone.element(u, radial=2.0)
                out.append(witness_element(lex, blocks, g))
    return ElementSet(out)


def empirical_order(elems: Sequence[AlgebraElement], s: SitedPureState, t: SitedPureState, tol: float = TIE_TOL) -> Relation:
    """Order read off from evaluations: ``s <= t`` iff ``s(a) <= t(a)`` for every sampled ``a``."""
    es = elems if isinstance(elems, ElementSet) else ElementSet(elems)
    if es.is_degenerate():
        log.warning("element sample contains only constants; it separates no states")
    vs = es.evaluate(s)
    vt = es.evaluate(t)
    return Relation.from_flags(bool(np.all(vs <= vt + tol)), bool(np.all(vt <= vs + tol)))


@dataclass
class AxiomReport:
    constants: bool = True
    addition_checked: int = 0
    addition_failures: list = field(default_factory=list)
    calculus_checked: int = 0
    calculus_failures: list = field(default_factory=list)
    norm_closure: str = "not checkable on finite samples"

    @property
    def passed(self) -> bool:
        return self.constants and not self.addition_failures and not self.calculus_failures


def isocone_axiom_suite(
    elems: Sequence[AlgebraElement],
    lex: LexIsocone,
    f: IsotoneFunction,
    pairs: int = 100,
    seed: int = 0,
) -> AxiomReport:
    """Closure checks on sampled members: constants, sums of pairs, blockwise isotone calculus."""
    rng = np.random.default_rng(seed)
    report = AxiomReport()
    for c in (-3.0, 0.0, 1.0, 7.5):
        if not lex_membership(AlgebraElement.constant(lex.profile, c), lex):
            report.constants = False
    n = len(elems)
    for _ in range(pairs):
        i, j = rng.integers(n, size=2)
        m = lex_membership(elems[i] + elems[j], lex)
        report.addition_checked += 1
        if not m:
            report.addition_failures.append((int(i), int(j), m.witness))
    for i in rng.choice(n, size=min(n, pairs), replace=False):
        m = lex_membership(elems[i].apply(f), lex)
        report.calculus_checked += 1
        if not m:
            report.calculus_failures.append((int(i), m.witness))
    return report


def strict_gap_check(elems: ElementSet, lex: LexIsocone) -> dict:
    """Per site pair: does every element keep ``max spec(a_x) <= min spec(a_y)``?

    Returns ``{(x, y): all_hold}`` over ordered pairs of distinct sites.
    """
    lows, highs = zip(*(elems.bounds(x) for x in range(lex.sites)))
    out = {}
    for x in range(lex.sites):
        for y in range(lex.sites):
            if x == y:
                continue
            tol = MEMBERSHIP_TOL * (1.0 + np.maximum(np.abs(highs[x]), np.abs(lows[y])))
            out[(x, y)] = bool(np.all(highs[x] <= lows[y] + tol))
    return out
