"""Small dense Hermitian matrices: spectra, isotone functional calculus, pure states.

Eigen-decompositions use cyclic complex Jacobi rotations. The matrices
met in this package are at most a few rows wide, where Jacobi is exact
enough and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-12
NORM_TOL = 1e-12
JACOBI_TOL = 1e-12
MAX_JACOBI_DIM = 16


class NotHermitianError(ValueError):
    pass


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as columns.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on (p, q)
                jpp, jpq = c, s
                jqp, jqq = -s * np.conj(phase), c * np.conj(phase)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p * jpp + col_q * jqp
                a[:, q] = col_p * jpq + col_q * jqq
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = np.conj(jpp) * row_p + np.conj(jqp) * row_q
                a[q, :] = np.conj(jpq) * row_p + np.conj(jqq) * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * jpp + vq * jqp
                v[:, q] = vp * jpq + vq * jqq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Immutable Hermitian matrix, symmetrized on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        asym = float(np.max(np.abs(a - a.conj().T)))
        if asym > SYMMETRY_TOL:
            raise NotHermitianError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> HermitianMatrix:
        return cls(scale * np.eye(n))

    @classmethod
    def diag(cls, values: Sequence[float]) -> HermitianMatrix:
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianMatrix:
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return cls(scale * 0.5 * (x + x.conj().T))

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if self.dim > MAX_JACOBI_DIM:
            raise ValueError(f"Jacobi solver limited to dim <= {MAX_JACOBI_DIM}")
        return jacobi_eigh(self.entries)

    def __add__(self, other):
        if isinstance(other, HermitianMatrix):
            return HermitianMatrix(self.entries + other.entries)
        return HermitianMatrix(self.entries + float(other) * np.eye(self.dim))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, HermitianMatrix):
            return HermitianMatrix(self.entries - other.entries)
        return HermitianMatrix(self.entries - float(other) * np.eye(self.dim))

    def __mul__(self, scalar: float) -> HermitianMatrix:
        return HermitianMatrix(float(scalar) * self.entries)

    __rmul__ = __mul__

    def allclose(self, other: HermitianMatrix, atol: float = 1e-9) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.entries, other.entries, atol=atol, rtol=0))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> HermitianMatrix:
        a = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data.get("im", np.zeros_like(data["re"])), dtype=float)
        if a.shape != (data["dim"], data["dim"]):
            raise ValueError(f"declared dim {data['dim']} does not match entries {a.shape}")
        return cls(a)


@dataclass(frozen=True, eq=False)
class PureStateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.size < 1:
            raise ValueError("empty state vector")
        norm = float(np.sum(np.abs(v) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector not normalized (|v|^2 = {norm!r})")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def normalized(cls, amplitudes) -> PureStateVector:
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> PureStateVector:
        return cls.normalized(rng.normal(size=n) + 1j * rng.normal(size=n))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class IsotoneFunction:
    """Continuous piecewise-linear non-decreasing map of the real line.

    Outside ``[breakpoints[0], breakpoints[-1]]`` the function continues
    linearly with ``left_slope`` and ``right_slope``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    left_slope: float = 0.0
    right_slope: float = 0.0

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        v = tuple(float(x) for x in self.values)
        if len(b) < 1 or len(b) != len(v):
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(v1 < v0 for v0, v1 in zip(v, v[1:])):
            raise ValueError("function is not isotone: values decrease")
        if self.left_slope < 0 or self.right_slope < 0:
            raise ValueError("function is not isotone: negative end slope")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls) -> IsotoneFunction:
        return cls((0.0, 1.0), (0.0, 1.0), 1.0, 1.0)

    @classmethod
    def affine(cls, slope: float, intercept: float) -> IsotoneFunction:
        return cls((0.0, 1.0), (intercept, intercept + slope), slope, slope)

    @classmethod
    def clip_below(cls, floor: float = 0.0) -> IsotoneFunction:
        return cls((floor, floor + 1.0), (floor, floor + 1.0), 0.0, 1.0)

    @classmethod
    def random(cls, rng: np.random.Generator, knots: int = 5, span: float = 5.0) -> IsotoneFunction:
        b = np.sort(rng.uniform(-span, span, size=knots))
        b = np.unique(b)
        v = np.cumsum(rng.exponential(1.0, size=b.size) * (rng.random(b.size) < 0.8))
        v = v + rng.normal()
        return cls(tuple(b), tuple(v), float(rng.exponential(1.0)), float(rng.exponential(1.0)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        out = np.interp(t, b, v)
        out = np.where(t < b[0], v[0] + self.left_slope * (t - b[0]), out)
        out = np.where(t > b[-1], v[-1] + self.right_slope * (t - b[-1]), out)
        return out if out.ndim else float(out)


def spectrum(h: HermitianMatrix) -> np.ndarray:
    """Eigenvalues of ``h`` in ascending order."""
    return h.eigh[0].copy()


def spec_bounds(h: HermitianMatrix) -> tuple[float, float]:
    w = h.eigh[0]
    return float(w[0]), float(w[-1])


def apply_isotone(h: HermitianMatrix, f: IsotoneFunction) -> HermitianMatrix:
    """Functional calculus ``f(h)``: same eigenvectors, eigenvalues mapped by ``f``."""
    if not isinstance(f, IsotoneFunction):
        raise TypeError("apply_isotone requires an IsotoneFunction")
    w, q = h.eigh
    fw = np.asarray(f(w), dtype=float)
    return HermitianMatrix((q * fw) @ q.conj().T)


def pure_state_eval(h: HermitianMatrix, xi: PureStateVector) -> float:
    """Expectation value ``xi^dagger h xi``."""
    if h.dim != xi.dim:
        raise ValueError(f"dimension mismatch: matrix {h.dim}, state {xi.dim}")
    a = xi.amplitudes
    return float(np.real(np.vdot(a, h.entries @ a)))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
