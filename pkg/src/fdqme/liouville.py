"""Superoperator algebra on a finite Hilbert space.

Operators on an N-dimensional Hilbert space are flattened into length-N^2
vectors so that superoperators become dense N^2 x N^2 matrices.  The element
order is row-stacked: (O_11, ..., O_1N, O_21, ..., O_NN).  For a qubit in the
basis (g, e) this is (gg, ge, eg, ee), which makes the free-evolution
Liouvillian of ``-(w/2) sigma_z`` the diagonal matrix (0, iw, -iw, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

__all__ = [
    "HilbertOperator",
    "VectorizedOperator",
    "LiouvilleOperator",
    "VECTORIZATION_ORDER",
    "vectorize",
    "devectorize",
    "hs_inner",
    "left_multiplier",
    "right_multiplier",
    "commutator_superop",
    "lindblad_dissipator",
    "squeeze_dissipator",
    "frame_transform",
    "trace_dual",
    "annihilation",
    "SIGMA_Z",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "qubit_state",
]

VECTORIZATION_ORDER = "row-major"

HERMITICITY_TOL = 1e-12

# Qubit basis order is (g, e); sigma_z has +1 on the ground state so that
# H = -(w/2) sigma_z puts the excited state w above the ground state.
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T


def _as_square(entries) -> np.ndarray:
    arr = np.asarray(entries, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class HilbertOperator:
    """Dense operator on an N-dimensional Hilbert space.

    When ``hermitian`` is set the entries are checked against the conjugate
    transpose at construction time.
    """

    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        arr = _as_square(self.entries)
        object.__setattr__(self, "entries", arr)
        if self.hermitian:
            dev = np.abs(arr - arr.conj().T).max()
            if dev > HERMITICITY_TOL:
                raise ValueError(f"operator flagged hermitian deviates by {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class VectorizedOperator:
    """Operator flattened to a length-N^2 vector in row-stacked order."""

    vec: np.ndarray
    ordering: str = field(default=VECTORIZATION_ORDER)

    def __post_init__(self):
        arr = np.asarray(self.vec, dtype=complex).reshape(-1)
        n = np.sqrt(arr.size)
        if int(round(n)) ** 2 != arr.size:
            raise ValueError(f"vector length {arr.size} is not a perfect square")
        if self.ordering != VECTORIZATION_ORDER:
            raise ValueError(f"unsupported element order {self.ordering!r}")
        object.__setattr__(self, "vec", arr)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.vec.size)))

    def matrix(self) -> np.ndarray:
        d = self.dim
        return self.vec.reshape(d, d)


@dataclass(frozen=True)
class LiouvilleOperator:
    """Superoperator as a dense N^2 x N^2 matrix on vectorized operators."""

    mat: np.ndarray

    def __post_init__(self):
        arr = _as_square(self.mat)
        n = np.sqrt(arr.shape[0])
        if int(round(n)) ** 2 != arr.shape[0]:
            raise ValueError(f"matrix side {arr.shape[0]} is not a perfect square")
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.mat.shape[0])))


def _entries(op) -> np.ndarray:
    if isinstance(op, HilbertOperator):
        return op.entries
    return _as_square(op)


def _matrep(superop) -> np.ndarray:
    if isinstance(superop, LiouvilleOperator):
        return superop.mat
    return _as_square(superop)


def vectorize(op) -> VectorizedOperator:
    """Flatten an operator into its row-stacked Liouville-space vector."""
    return VectorizedOperator(_entries(op).reshape(-1))


def devectorize(v) -> HilbertOperator:
    """Inverse of :func:`vectorize`; exact round trip."""
    if isinstance(v, VectorizedOperator):
        return HilbertOperator(v.matrix())
    return HilbertOperator(VectorizedOperator(np.asarray(v)).matrix())


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr[a^dag b]."""
    am, bm = _entries(a), _entries(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return complex(np.vdot(am.reshape(-1), bm.reshape(-1)))


def left_multiplier(a) -> np.ndarray:
    """Matrix of X -> a X in the row-stacked convention."""
    am = _entries(a)
    return np.kron(am, np.eye(am.shape[0], dtype=complex))


def right_multiplier(b) -> np.ndarray:
    """Matrix of X -> X b in the row-stacked convention."""
    bm = _entries(b)
    return np.kron(np.eye(bm.shape[0], dtype=complex), bm.T)


def commutator_superop(h, require_hermitian: bool = True) -> LiouvilleOperator:
    """Matrix of -i[h, .]; purely imaginary spectrum for Hermitian h."""
    hm = _entries(h)
    if require_hermitian:
        dev = np.abs(hm - hm.conj().T).max()
        if dev > HERMITICITY_TOL:
            raise ValueError(f"commutator generator is not Hermitian (deviation {dev:.3e})")
    return LiouvilleOperator(-1j * (left_multiplier(hm) - right_multiplier(hm)))


def lindblad_dissipator(o) -> LiouvilleOperator:
    """Matrix of the dissipator X -> 2 o X o^dag - o^dag o X - X o^dag o."""
    om = _entries(o)
    od = om.conj().T
    n = om.shape[0]
    eye = np.eye(n, dtype=complex)
    mat = (
        2.0 * np.kron(om, od.T)
        - np.kron(od @ om, eye)
        - np.kron(eye, (od @ om).T)
    )
    return LiouvilleOperator(mat)


def squeeze_dissipator(o) -> LiouvilleOperator:
    """Matrix of the two-photon-type term X -> 2 o X o - o^2 X - X o^2.

    Unlike the Lindblad form this couples opposite coherences; its action is
    traceless for any input, so it never breaks trace preservation.
    """
    om = _entries(o)
    n = om.shape[0]
    eye = np.eye(n, dtype=complex)
    o2 = om @ om
    mat = 2.0 * np.kron(om, om.T) - np.kron(o2, eye) - np.kron(eye, o2.T)
    return LiouvilleOperator(mat)


def frame_transform(l, l0, t: float) -> LiouvilleOperator:
    """Conjugate a superoperator into the frame generated by l0.

    Returns exp(-l0 t) l exp(l0 t); with l0 the free Liouvillian this is the
    interaction-picture version of l at time t.
    """
    lm, l0m = _matrep(l), _matrep(l0)
    if lm.shape != l0m.shape:
        raise ValueError(f"dimension mismatch: {lm.shape} vs {l0m.shape}")
    return LiouvilleOperator(expm(-l0m * t) @ lm @ expm(l0m * t))


def trace_dual(dim: int) -> np.ndarray:
    """Row vector <<I| such that trace_dual(d) @ vec(X) = Tr[X]."""
    return np.eye(dim, dtype=complex).reshape(-1)


def annihilation(n: int) -> np.ndarray:
    """Bosonic lowering operator truncated to an n-level Fock space."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def qubit_state(name: str) -> np.ndarray:
    """Common qubit density matrices, as 2x2 arrays in the (g, e) basis.

    Accepts 'g', 'e', 'x+', 'x-', 'y+', 'y-', and 'mixed'.
    """
    if name == "g":
        return np.diag([1.0, 0.0]).astype(complex)
    if name == "e":
        return np.diag([0.0, 1.0]).astype(complex)
    if name == "mixed":
        return np.eye(2, dtype=complex) / 2.0
    axis = {"x+": (1.0, 1.0), "x-": (1.0, -1.0), "y+": (1.0, 1.0j), "y-": (1.0, -1.0j)}
    if name not in axis:
        raise ValueError(f"unknown qubit state {name!r}")
    a, b = axis[name]
    v = np.array([a, b], dtype=complex) / np.sqrt(2.0)
    return np.outer(v, v.conj())
