"""Dense complex linear algebra on small finite-dimensional Hilbert spaces.

Basis convention: computational basis; tensor products are Kronecker
products in row-major order, so for ``a`` of dim ``d1`` and ``b`` of dim
``d2`` the product basis index is ``i1 * d2 + i2``.

Vectors and operators are immutable wrappers around complex128 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from ._backend import kernels
from .errors import DimensionMismatch, NotHermitian

NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-9
MERGE_TOL = 1e-7


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class StateVector:
    """Complex amplitude vector. Not necessarily normalized; see :meth:`normalize`."""

    __slots__ = ("amps",)

    def __init__(self, amps):
        a = np.array(amps, dtype=np.complex128).reshape(-1)
        if a.size == 0:
            raise ValueError("state vector must have positive dimension")
        if not np.all(np.isfinite(a)):
            raise ValueError("state vector has non-finite amplitudes")
        self.amps = _frozen(a)

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        a = np.zeros(dim, dtype=np.complex128)
        a[index] = 1.0
        return cls(a)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amps / n)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_dims(self.dim, other.dim)
        return StateVector(self.amps + other.amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_dims(self.dim, other.dim)
        return StateVector(self.amps - other.amps)

    def __mul__(self, scalar: complex) -> "StateVector":
        return StateVector(self.amps * scalar)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self.amps, precision=6)})"

    def equal_up_to_phase(self, other: "StateVector", tol: float = 1e-12) -> bool:
        if self.dim != other.dim:
            return False
        ov = np.vdot(other.amps, self.amps)
        if abs(ov) == 0.0:
            return bool(np.max(np.abs(self.amps - other.amps)) <= tol)
        phase = ov / abs(ov)
        return bool(np.max(np.abs(self.amps - phase * other.amps)) <= tol)


class Operator:
    """Square complex matrix.

    ``Operator.diagonal`` stores only the diagonal (number operators on large
    tensor powers need this); ``matrix`` materializes it on demand.
    """

    __slots__ = ("_matrix", "_diag", "__dict__")

    def __init__(self, matrix):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator has non-finite entries")
        self._matrix = _frozen(m)
        self._diag = None

    @classmethod
    def diagonal(cls, values) -> "Operator":
        d = np.array(values, dtype=np.complex128).reshape(-1)
        if d.size == 0 or not np.all(np.isfinite(d)):
            raise ValueError("diagonal must be non-empty and finite")
        op = cls.__new__(cls)
        op._matrix = None
        op._diag = _frozen(d)
        return op

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls.diagonal(np.ones(dim))

    @classmethod
    def projector(cls, v: StateVector) -> "Operator":
        u = v.normalize().amps
        return cls(np.outer(u, u.conj()))

    @property
    def dim(self) -> int:
        return (self._diag if self._diag is not None else self._matrix).shape[0]

    @property
    def is_diagonal_form(self) -> bool:
        return self._diag is not None

    @cached_property
    def matrix(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        return _frozen(np.diag(self._diag))

    @cached_property
    def diag(self) -> np.ndarray:
        if self._diag is not None:
            return self._diag
        return _frozen(np.diagonal(self._matrix).copy())

    def dagger(self) -> "Operator":
        if self._diag is not None:
            return Operator.diagonal(self._diag.conj())
        return Operator(self._matrix.conj().T)

    def hermiticity_error(self) -> float:
        if self._diag is not None:
            return float(np.max(np.abs(self._diag.imag)))
        return float(np.max(np.abs(self._matrix - self._matrix.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    def is_unitary(self, tol: float = HERMITIAN_TOL) -> bool:
        if self._diag is not None:
            return bool(np.max(np.abs(np.abs(self._diag) - 1.0)) <= tol)
        m = self._matrix
        return bool(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))) <= tol)

    def is_offdiagonal_zero(self) -> bool:
        if self._diag is not None:
            return True
        m = self._matrix
        return not np.any(m - np.diag(np.diagonal(m)))

    def _binary(self, other: "Operator", fn) -> "Operator":
        _check_dims(self.dim, other.dim)
        if self._diag is not None and other._diag is not None:
            return Operator.diagonal(fn(self._diag, other._diag))
        return Operator(fn(self.matrix, other.matrix))

    def __add__(self, other: "Operator") -> "Operator":
        return self._binary(other, np.add)

    def __sub__(self, other: "Operator") -> "Operator":
        return self._binary(other, np.subtract)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self._diag is not None and other._diag is not None:
            _check_dims(self.dim, other.dim)
            return Operator.diagonal(self._diag * other._diag)
        return self._binary(other, np.matmul)

    def __mul__(self, scalar: complex) -> "Operator":
        if self._diag is not None:
            return Operator.diagonal(self._diag * scalar)
        return Operator(self._matrix * scalar)

    __rmul__ = __mul__

    def commutes_with(self, other: "Operator", tol: float = HERMITIAN_TOL) -> bool:
        c = (self @ other) - (other @ self)
        return max_abs(c) <= tol

    def __repr__(self) -> str:
        kind = "diagonal" if self._diag is not None else "dense"
        return f"Operator(dim={self.dim}, {kind})"


def max_abs(op: Operator) -> float:
    if op.is_diagonal_form:
        return float(np.max(np.abs(op.diag)))
    return float(np.max(np.abs(op.matrix)))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (strictly increasing) and their eigenprojectors."""

    eigenvalues: tuple
    projectors: tuple

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(zip(self.eigenvalues, self.projectors))

    def reconstruct(self) -> Operator:
        total = self.projectors[0] * self.eigenvalues[0]
        for lam, proj in zip(self.eigenvalues[1:], self.projectors[1:]):
            total = total + proj * lam
        return total


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def inner(bra: StateVector, ket: StateVector) -> complex:
    """<bra|ket>, conjugate-linear in ``bra``."""
    _check_dims(bra.dim, ket.dim)
    return complex(np.vdot(bra.amps, ket.amps))


def apply(op: Operator, v: StateVector) -> StateVector:
    _check_dims(op.dim, v.dim)
    if op.is_diagonal_form:
        return StateVector(op.diag * v.amps)
    return StateVector(op.matrix @ v.amps)


Tensorable = Union[StateVector, Operator]


def tensor(a: Tensorable, b: Tensorable) -> Tensorable:
    """Kronecker product, row-major (index = i_a * dim_b + i_b)."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amps, b.amps))
    if isinstance(a, Operator) and isinstance(b, Operator):
        if a.is_diagonal_form and b.is_diagonal_form:
            return Operator.diagonal(np.kron(a.diag, b.diag))
        return Operator(np.kron(a.matrix, b.matrix))
    raise TypeError("tensor() needs two StateVectors or two Operators")


def tensor_all(items: Sequence[Tensorable]) -> Tensorable:
    out = items[0]
    for item in items[1:]:
        out = tensor(out, item)
    return out


def embed(op: Operator, site: int, dims: Sequence[int]) -> Operator:
    """``op`` acting on tensor factor ``site``, identity elsewhere."""
    factors = [op if i == site else Operator.identity(d) for i, d in enumerate(dims)]
    return tensor_all(factors)


def _group(values: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and values[idx] - values[groups[-1][-1]] <= tol:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def spectral(op: Operator, merge_tol: float = MERGE_TOL) -> SpectralDecomposition:
    """Eigenvalue/projector pairs of a Hermitian operator.

    Eigenvalues closer than ``merge_tol`` share one projector; the reported
    value is the group mean. Operators with no off-diagonal entries skip the
    eigensolver and keep diagonal projectors.
    """
    err = op.hermiticity_error()
    if err > HERMITIAN_TOL:
        raise NotHermitian(f"operator is not Hermitian (max |A - A^dagger| = {err:.3g})")
    if op.is_offdiagonal_zero():
        d = op.diag.real
        vals, projs = [], []
        for g in _group(d, merge_tol):
            mask = np.zeros(op.dim)
            mask[g] = 1.0
            vals.append(float(np.mean(d[g])))
            projs.append(Operator.diagonal(mask))
        return SpectralDecomposition(tuple(vals), tuple(projs))

    m = op.matrix
    w, V = kernels.jacobi_eigh(0.5 * (m + m.conj().T))
    vals, projs = [], []
    for g in _group(w, merge_tol):
        cols = V[:, g]
        vals.append(float(np.mean(w[g])))
        projs.append(Operator(cols @ cols.conj().T))
    return SpectralDecomposition(tuple(vals), tuple(projs))


def random_state(dim: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(v).normalize()


def random_hermitian(dim: int, rng: np.random.Generator) -> Operator:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator(0.5 * (x + x.conj().T))
