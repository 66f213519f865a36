"""Dense order-3 tensors over the real or complex numbers.

A :class:`Tensor3` wraps a read-only ``(n1, n2, n3)`` numpy array together
with a field tag. Linear maps are plain 2-D numpy arrays (rows x cols); a map
``A`` acting on mode ``m`` of ``T`` must have ``A.shape[1] == T.shape[m]``.

All functions are pure; nothing here mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import ShapeMismatch

REAL = "real"
COMPLEX = "complex"
FIELDS = (REAL, COMPLEX)

DEFAULT_RANK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Dense order-3 tensor.

    ``data`` is stored in C (row-major) order, so the flat position of entry
    ``(i, j, k)`` is ``(i * n2 + j) * n3 + k``.
    """

    data: np.ndarray
    field: str = REAL

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")
        arr = np.asarray(self.data)
        if arr.ndim != 3:
            raise ShapeMismatch(f"expected an order-3 array, got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ShapeMismatch(f"all dimensions must be positive, got {arr.shape}")
        if self.field == REAL:
            if np.iscomplexobj(arr):
                if np.any(arr.imag != 0):
                    raise ValueError("real tensor has nonzero imaginary parts")
                arr = arr.real
            arr = np.array(arr, dtype=np.float64, order="C")
        else:
            arr = np.array(arr, dtype=np.complex128, order="C")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    @property
    def is_real(self) -> bool:
        return self.field == REAL

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))

    def to_complex(self) -> "Tensor3":
        return self if self.field == COMPLEX else Tensor3(self.data, COMPLEX)

    def real_part(self, tol: float = 0.0) -> "Tensor3":
        """Drop the imaginary part, refusing if it exceeds ``tol`` entrywise."""
        if self.is_real:
            return self
        if np.max(np.abs(self.data.imag), initial=0.0) > tol:
            raise ValueError("imaginary part exceeds tolerance")
        return Tensor3(self.data.real, REAL)

    def __eq__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        return (self.field == other.field and self.shape == other.shape
                and bool(np.array_equal(self.data, other.data)))

    def __add__(self, other: "Tensor3") -> "Tensor3":
        other = as_tensor(other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")
        return Tensor3(self.data + other.data, _join(self.field, other.field))

    def __sub__(self, other: "Tensor3") -> "Tensor3":
        other = as_tensor(other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")
        return Tensor3(self.data - other.data, _join(self.field, other.field))

    def __repr__(self):
        return f"Tensor3(shape={self.shape}, field={self.field!r})"


TensorLike = Union[Tensor3, np.ndarray, Sequence]


def _join(*fields: str) -> str:
    return COMPLEX if COMPLEX in fields else REAL


def as_tensor(x: TensorLike) -> Tensor3:
    if isinstance(x, Tensor3):
        return x
    arr = np.asarray(x)
    return Tensor3(arr, COMPLEX if np.iscomplexobj(arr) else REAL)


def unit_tensor(r: int, field: str = REAL) -> Tensor3:
    """The r x r x r tensor with ones on the main diagonal."""
    if r < 1:
        raise ValueError(f"unit tensor size must be >= 1, got {r}")
    data = np.zeros((r, r, r))
    idx = np.arange(r)
    data[idx, idx, idx] = 1.0
    return Tensor3(data, field)


def unit_array(r: int) -> np.ndarray:
    """Like :func:`unit_tensor` but as a bare array, and allowing ``r == 0``."""
    data = np.zeros((r, r, r))
    idx = np.arange(r)
    data[idx, idx, idx] = 1.0
    return data


def outer3(u, v, w) -> np.ndarray:
    return np.einsum("i,j,k->ijk", np.asarray(u), np.asarray(v), np.asarray(w))


def _check_map(m: np.ndarray, n: int, mode: int):
    if m.ndim != 2 or m.shape[1] != n:
        raise ShapeMismatch(
            f"map on mode {mode} has shape {m.shape}, needs {n} columns")


def mode_transform_array(data: np.ndarray, A, B, C) -> np.ndarray:
    """Array-level version of :func:`mode_transform` (no field bookkeeping)."""
    A, B, C = np.asarray(A), np.asarray(B), np.asarray(C)
    n1, n2, n3 = data.shape
    _check_map(A, n1, 1)
    _check_map(B, n2, 2)
    _check_map(C, n3, 3)
    out = np.tensordot(A, data, axes=(1, 0))
    out = np.tensordot(out, B, axes=(1, 1))
    out = np.tensordot(out, C, axes=(1, 1))
    return out


def mode_transform(T: TensorLike, A, B, C) -> Tensor3:
    """Apply ``A (x) B (x) C`` to ``T``.

    ``S[a, b, c] = sum_{i,j,k} A[a, i] B[b, j] C[c, k] T[i, j, k]``. Real maps
    acting on complex tensors (or vice versa) promote the result to complex.
    """
    T = as_tensor(T)
    out = mode_transform_array(T.data, A, B, C)
    fields = [T.field] + [COMPLEX if np.iscomplexobj(m) else REAL for m in (A, B, C)]
    field = _join(*fields)
    if field == REAL and np.iscomplexobj(out):
        out = out.real
    return Tensor3(out, field)


def _check_axis(axis: int):
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")


def slices(T: TensorLike, axis: int) -> list:
    """Slices of ``T`` along ``axis`` (1-based), as a list of matrices.

    For ``axis == 1`` matrix ``i`` has entries ``T[i, j, k]`` indexed ``(j, k)``;
    axes 2 and 3 keep the remaining two indices in their original order.
    """
    _check_axis(axis)
    T = as_tensor(T)
    return [np.array(m) for m in np.moveaxis(T.data, axis - 1, 0)]


def from_slices(mats, axis: int, field: str | None = None) -> Tensor3:
    """Inverse of :func:`slices`."""
    _check_axis(axis)
    stack = np.stack([np.asarray(m) for m in mats])
    data = np.moveaxis(stack, 0, axis - 1)
    if field is None:
        field = COMPLEX if np.iscomplexobj(data) else REAL
    return Tensor3(data, field)


def unfold(T: TensorLike, axis: int) -> np.ndarray:
    """The ``n_axis x (product of the other two)`` flattening."""
    _check_axis(axis)
    T = as_tensor(T)
    d = np.moveaxis(T.data, axis - 1, 0)
    return d.reshape(d.shape[0], -1)


def numerical_rank(M: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> int:
    """Count of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def flattening_rank(T: TensorLike, axis: int, tol: float = DEFAULT_RANK_TOL) -> int:
    return numerical_rank(unfold(T, axis), tol)


def is_concise(T: TensorLike, tol: float = DEFAULT_RANK_TOL) -> Tuple[bool, bool, bool]:
    T = as_tensor(T)
    return tuple(flattening_rank(T, a, tol) == T.shape[a - 1] for a in (1, 2, 3))


def direct_sum(T: TensorLike, S: TensorLike) -> Tensor3:
    """Block-diagonal sum: ``T`` in the leading block, ``S`` in the trailing one."""
    T, S = as_tensor(T), as_tensor(S)
    if T.field != S.field:
        raise ValueError("direct_sum needs tensors over the same field")
    n1, n2, n3 = T.shape
    m1, m2, m3 = S.shape
    dtype = np.result_type(T.data, S.data)
    out = np.zeros((n1 + m1, n2 + m2, n3 + m3), dtype=dtype)
    out[:n1, :n2, :n3] = T.data
    out[n1:, n2:, n3:] = S.data
    return Tensor3(out, T.field)


def block_diag(*maps) -> np.ndarray:
    """Block-diagonal matrix of the given (possibly empty) 2-D maps."""
    maps = [np.atleast_2d(np.asarray(m)) for m in maps]
    rows = sum(m.shape[0] for m in maps)
    cols = sum(m.shape[1] for m in maps)
    dtype = np.result_type(*maps) if maps else np.float64
    out = np.zeros((rows, cols), dtype=dtype)
    r = c = 0
    for m in maps:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out
