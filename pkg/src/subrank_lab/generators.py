"""Named tensors and seeded random instances.

Random draws use numpy's ``Generator`` on a ``PCG64`` bit generator, seeded
directly with the caller's integer; identical seeds reproduce identical
tensors bit for bit.
"""

from __future__ import annotations

import numpy as np

from .decomposition import CPDecomposition, reconstruct
from .tensor import COMPLEX, REAL, Tensor3, direct_sum, from_slices

RNG_ALGORITHM = "numpy.random.Generator(PCG64), standard_normal (ziggurat)"

DIVISION_ALGEBRA_DIMS = {"C": 2, "H": 4, "O": 8}


def rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.PCG64(int(seed)))


# Matrices of left multiplication by 1, i, j, k (row = output coordinate),
# with i^2 = j^2 = k^2 = -1 and ij = k.
LEFT_MULT_QUATERNION = np.array([
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 1, 0],
     [0, 0, 0, 1]],
    [[0, -1, 0, 0],
     [1, 0, 0, 0],
     [0, 0, 0, -1],
     [0, 0, 1, 0]],
    [[0, 0, -1, 0],
     [0, 0, 0, 1],
     [1, 0, 0, 0],
     [0, -1, 0, 0]],
    [[0, 0, 0, -1],
     [0, 0, -1, 0],
     [0, 1, 0, 0],
     [1, 0, 0, 0]],
], dtype=float)

# Axis-3 slices of the traceless symmetric 3x3x5 tensor.
_TRACELESS_335_SLICES = np.array([
    [[1, 0, 0], [0, 0, 0], [0, 0, -1]],
    [[0, 0, 0], [0, 1, 0], [0, 0, -1]],
    [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
    [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
    [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
], dtype=float)

# A B C maps with (A (x) B (x) C) quaternion_tensor() = I_2.
QUATERNION_CERTIFICATE = (
    np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=float),
    np.array([[1, 0, 0, 0], [0, 0, 1, 0]], dtype=float),
    np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=float),
)


def quaternion_tensor() -> Tensor3:
    """Structure tensor of quaternion multiplication.

    ``T[a, b, c]`` is the coefficient of ``e_c`` in ``e_a * e_b``, so the
    axis-1 slice ``T[a]`` is the transpose of the matrix of ``L_{e_a}``.
    """
    return Tensor3(np.transpose(LEFT_MULT_QUATERNION, (0, 2, 1)), REAL)


def _quat_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("a,acb,b->c", x, LEFT_MULT_QUATERNION, y)


def _quat_conj(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x[:1], -x[1:]])


def _oct_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Cayley-Dickson: (a, b)(c, d) = (ac - d* b, da + b c*)
    a, b = x[:4], x[4:]
    c, d = y[:4], y[4:]
    return np.concatenate([
        _quat_mul(a, c) - _quat_mul(_quat_conj(d), b),
        _quat_mul(d, a) + _quat_mul(b, _quat_conj(c)),
    ])


def octonion_tensor() -> Tensor3:
    """Octonion structure tensor, same axis convention as :func:`quaternion_tensor`.

    Built by Cayley-Dickson doubling, so ``T[:4, :4, :4]`` is the quaternion tensor.
    """
    eye = np.eye(8)
    data = np.zeros((8, 8, 8))
    for a in range(8):
        for b in range(8):
            data[a, b] = _oct_mul(eye[a], eye[b])
    return Tensor3(data, REAL)


def complex_tensor() -> Tensor3:
    """Real structure tensor of complex multiplication, output on axis 1.

    ``T[c, a, b]`` is the coefficient of ``e_c`` in ``e_a * e_b`` with
    ``e_0 = 1`` and ``e_1 = i``.
    """
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = 1.0
    data[0, 1, 1] = -1.0
    data[1, 0, 1] = 1.0
    data[1, 1, 0] = 1.0
    return Tensor3(data, REAL)


def division_algebra_tensor(D: str, n: int = 1) -> Tensor3:
    """Componentwise multiplication on ``D^n`` as a real tensor.

    The result is the direct sum of ``n`` copies of the single-algebra
    structure tensor, of size ``n * dim(D)`` in every mode.
    """
    if D not in DIVISION_ALGEBRA_DIMS:
        raise ValueError(f"division algebra must be one of C, H, O; got {D!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    single = {"C": complex_tensor, "H": quaternion_tensor, "O": octonion_tensor}[D]()
    out = single
    for _ in range(n - 1):
        out = direct_sum(out, single)
    return out


def complex_mult_tensor(n: int = 1) -> Tensor3:
    return division_algebra_tensor("C", n)


def conjugate_pair_tensor() -> Tensor3:
    """``(e1 + i e2)^3 + (e1 - i e2)^3``: real, complex rank 2, real rank 3."""
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = 2.0
    data[0, 1, 1] = data[1, 0, 1] = data[1, 1, 0] = -2.0
    return Tensor3(data, REAL)


def traceless_symmetric_335() -> Tensor3:
    return from_slices(_TRACELESS_335_SLICES, axis=3, field=REAL)


def random_gaussian(shape, seed: int) -> Tensor3:
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise ValueError(f"shape must be three positive integers, got {shape}")
    return Tensor3(rng(seed).standard_normal(shape), REAL)


def random_rank_r(shape, r: int, seed: int, field: str = REAL):
    """Sum of ``r`` random Gaussian rank-one terms plus its ground truth.

    Complex factors have independent Gaussian real and imaginary parts.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    g = rng(seed)
    factors = []
    for _ in range(r):
        triple = []
        for n in shape:
            vec = g.standard_normal(n)
            if field == COMPLEX:
                vec = vec + 1j * g.standard_normal(n)
            triple.append(vec.astype(np.complex128))
        factors.append(tuple(triple))
    cpd = CPDecomposition(factors, tuple(shape))
    T = reconstruct(cpd)
    if field == REAL:
        T = T.real_part()
    return T, cpd

