"""Complex CP decompositions of concise n x n x n tensors of rank n.

:func:`jennrich` recovers the (essentially unique) decomposition by
simultaneous diagonalization of a random slice pencil, and
:func:`pair_conjugates` groups the rank-one terms of a real tensor's
decomposition into real terms and complex-conjugate pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import (DegenerateEigenvalues, NotConcise, PairingFailed,
                     ResidualTooLarge, ShapeMismatch)
from .tensor import COMPLEX, Tensor3, as_tensor, is_concise, outer3

MAX_PENCIL_DRAWS = 20
EIGEN_GAP_TOL = 1e-6


@dataclass
class CPDecomposition:
    """``T = sum_i u_i (x) v_i (x) w_i`` with complex factor vectors."""

    factors: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]
    shape: Tuple[int, int, int]
    residual: float = float("nan")

    def __post_init__(self):
        self.factors = [tuple(np.asarray(f, dtype=np.complex128) for f in t)
                        for t in self.factors]
        for t in self.factors:
            if tuple(len(f) for f in t) != tuple(self.shape):
                raise ShapeMismatch(
                    f"factor lengths {[len(f) for f in t]} do not match {self.shape}")

    @property
    def rank(self) -> int:
        return len(self.factors)

    def term(self, i: int) -> np.ndarray:
        return outer3(*self.factors[i])

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "shape": list(self.shape),
            "residual": self.residual,
            "factors": [[[[float(z.real), float(z.imag)] for z in f] for f in t]
                        for t in self.factors],
        }


@dataclass
class ConjugatePairing:
    real_indices: List[int] = field(default_factory=list)
    pair_indices: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.real_indices)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.pair_indices)


def reconstruct(cpd: CPDecomposition) -> Tensor3:
    out = np.zeros(cpd.shape, dtype=np.complex128)
    for u, v, w in cpd.factors:
        out += outer3(u, v, w)
    return Tensor3(out, COMPLEX)


def _min_relative_gap(evals: np.ndarray) -> float:
    if evals.size < 2:
        return np.inf
    diff = np.abs(evals[:, None] - evals[None, :])
    diff[np.diag_indices_from(diff)] = np.inf
    return float(diff.min() / max(np.abs(evals).max(), 1e-300))


def jennrich(T, tol: float = 1e-8, seed: int = 0,
             max_draws: int = MAX_PENCIL_DRAWS, gap_tol: float = EIGEN_GAP_TOL,
             rank_tol: float = 1e-8) -> CPDecomposition:
    """Rank-n CP decomposition of a concise n x n x n tensor.

    Two random real combinations ``Sa, Sb`` of the axis-3 slices give
    ``Sa Sb^{-1} = U diag(.) U^{-1}``; the u-factors are its eigenvectors,
    the v-factors are read off the rows of ``U^{-1} Sb`` and the w-factors
    come from a least-squares fit.

    Raises
    ------
    NotConcise
        Some flattening is rank deficient.
    DegenerateEigenvalues
        Every drawn pencil had a relative eigenvalue gap below ``gap_tol``.
    ResidualTooLarge
        No draw reconstructed ``T`` to ``tol * ||T||_F``; ``T`` is not rank n.
    """
    from .generators import rng

    T = as_tensor(T)
    n1, n2, n3 = T.shape
    if not (n1 == n2 == n3):
        raise ShapeMismatch(f"jennrich needs an n x n x n tensor, got {T.shape}")
    n = n1
    if not all(is_concise(T, rank_tol)):
        raise NotConcise(f"flattening ranks are not all {n}")

    X = T.data.astype(np.complex128)
    Xmat = X.reshape(n * n, n)
    norm = max(T.norm(), 1e-300)
    g = rng(seed)
    best = None
    saw_gap = False
    for _ in range(max_draws):
        a = g.standard_normal(n)
        b = g.standard_normal(n)
        Sa = X @ a
        Sb = X @ b
        if np.linalg.cond(Sb) > 1e12:
            continue
        evals, U = np.linalg.eig(Sa @ np.linalg.inv(Sb))
        if _min_relative_gap(evals) < gap_tol:
            continue
        saw_gap = True
        # U^{-1} Sb = diag(<w_i, b>) V^T
        V = np.linalg.solve(U, Sb).T
        U = U / np.linalg.norm(U, axis=0)
        V = V / np.linalg.norm(V, axis=0)
        K = np.einsum("il,jl->ijl", U, V).reshape(n * n, n)
        W = np.linalg.lstsq(K, Xmat, rcond=None)[0].T
        approx = K @ W.T
        residual = float(np.linalg.norm(approx - Xmat) / norm)
        if best is None or residual < best[0]:
            best = (residual, U, V, W)
        if residual <= tol:
            break
    if not saw_gap:
        raise DegenerateEigenvalues(
            f"no pencil with relative eigenvalue gap >= {gap_tol} in {max_draws} draws")
    residual, U, V, W = best
    if residual > tol:
        raise ResidualTooLarge(f"relative residual {residual:.3e} exceeds {tol:.1e}")
    factors = [(U[:, i], V[:, i], W[:, i]) for i in range(n)]
    return CPDecomposition(factors, T.shape, residual)


def _normalized_terms(cpd: CPDecomposition) -> np.ndarray:
    terms = np.array([cpd.term(i).reshape(-1) for i in range(cpd.rank)])
    norms = np.linalg.norm(terms, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise PairingFailed("decomposition has a zero rank-one term")
    return terms / norms


def pair_conjugates(cpd: CPDecomposition, tol: float = 1e-6) -> ConjugatePairing:
    """Split rank-one terms into real ones and complex-conjugate pairs.

    Terms are compared after normalizing to unit Frobenius norm, so the
    arbitrary per-term phase of the factors does not matter: a unit term X is
    real up to phase iff ``|sum X**2| = 1``, and X_j is a phase multiple of
    ``conj(X_i)`` iff ``|sum X_i X_j| = 1``.
    """
    if cpd.rank:
        total = reconstruct(cpd).data
        if np.abs(total.imag).max() > tol * max(np.abs(total).max(), 1.0):
            raise PairingFailed("decomposition does not sum to a real tensor")
    X = _normalized_terms(cpd) if cpd.rank else np.zeros((0, 1))
    score = np.abs(X @ X.T)
    pairing = ConjugatePairing()
    taken = set()
    for i in range(cpd.rank):
        if i in taken:
            continue
        if score[i, i] >= 1.0 - tol:
            pairing.real_indices.append(i)
            taken.add(i)
            continue
        candidates = [j for j in range(cpd.rank) if j != i and j not in taken]
        if candidates:
            j = max(candidates, key=lambda c: score[i, c])
            if score[i, j] >= 1.0 - tol:
                pairing.pair_indices.append((i, j))
                taken.update((i, j))
                continue
        raise PairingFailed(
            f"term {i} matches neither itself nor a partner under conjugation")
    assert pairing.m + 2 * pairing.l == cpd.rank
    return pairing


def real_factors(u, v, w):
    """Rotate a rank-one triple whose outer product is real into real factors."""
    out = []
    for f in (u, v, w):
        f = np.asarray(f, dtype=np.complex128)
        k = int(np.argmax(np.abs(f)))
        out.append(f * (np.conj(f[k]) / abs(f[k])))
    # the leftover scalar is real (the term is real); fold it into w
    term = outer3(u, v, w)
    rebuilt = outer3(*out)
    k = np.unravel_index(np.argmax(np.abs(rebuilt)), rebuilt.shape)
    scale = term[k] / rebuilt[k]
    out[2] = out[2] * scale
    return tuple(np.real(f) for f in out)
