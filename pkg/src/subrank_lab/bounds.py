"""Upper bounds, classifiers and obstructions for the subrank."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .errors import ShapeMismatch
from .tensor import as_tensor, flattening_rank, slices

BOUNDARY_BAND = 1e-10
INFINITE = math.inf


def hyperdeterminant_array(data: np.ndarray) -> np.ndarray:
    """Cayley hyperdeterminant of a stack of 2 x 2 x 2 arrays (shape ``(..., 2, 2, 2)``).

    Plain float evaluation: fine for signs away from the boundary band, not
    for relative accuracy near ``Delta = 0``.
    """
    t = np.asarray(data)
    if t.shape[-3:] != (2, 2, 2):
        raise ShapeMismatch(f"hyperdeterminant needs 2 x 2 x 2 input, got {t.shape}")
    t000, t001 = t[..., 0, 0, 0], t[..., 0, 0, 1]
    t010, t011 = t[..., 0, 1, 0], t[..., 0, 1, 1]
    t100, t101 = t[..., 1, 0, 0], t[..., 1, 0, 1]
    t110, t111 = t[..., 1, 1, 0], t[..., 1, 1, 1]
    return (t000**2 * t111**2 + t001**2 * t110**2
            + t010**2 * t101**2 + t100**2 * t011**2
            - 2 * (t000 * t001 * t110 * t111 + t000 * t010 * t101 * t111
                   + t000 * t011 * t100 * t111 + t001 * t010 * t101 * t110
                   + t001 * t011 * t100 * t110 + t010 * t011 * t100 * t101)
            + 4 * (t000 * t011 * t101 * t110 + t001 * t010 * t100 * t111))


def hyperdeterminant(T) -> float:
    """Hyperdeterminant of one real 2 x 2 x 2 tensor, correctly rounded.

    The polynomial cancels badly near ``Delta = 0`` (terms of size
    ``||T||^4`` summing to something far smaller), so it is evaluated exactly
    on the rational values of the float entries and rounded once.
    """
    T = as_tensor(T)
    if T.shape != (2, 2, 2):
        raise ShapeMismatch(f"hyperdeterminant needs a 2 x 2 x 2 tensor, got {T.shape}")
    if not T.is_real:
        raise ValueError("hyperdeterminant classification is for real tensors")
    if not np.all(np.isfinite(T.data)):
        return float(hyperdeterminant_array(T.data))
    exact = np.array([Fraction(float(x)) for x in T.data.reshape(-1)], dtype=object)
    return float(hyperdeterminant_array(exact.reshape(2, 2, 2)))


class Verdict(str, Enum):
    SUBRANK_2 = "subrank 2"
    SUBRANK_1 = "subrank <= 1"
    BOUNDARY = "boundary"


def classify_222(T, band: float = BOUNDARY_BAND) -> Verdict:
    """Subrank of a real 2 x 2 x 2 tensor from the sign of its hyperdeterminant.

    ``|Delta| <= band * ||T||_F^4`` is reported as :attr:`Verdict.BOUNDARY`.
    """
    T = as_tensor(T)
    delta = hyperdeterminant(T)
    if abs(delta) <= band * T.norm() ** 4:
        return Verdict.BOUNDARY
    return Verdict.SUBRANK_2 if delta > 0 else Verdict.SUBRANK_1


def generic_subrank(n1: int, n2: int, n3: int) -> int:
    """``min(floor(sqrt(n1 + n2 + n3 - 2)), n1, n2, n3)``."""
    if min(n1, n2, n3) < 1:
        raise ValueError("dimensions must be positive")
    return min(math.isqrt(n1 + n2 + n3 - 2), n1, n2, n3)


def pencil_rank_one_count(M1, M2, tol: float = 1e-12):
    """Number of rank-one points on the projective line spanned by two 2 x 2 matrices.

    Returns 0, 1, 2 or :data:`INFINITE` (determinant vanishing on the whole
    pencil). Uses the binary quadratic ``det(x M1 + y M2) = a x^2 + b xy + c y^2``.
    """
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    if M1.shape != (2, 2) or M2.shape != (2, 2):
        raise ShapeMismatch("pencil_rank_one_count needs 2 x 2 matrices")
    scale = float(np.sum(M1**2) + np.sum(M2**2))
    if scale == 0.0:
        raise ValueError("M1 and M2 are both zero")
    stacked = np.stack([M1.reshape(-1), M2.reshape(-1)])
    sv = np.linalg.svd(stacked, compute_uv=False)
    if sv[1] <= tol * sv[0]:
        # the pencil is a single projective point
        M = M1 if np.sum(M1**2) >= np.sum(M2**2) else M2
        return 1 if abs(np.linalg.det(M)) <= tol * np.sum(M**2) else 0
    a = M1[0, 0] * M1[1, 1] - M1[0, 1] * M1[1, 0]
    c = M2[0, 0] * M2[1, 1] - M2[0, 1] * M2[1, 0]
    b = (M1[0, 0] * M2[1, 1] + M2[0, 0] * M1[1, 1]
         - M1[0, 1] * M2[1, 0] - M2[0, 1] * M1[1, 0])
    if max(abs(a), abs(b), abs(c)) <= tol * scale:
        return INFINITE
    disc = b * b - 4 * a * c
    if abs(disc) <= tol * scale**2:
        roots = 1
    elif disc > 0:
        roots = 2
    else:
        return 0
    # independence already excludes zero matrices on the pencil; check anyway
    if a == 0 and c == 0:
        # x y = 0: the roots are the two generators themselves
        points = [M1, M2]
    elif abs(a) >= abs(c):
        ts = np.roots([a, b, c]) if roots == 2 else [-b / (2 * a)]
        points = [t * M1 + M2 for t in np.real(ts)]
    else:
        ts = np.roots([c, b, a]) if roots == 2 else [-b / (2 * c)]
        points = [M1 + t * M2 for t in np.real(ts)]
    return sum(1 for P in points if np.linalg.norm(P) > tol * math.sqrt(scale))


def traceless_symmetric_obstruction(mats: Sequence, tol: float = 1e-8) -> bool:
    """True iff every matrix is symmetric and traceless within ``tol``.

    A nonzero real symmetric traceless matrix has real eigenvalues summing to
    zero, hence rank >= 2, so the span then holds no rank-one matrix.
    """
    mats = [np.asarray(m, dtype=float) for m in mats]
    if not mats:
        return False
    n = mats[0].shape
    if len(n) != 2 or n[0] != n[1] or any(m.shape != n for m in mats):
        raise ShapeMismatch("need square matrices of equal size")
    for m in mats:
        s = tol * max(1.0, float(np.linalg.norm(m)))
        if np.linalg.norm(m - m.T) > s or abs(np.trace(m)) > s:
            return False
    return True


def nonsingular_span_probe(mats: Sequence, samples: int = 10_000, seed: int = 0) -> float:
    """Smallest observed ``sigma_min(sum c_i M_i)`` over random unit vectors ``c``.

    A value bounded away from zero is numerical evidence (not proof) that
    every nonzero matrix in the span is invertible.
    """
    from .generators import rng

    stack = np.array([np.asarray(m, dtype=float) for m in mats])
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ShapeMismatch("need square matrices of equal size")
    c = rng(seed).standard_normal((samples, stack.shape[0]))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    combos = np.tensordot(c, stack, axes=(1, 0))
    return float(np.linalg.svd(combos, compute_uv=False)[:, -1].min())


def relation_defect(f, u: Sequence, v: Sequence, tol: float = 1e-9) -> int:
    """``dim pi(R)`` for the relation space among the products ``f(u_i, v_j)``.

    ``f`` is read as the bilinear map ``(x, y) -> sum T[i, j, :] x_i y_j``.
    The kernel basis from the SVD is orthonormal, so the rank of its diagonal
    rows is taken with the absolute threshold ``tol``.
    """
    T = as_tensor(f)
    U = np.atleast_2d(np.asarray(u, dtype=float))
    V = np.atleast_2d(np.asarray(v, dtype=float))
    r = U.shape[0]
    if V.shape[0] != r or U.shape[1] != T.shape[0] or V.shape[1] != T.shape[1]:
        raise ShapeMismatch("u, v must be r vectors matching the first two modes")
    # products[k, i, j] = f(u_i, v_j)_k
    products = np.einsum("abk,ia,jb->kij", T.data, U, V).reshape(T.shape[2], r * r)
    _, s, vh = np.linalg.svd(products)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    kernel = vh[rank:]
    if kernel.shape[0] == 0:
        return 0
    diag = kernel[:, np.arange(r) * (r + 1)]
    sv = np.linalg.svd(diag, compute_uv=False)
    return int(np.sum(sv > tol))


@dataclass
class Obstruction:
    kind: str
    axis: int
    holds: bool
    implied_bound: Optional[int]
    certified: bool
    detail: str
    value: Optional[float] = None


@dataclass
class BoundReport:
    shape: tuple
    flattening_ranks: tuple
    min_dimension: int
    generic_subrank: int
    best_upper_bound: int
    hyperdeterminant: Optional[float] = None
    classification: Optional[str] = None
    obstructions: List[Obstruction] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def obstruction_bound(self) -> Optional[int]:
        """Smallest bound implied by a certified obstruction, if any."""
        vals = [o.implied_bound for o in self.obstructions
                if o.holds and o.certified and o.implied_bound is not None]
        return min(vals) if vals else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = list(self.shape)
        d["flattening_ranks"] = list(self.flattening_ranks)
        d["obstruction_bound"] = self.obstruction_bound
        return d


def bound_report(T, tol: float = 1e-8, probe_samples: int = 2000, seed: int = 0) -> BoundReport:
    """Collect every applicable upper bound on ``Q(T)``.

    ``best_upper_bound`` is the minimum of the dimension bound, the flattening
    ranks and (for 2 x 2 x 2) the hyperdeterminant verdict. Slice-span
    obstructions are attached as findings with the bound they imply.
    """
    T = as_tensor(T)
    ranks = tuple(flattening_rank(T, a, tol) for a in (1, 2, 3))
    min_dim = min(T.shape)
    bounds = [min_dim, *ranks]
    report = BoundReport(shape=T.shape, flattening_ranks=ranks, min_dimension=min_dim,
                         generic_subrank=generic_subrank(*T.shape), best_upper_bound=0)
    if T.shape == (2, 2, 2) and T.is_real:
        report.hyperdeterminant = hyperdeterminant(T)
        verdict = classify_222(T)
        report.classification = verdict.value
        if verdict is Verdict.SUBRANK_1:
            bounds.append(1)
            report.notes.append("Delta < 0: real rank 3, so subrank <= 1")
        elif verdict is Verdict.SUBRANK_2:
            report.notes.append("Delta > 0: real rank 2 and concise, so subrank = 2")
    if T.is_real:
        for axis in (1, 2, 3):
            others = [T.shape[a - 1] for a in (1, 2, 3) if a != axis]
            if others[0] != others[1] or others[0] < 2:
                continue
            s = others[0]
            mats = slices(T, axis)
            holds = traceless_symmetric_obstruction(mats, tol)
            report.obstructions.append(Obstruction(
                kind="traceless-symmetric", axis=axis, holds=holds,
                implied_bound=s - 1 if holds else None, certified=True,
                detail=("span of axis-%d slices is symmetric traceless: no rank-one "
                        "element, subrank <= %d" % (axis, s - 1)) if holds else
                       "slices not all symmetric traceless"))
            probe = nonsingular_span_probe(mats, probe_samples, seed)
            nonsing = probe > 1e-3
            report.obstructions.append(Obstruction(
                kind="nonsingular-span-probe", axis=axis, holds=nonsing,
                implied_bound=(s + 1) // 2 if nonsing else None,
                certified=False, value=probe,
                detail=("min sampled sigma_min = %.3g: span looks nonsingular, "
                        "evidence for subrank <= %d" % (probe, (s + 1) // 2)) if nonsing else
                       "min sampled sigma_min = %.3g: span contains near-singular matrices" % probe))
    report.best_upper_bound = min(bounds)
    ob = report.obstruction_bound
    if ob is not None and ob < report.best_upper_bound:
        report.notes.append(
            f"certified slice obstruction implies subrank <= {ob}")
    return report
