"""Subrank certificates: map triples sending a tensor to the unit tensor.

A certificate of size r for ``T`` is ``(phi1, phi2, phi3)`` with ``phi_i`` an
``r x n_i`` matrix and ``(phi1 (x) phi2 (x) phi3) T = I_r``. Everything here
either checks such a triple or builds one from structure in ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .decomposition import CPDecomposition, ConjugatePairing, real_factors
from .errors import (BasisSingular, RetriesExhausted, ShapeMismatch,
                     SingularMap, SpanDeficient)
from .tensor import (COMPLEX, REAL, Tensor3, as_tensor, mode_transform_array,
                     numerical_rank, unit_array)

DEFAULT_VERIFY_TOL = 1e-10
SQRT_BOUND_RETRY_CAP = 100


@dataclass(frozen=True, eq=False)
class SubrankCertificate:
    phi1: np.ndarray
    phi2: np.ndarray
    phi3: np.ndarray
    field: str = REAL

    def __post_init__(self):
        dtype = np.complex128 if self.field == COMPLEX else np.float64
        maps = []
        for m in (self.phi1, self.phi2, self.phi3):
            m = np.asarray(m)
            if self.field == REAL and np.iscomplexobj(m):
                if np.any(m.imag != 0):
                    raise ValueError("real certificate has complex entries")
                m = m.real
            m = np.array(m, dtype=dtype, ndmin=2)
            m.flags.writeable = False
            maps.append(m)
        rows = {m.shape[0] for m in maps}
        if len(rows) != 1:
            raise ShapeMismatch(f"maps disagree on r: {[m.shape for m in maps]}")
        r = rows.pop()
        # I_r has full flattening ranks, so r can never exceed a mode dimension
        if r > min(m.shape[1] for m in maps):
            raise ShapeMismatch(f"certificate size {r} exceeds a mode dimension")
        for name, m in zip(("phi1", "phi2", "phi3"), maps):
            object.__setattr__(self, name, m)

    @property
    def r(self) -> int:
        return self.phi1.shape[0]

    @property
    def maps(self):
        return self.phi1, self.phi2, self.phi3

    @property
    def source_shape(self):
        return tuple(m.shape[1] for m in self.maps)

    def __eq__(self, other):
        if not isinstance(other, SubrankCertificate):
            return NotImplemented
        return self.field == other.field and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.maps, other.maps))

    def __repr__(self):
        return f"SubrankCertificate(r={self.r}, source_shape={self.source_shape}, field={self.field!r})"


def empty_certificate(shape) -> SubrankCertificate:
    return SubrankCertificate(*(np.zeros((0, n)) for n in shape))


def _is_integral(a: np.ndarray) -> bool:
    return (not np.iscomplexobj(a) or not np.any(a.imag)) and bool(
        np.all(np.isfinite(a)) and np.all(np.real(a) == np.round(np.real(a))))


def _check_shapes(cert: SubrankCertificate, T: Tensor3):
    if cert.source_shape != T.shape:
        raise ShapeMismatch(
            f"certificate expects shape {cert.source_shape}, tensor is {T.shape}")


def is_exact(cert: SubrankCertificate, T) -> bool:
    """True when the tensor and all three maps are integer-valued."""
    T = as_tensor(T)
    return _is_integral(T.data) and all(_is_integral(m) for m in cert.maps)


def verify(cert: SubrankCertificate, T) -> float:
    """Frobenius residual ``||(phi1 (x) phi2 (x) phi3) T - I_r||``.

    Integer-valued inputs are contracted in exact integer arithmetic, so the
    residual is then exactly 0 for a valid certificate.
    """
    T = as_tensor(T)
    _check_shapes(cert, T)
    if cert.r == 0:
        return 0.0
    if is_exact(cert, T):
        ints = [np.real(a).astype(np.int64).astype(object) for a in (T.data, *cert.maps)]
        image = mode_transform_array(*ints)
        diff = image - unit_array(cert.r).astype(np.int64).astype(object)
        return float(sum(int(x) ** 2 for x in diff.reshape(-1))) ** 0.5
    image = mode_transform_array(T.data, *cert.maps)
    return float(np.linalg.norm((image - unit_array(cert.r)).reshape(-1)))


def accepts(cert: SubrankCertificate, T, tol: float = DEFAULT_VERIFY_TOL) -> bool:
    """Acceptance rule: residual 0 for integer inputs, else residual <= tol."""
    T = as_tensor(T)
    residual = verify(cert, T)
    if is_exact(cert, T):
        return residual == 0.0
    return residual <= tol


def identity_certificate(n: int) -> SubrankCertificate:
    eye = np.eye(n)
    return SubrankCertificate(eye, eye, eye)


def direct_sum_certificate(*certs: SubrankCertificate) -> SubrankCertificate:
    """Block-diagonal maps certifying the direct sum of the certified tensors."""
    from .tensor import block_diag
    field = COMPLEX if any(c.field == COMPLEX for c in certs) else REAL
    return SubrankCertificate(*(block_diag(*(c.maps[k] for c in certs)) for k in range(3)),
                              field=field)


def compose_invertible(cert: SubrankCertificate, G1, G2, G3,
                       cond_limit: float = 1e12) -> SubrankCertificate:
    """Certificate for ``(G1 (x) G2 (x) G3) T`` from one for ``T``."""
    new = []
    for phi, G in zip(cert.maps, (G1, G2, G3)):
        G = np.asarray(G)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] != phi.shape[1]:
            raise ShapeMismatch(f"G of shape {G.shape} does not act on {phi.shape[1]} dims")
        if not np.isfinite(np.linalg.cond(G)) or np.linalg.cond(G) > cond_limit:
            raise SingularMap("group element is singular to working precision")
        # phi G^{-1} = solve(G^T, phi^T)^T
        new.append(np.linalg.solve(G.T, phi.T).T)
    field = COMPLEX if cert.field == COMPLEX or any(np.iscomplexobj(m) for m in new) else REAL
    return SubrankCertificate(*new, field=field)


def spanning_slices_certificate(T, tol: float = 1e-8) -> SubrankCertificate:
    """Size-s certificate for an r x s x s tensor whose axis-1 slices span all s x s matrices.

    ``phi1`` holds the coefficients expressing each ``E_ii`` in the slices;
    ``phi2 = phi3 = id``.
    """
    T = as_tensor(T)
    r, s, s2 = T.shape
    if s != s2:
        raise ShapeMismatch(f"need an r x s x s tensor, got {T.shape}")
    M = T.data.reshape(r, s * s)
    if numerical_rank(M, tol) < s * s:
        raise SpanDeficient(f"axis-1 slices span fewer than {s * s} dimensions")
    targets = np.zeros((s, s * s))
    targets[np.arange(s), np.arange(s) * (s + 1)] = 1.0
    # rows c_i with c_i M = vec(E_ii)
    phi1 = np.linalg.pinv(M.T) @ targets.T
    phi1 = phi1.T
    eye = np.eye(s)
    field = COMPLEX if np.iscomplexobj(phi1) else REAL
    return SubrankCertificate(phi1, eye, eye, field=field)


def sqrt_bound_certificate(T, r: int, seed: int = 0,
                           retry_cap: int = SQRT_BOUND_RETRY_CAP,
                           tol: float = 1e-8,
                           complex_cert: Optional[SubrankCertificate] = None
                           ) -> SubrankCertificate:
    """Real certificate of size ``floor(sqrt(r))`` given complex subrank >= r.

    Draws Gaussian ``rho1: n1 -> r`` and ``rho2, rho3: n_i -> s`` until the
    axis-1 slices of ``(rho1 (x) rho2 (x) rho3) T`` span all s x s matrices,
    then finishes with :func:`spanning_slices_certificate`.
    """
    from .generators import rng

    T = as_tensor(T)
    if not T.is_real:
        raise ValueError("sqrt bound needs a real tensor")
    if r < 1:
        raise ValueError("r must be >= 1")
    if complex_cert is not None:
        if complex_cert.r < r or not accepts(complex_cert, T, 1e-8):
            raise ValueError("supplied complex certificate does not certify size r")
    s = math.isqrt(r)
    n1, n2, n3 = T.shape
    g = rng(seed)
    for _ in range(retry_cap):
        rho1 = g.standard_normal((r, n1))
        rho2 = g.standard_normal((s, n2))
        rho3 = g.standard_normal((s, n3))
        reduced = mode_transform_array(T.data, rho1, rho2, rho3)
        if numerical_rank(reduced.reshape(r, s * s), tol) < s * s:
            continue
        inner = spanning_slices_certificate(Tensor3(reduced, REAL), tol)
        cert = SubrankCertificate(inner.phi1 @ rho1, rho2, rho3)
        if accepts(cert, T, tol):
            return cert
    raise RetriesExhausted(f"no spanning projection found in {retry_cap} draws")


def conjugate_pairing_certificate(T, cpd: CPDecomposition,
                                  pairing: ConjugatePairing,
                                  tol: float = 1e-8) -> SubrankCertificate:
    """Real certificate of size ``m + l`` from a paired rank-n decomposition.

    Each mode gets the real basis made of the real factors and, for every
    conjugate pair, twice the real and imaginary parts of one partner. In that
    basis ``T`` is ``m`` diagonal ones plus ``l`` blocks each equal to a
    quarter of :func:`~subrank_lab.generators.conjugate_pair_tensor`; one
    diagonal unit is taken from every block.
    """
    T = as_tensor(T)
    n = T.shape[0]
    if not (T.shape == (n, n, n) and cpd.rank == n):
        raise ShapeMismatch("need an n x n x n tensor with a rank-n decomposition")
    if pairing.m + 2 * pairing.l != n:
        raise ValueError("pairing does not cover the decomposition")
    bases = [np.zeros((n, n)) for _ in range(3)]
    select = []
    col = 0
    for i in pairing.real_indices:
        for mode, f in enumerate(real_factors(*cpd.factors[i])):
            bases[mode][:, col] = f
        select.append((col, 1.0))
        col += 1
    for i, _ in pairing.pair_indices:
        for mode, f in enumerate(cpd.factors[i]):
            bases[mode][:, col] = 2 * f.real
            bases[mode][:, col + 1] = 2 * f.imag
        # u = (p + i q)/2 maps to (e_p + i e_q)/2, so the (p, p, p) entry is 2 / 8
        select.append((col, 4.0))
        col += 2
    inverses = []
    for B in bases:
        if numerical_rank(B, 1e-10) < n:
            raise BasisSingular("assembled real factor vectors are dependent")
        inverses.append(np.linalg.inv(B))
    rows = [c for c, _ in select]
    scale = np.array([w for _, w in select])
    phi1 = scale[:, None] * inverses[0][rows]
    cert = SubrankCertificate(phi1, inverses[1][rows], inverses[2][rows])
    return cert


def rank_one_downgrade(T, cert: SubrankCertificate, v1, v2, v3,
                       tol: float = 1e-12) -> SubrankCertificate:
    """Certificate for ``T + v1 (x) v2 (x) v3`` of size r or r - 1.

    If the certificate already kills the added term it is returned as is.
    Otherwise mode 1 is projected modulo ``phi1 v1``, the index j whose
    removal leaves the best-conditioned projected basis is dropped from modes
    2 and 3, and mode 1 is renormalized onto ``I_{r-1}``.
    """
    T = as_tensor(T)
    a = cert.phi1 @ np.asarray(v1)
    b = cert.phi2 @ np.asarray(v2)
    c = cert.phi3 @ np.asarray(v3)
    scale = max(1.0, np.linalg.norm(a), np.linalg.norm(b), np.linalg.norm(c))
    if min(np.linalg.norm(a), np.linalg.norm(b), np.linalg.norm(c)) <= tol * scale:
        return cert
    r = cert.r
    if r == 1:
        return empty_certificate(T.shape)
    # rows of P1: orthonormal basis of a^perp, so P1 a = 0
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(r)]))
    P1 = q[:, 1:r].T
    best_j, best_sigma = 0, -1.0
    for j in range(r):
        sigma = np.linalg.svd(np.delete(P1, j, axis=1), compute_uv=False)[-1]
        if sigma > best_sigma:
            best_j, best_sigma = j, sigma
    j = best_j
    M = np.delete(P1, j, axis=1)
    keep = [i for i in range(r) if i != j]
    phi1 = np.linalg.solve(M, P1 @ cert.phi1)
    return SubrankCertificate(phi1, cert.phi2[keep], cert.phi3[keep], field=cert.field)
