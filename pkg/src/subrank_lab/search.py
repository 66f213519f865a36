"""Numerical lower bounds: alternating least squares for subrank certificates.

The objective is ``||(phi1 (x) phi2 (x) phi3) T - I_r||_F``. With two maps
fixed it is a linear least-squares problem in the third, solved by a
truncated pseudo-inverse. Restarts run as one batch; restart ``k`` is seeded
with ``seed ^ k``.

A failed search means no certificate was found. It is never evidence that
the subrank is below ``r``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .bounds import BoundReport, bound_report
from .certificates import SubrankCertificate, verify
from .errors import StructuralBound
from .tensor import as_tensor, unit_array

log = logging.getLogger(__name__)

FOUND = "Found"
FAILED = "Failed"
NOT_FOUND_WORDING = "no certificate found"


@dataclass
class SearchConfig:
    """Knobs for :func:`als_certificate_search`.

    Every ``polish_every`` ALS sweeps, the ``polish_top`` best restarts whose
    residual is below ``polish_below`` get up to ``polish_iters`` damped
    Gauss-Newton steps; ALS alone converges only linearly near a solution.
    """

    r: int
    restarts: int = 20
    max_iters: int = 500
    success_tol: float = 1e-10
    stall_tol: float = 1e-12
    stall_window: int = 25
    seed: int = 0
    rcond: float = 1e-10
    polish: bool = True
    polish_every: int = 50
    polish_below: float = 0.1
    polish_iters: int = 40
    polish_top: int = 20
    max_map_norm: float = 1e6

    def __post_init__(self):
        if self.r < 1 or self.restarts < 1 or self.max_iters < 1 or self.stall_window < 1:
            raise ValueError("r, restarts, max_iters and stall_window must be positive")
        if self.success_tol <= 0 or self.stall_tol <= 0 or self.rcond <= 0:
            raise ValueError("thresholds must be positive")


@dataclass
class SearchOutcome:
    status: str
    r: int
    best_residual: float
    certificate: Optional[SubrankCertificate] = None
    restart: Optional[int] = None
    final_residuals: List[float] = field(default_factory=list)
    traces: List[List[float]] = field(default_factory=list)
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def summary(self) -> dict:
        return {
            "status": self.status,
            "r": self.r,
            "best_residual": self.best_residual,
            "restart": self.restart,
            "final_residuals": self.final_residuals,
            "iterations": [len(t) - 1 for t in self.traces],
            "message": (f"certificate of size {self.r} found" if self.found
                        else f"{NOT_FOUND_WORDING} at r={self.r}"),
        }


def _block(X, maps, mode):
    """Unfolded contraction of every mode but ``mode``: shape (K, n_mode, r*r).

    ``phi_mode @ Y`` is then the mode-``mode`` unfolding of the image.
    """
    P, Q = (maps[m] for m in range(3) if m != mode)
    Xp = np.moveaxis(X, mode, 0)
    Z = np.matmul(Xp[None], np.swapaxes(Q, 1, 2)[:, None])
    Y = np.matmul(P[:, None], Z)
    K, n = Y.shape[:2]
    return Y.reshape(K, n, -1)


def _residuals(phi, Y, target):
    return np.linalg.norm(phi @ Y - target, axis=(1, 2))


def _jacobian(X, maps, r):
    """Jacobian of vec(image - I_r) in (vec phi1, vec phi2, vec phi3)."""
    eye = np.eye(r)
    blocks = []
    for mode in range(3):
        Y = _block(X, [m[None] for m in maps], mode)[0].reshape(-1, r, r)
        # d image / d phi_mode[d, i] = delta(axis mode, d) * Y[i, ...]
        if mode == 0:
            J = np.einsum("ad,ibc->abcdi", eye, Y)
        elif mode == 1:
            J = np.einsum("be,jac->abcej", eye, Y)
        else:
            J = np.einsum("cf,kab->abcfk", eye, Y)
        blocks.append(J.reshape(r ** 3, -1))
    return np.hstack(blocks)


def _image_residual(X, maps, r):
    from .tensor import mode_transform_array
    diff = mode_transform_array(X, *maps) - unit_array(r)
    return diff.reshape(-1)


def _polish(X, maps, r, cfg, trace):
    """Levenberg-Marquardt on the full residual; accepts only decreasing steps."""
    sizes = [m.size for m in maps]
    shapes = [m.shape for m in maps]
    p = np.concatenate([m.reshape(-1) for m in maps])

    def unpack(vec):
        out, pos = [], 0
        for sz, sh in zip(sizes, shapes):
            out.append(vec[pos:pos + sz].reshape(sh))
            pos += sz
        return out

    F = _image_residual(X, unpack(p), r)
    f = float(np.linalg.norm(F))
    lam = 1e-3 * max(f, 1e-12)
    slow = 0
    for _ in range(cfg.polish_iters):
        if f <= cfg.success_tol:
            break
        J = _jacobian(X, unpack(p), r)
        JJ = J @ J.T
        accepted = False
        for _ in range(12):
            try:
                step = -J.T @ np.linalg.solve(JJ + lam * np.eye(JJ.shape[0]), F)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = p + step
            Fc = _image_residual(X, unpack(cand), r)
            fc = float(np.linalg.norm(Fc))
            if fc < f and np.abs(cand).max() <= cfg.max_map_norm:
                # near a regular solution the decrease is superlinear;
                # creeping along a degenerating family is not worth the effort
                slow = slow + 1 if fc > 0.5 * f else 0
                p, F, f = cand, Fc, fc
                lam = max(lam / 10, 1e-15)
                accepted = True
                break
            lam *= 10
        if not accepted:
            break
        trace.append(f)
        if slow >= 10:
            break
    return unpack(p), f


def _als(X: np.ndarray, cfg: SearchConfig):
    """Run all restarts as one batch.

    Returns (maps, residual history per restart, success mask). Stops at the
    first sweep after which any restart is below ``success_tol``.
    """
    from .generators import rng

    r = cfg.r
    K = cfg.restarts
    shape = X.shape
    target = unit_array(r).reshape(r, r * r)
    maps = [np.empty((K, r, n)) for n in shape]
    for k in range(K):
        g = rng(cfg.seed ^ k)
        for m, n in enumerate(shape):
            maps[m][k] = g.standard_normal((r, n)) / np.sqrt(n)
    res = _residuals(maps[0], _block(X, maps, 0), target)
    history = [[float(x)] for x in res]
    active = np.arange(K)
    done = np.zeros(K, dtype=bool)
    for it in range(1, cfg.max_iters + 1):
        cur = [m[active] for m in maps]
        for mode in range(3):
            Y = _block(X, cur, mode)
            old = _residuals(cur[mode], Y, target)
            cand = target @ np.linalg.pinv(Y, rcond=cfg.rcond)
            new = _residuals(cand, Y, target)
            # the truncated solve is not always the exact minimizer; never go uphill
            better = (new <= old) & (np.abs(cand).max(axis=(1, 2)) <= cfg.max_map_norm)
            cur[mode] = np.where(better[:, None, None], cand, cur[mode])
            res = np.where(better, new, old)
        for m in range(3):
            maps[m][active] = cur[m]
        keep = []
        for idx, k in enumerate(active):
            h = history[k]
            prev = h[-1]
            val = float(res[idx])
            assert val <= prev + 1e-14 * max(1.0, prev), "ALS objective increased"
            h.append(val)
            if val <= cfg.success_tol:
                done[k] = True
        if cfg.polish and it % cfg.polish_every == 0 and not done.any():
            for k in sorted(active, key=lambda k: history[k][-1])[:cfg.polish_top]:
                if history[k][-1] >= cfg.polish_below:
                    break
                polished, fval = _polish(X, [m[k] for m in maps], r, cfg, history[k])
                for m in range(3):
                    maps[m][k] = polished[m]
                if fval <= cfg.success_tol:
                    done[k] = True
                    break
        for idx, k in enumerate(active):
            h = history[k]
            if done[k] or not np.isfinite(h[-1]):
                continue
            if len(h) > cfg.stall_window:
                ref = h[-1 - cfg.stall_window]
                if ref - h[-1] <= cfg.stall_tol * ref:
                    continue
            keep.append(idx)
        if done.any():
            break
        active = active[keep]
        if active.size == 0:
            break
    if cfg.polish and not done.any():
        # last chance for restarts that stopped between polish checkpoints
        for k in sorted(range(K), key=lambda k: history[k][-1])[:cfg.polish_top]:
            if history[k][-1] >= cfg.polish_below:
                break
            polished, fval = _polish(X, [m[k] for m in maps], r, cfg, history[k])
            for m in range(3):
                maps[m][k] = polished[m]
            if fval <= cfg.success_tol:
                done[k] = True
                break
    return maps, history, done


def als_certificate_search(T, cfg: SearchConfig) -> SearchOutcome:
    """Multistart ALS search for a size-``cfg.r`` certificate of ``T``.

    Raises :class:`StructuralBound` when ``r`` exceeds a mode dimension.
    Found outcomes carry a certificate that passed :func:`verify` independently.
    """
    T = as_tensor(T)
    if cfg.r > min(T.shape):
        raise StructuralBound(
            f"r={cfg.r} exceeds min dimension {min(T.shape)}; subrank is at most that")
    if not T.is_real:
        raise ValueError("certificate search works over the reals")
    maps, history, done = _als(T.data, cfg)
    finals = [h[-1] for h in history]
    # reducer: lowest residual, ties to the lower restart index
    order = sorted(range(cfg.restarts), key=lambda k: (finals[k], k))
    for k in order:
        if not done[k]:
            continue
        cert = SubrankCertificate(*(m[k] for m in maps))
        residual = verify(cert, T)
        if residual <= cfg.success_tol:
            return SearchOutcome(FOUND, cfg.r, residual, cert, k, finals, history)
        log.debug("restart %d converged but re-verification gave %.3e", k, residual)
    best = order[0]
    return SearchOutcome(FAILED, cfg.r, finals[best], None, best, finals, history,
                         reason=f"{NOT_FOUND_WORDING} at r={cfg.r}")


@dataclass
class SubrankEstimate:
    lower: int
    upper: int
    certificate: Optional[SubrankCertificate]
    report: BoundReport
    outcomes: List[SearchOutcome] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def gap(self) -> int:
        return self.upper - self.lower

    def summary(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "gap": self.gap,
            "searches": [o.summary() for o in self.outcomes],
            "notes": list(self.notes),
        }


def subrank_estimate(T, template: Optional[SearchConfig] = None,
                     tol: float = 1e-8) -> SubrankEstimate:
    """Bracket ``Q(T)`` between a verified certificate and :func:`bound_report`.

    Searches at r = upper bound, upper - 1, ... and stops at the first Found.
    """
    T = as_tensor(T)
    template = template or SearchConfig(r=1)
    report = bound_report(T, tol)
    upper = report.best_upper_bound
    est = SubrankEstimate(0, upper, None, report)
    for r in range(upper, 0, -1):
        outcome = als_certificate_search(T, replace(template, r=r))
        est.outcomes.append(outcome)
        if outcome.found:
            est.lower = r
            est.certificate = outcome.certificate
            break
    ob = report.obstruction_bound
    if ob is not None and ob < upper:
        est.notes.append(f"certified slice obstruction implies subrank <= {ob}; "
                         f"combined bracket [{est.lower}, {ob}]")
    for o in report.obstructions:
        if o.holds and not o.certified:
            est.notes.append(o.detail)
    return est

