"""End-to-end experiments behind the command line.

Every command returns an :class:`ExperimentReport`. The ``results`` payload
holds nothing that depends on wall-clock time, so two runs with the same
parameters produce identical payloads.
"""

from __future__ import annotations

import datetime as _dt
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from . import generators as gen
from .bounds import (bound_report, classify_222, generic_subrank, hyperdeterminant,
                     hyperdeterminant_array, BOUNDARY_BAND, traceless_symmetric_obstruction)
from .certificates import (SubrankCertificate, accepts, compose_invertible,
                           conjugate_pairing_certificate, direct_sum_certificate,
                           is_exact, rank_one_downgrade,
                           sqrt_bound_certificate, verify)
from .decomposition import jennrich, pair_conjugates
from .errors import StructuralBound
from .io import certificate_to_dict, tensor_to_dict
from .search import (NOT_FOUND_WORDING, SearchConfig, als_certificate_search,
                     subrank_estimate)
from .tensor import REAL, Tensor3, as_tensor, mode_transform, slices, unit_tensor

PI_OVER_4 = math.pi / 4
MC_BLOCK = 1 << 16
DEFAULT_BAND = 0.0015
GENERATORS = ("quaternion", "octonion", "complex", "c-mult", "division",
              "conjugate-pair", "traceless-335", "unit", "gaussian", "rank-r")
SHOWCASES = ("quaternion", "c-mult", "paper-335", "example-1-5", "sqrt-bound",
             "pairing", "downgrade")
PROBES = {"c-mult": ("C", 2, 1), "quaternion-sum": ("H", 4, 2)}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class ExperimentReport:
    command: str
    params: dict
    seed: Optional[int]
    results: dict
    ok: bool = True
    version: str = __version__
    rng: str = gen.RNG_ALGORITHM
    timestamp: str = field(default_factory=_now)
    elapsed_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentReport":
        return cls(**doc)


def _cert_summary(cert: SubrankCertificate, T) -> dict:
    return {"size": cert.r, "residual": verify(cert, T), "exact": is_exact(cert, T),
            "accepted": accepts(cert, T), "certificate": certificate_to_dict(cert)}


# generation

def make_tensor(name: str, n: int = 1, seed: int = 0, shape=(2, 2, 2),
                r: int = 1, algebra: str = "C") -> Tensor3:
    if name == "quaternion":
        return gen.quaternion_tensor()
    if name == "octonion":
        return gen.octonion_tensor()
    if name == "complex":
        return gen.complex_tensor()
    if name == "c-mult":
        return gen.complex_mult_tensor(n)
    if name == "division":
        return gen.division_algebra_tensor(algebra, n)
    if name == "conjugate-pair":
        return gen.conjugate_pair_tensor()
    if name == "traceless-335":
        return gen.traceless_symmetric_335()
    if name == "unit":
        return unit_tensor(n)
    if name == "gaussian":
        return gen.random_gaussian(shape, seed)
    if name == "rank-r":
        return gen.random_rank_r(shape, r, seed)[0]
    raise ValueError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")


def cmd_gen(name, n=1, seed=0, shape=(2, 2, 2), r=1, algebra="C"):
    T = make_tensor(name, n=n, seed=seed, shape=shape, r=r, algebra=algebra)
    params = {"name": name, "n": n, "shape": list(shape), "r": r, "algebra": algebra}
    return ExperimentReport("gen", params, seed, {"tensor": tensor_to_dict(T)}), T


# single-tensor commands

def cmd_verify(T, cert: SubrankCertificate, tol: float = 1e-10):
    T = as_tensor(T)
    residual = verify(cert, T)
    exact = is_exact(cert, T)
    ok = residual == 0.0 if exact else residual <= tol
    results = {"size": cert.r, "residual": residual, "exact": exact, "accepted": ok}
    return ExperimentReport("verify", {"tol": tol}, None, results, ok=ok)


def cmd_bounds(T, tol: float = 1e-8, seed: int = 0):
    rep = bound_report(T, tol, seed=seed)
    return ExperimentReport("bounds", {"tol": tol}, seed, rep.to_dict())


def cmd_search(T, r: int, restarts: int = 20, max_iters: int = 500, seed: int = 0,
               tol: float = 1e-10):
    cfg = SearchConfig(r=r, restarts=restarts, max_iters=max_iters, seed=seed,
                       success_tol=tol)
    params = {"r": r, "restarts": restarts, "max_iters": max_iters, "tol": tol}
    try:
        out = als_certificate_search(T, cfg)
    except StructuralBound as exc:
        return ExperimentReport("search", params, seed,
                                {"status": "Failed", "reason": str(exc)}, ok=False), None
    results = out.summary()
    if out.found:
        results["certificate"] = certificate_to_dict(out.certificate)
    return ExperimentReport("search", params, seed, results, ok=out.found), out


def cmd_cpd(T, tol: float = 1e-8, seed: int = 0):
    T = as_tensor(T)
    cpd = jennrich(T, tol=tol, seed=seed)
    results = {"decomposition": cpd.to_dict()}
    if T.is_real:
        pairing = pair_conjugates(cpd)
        results["pairing"] = {"real": pairing.real_indices,
                              "pairs": [list(p) for p in pairing.pair_indices],
                              "m": pairing.m, "l": pairing.l}
    return ExperimentReport("cpd", {"tol": tol}, seed, results)


# Monte Carlo

def _parse_format(fmt: str):
    try:
        dims = tuple(int(x) for x in fmt.lower().split("x"))
    except ValueError:
        dims = ()
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"format must look like 2x2x2, got {fmt!r}")
    return dims


def _hyperdet_block(seed: int, block: int, size: int, band: float):
    draws = gen.rng(seed ^ block).standard_normal((size, 2, 2, 2))
    delta = hyperdeterminant_array(draws)
    norm4 = np.sum(draws**2, axis=(1, 2, 3)) ** 2
    boundary = np.abs(delta) <= band * norm4
    return int(np.sum((delta > 0) & ~boundary)), int(np.sum(boundary))


def _montecarlo_222(samples, seed, band, threads):
    blocks = [(b, min(MC_BLOCK, samples - b * MC_BLOCK))
              for b in range(-(-samples // MC_BLOCK))]
    work = lambda bs: _hyperdet_block(seed, bs[0], bs[1], BOUNDARY_BAND)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    positive = sum(p for p, _ in parts)
    boundary = sum(q for _, q in parts)
    est = positive / samples
    stderr = math.sqrt(est * (1 - est) / samples)
    passed = abs(est - PI_OVER_4) < band
    return {
        "format": "2x2x2",
        "samples": samples,
        "classifier": "sign of the hyperdeterminant",
        "estimate": est,
        "stderr": stderr,
        "reference": PI_OVER_4,
        "deviation": est - PI_OVER_4,
        "band": band,
        "pass": passed,
        "boundary_samples": boundary,
        "frequencies": [
            {"class": "subrank 2", "count": positive, "frequency": est, "stderr": stderr},
            {"class": "subrank <= 1", "count": samples - positive - boundary,
             "frequency": (samples - positive - boundary) / samples, "stderr": stderr},
        ],
    }, passed


def _bracket_sample(T, cfg: SearchConfig, target: int):
    upper = bound_report(T, probe_samples=200).best_upper_bound
    lower = 0
    for r in range(min(upper, target), 0, -1):
        if als_certificate_search(T, replace(cfg, r=r)).found:
            lower = r
            break
    return lower, upper


def _montecarlo_search(dims, samples, seed, restarts, max_iters, threads):
    g = generic_subrank(*dims)
    cfg = SearchConfig(r=1, restarts=restarts, max_iters=max_iters, seed=seed)

    def work(i):
        return _bracket_sample(gen.random_gaussian(dims, seed ^ i), cfg, g)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            brackets = list(pool.map(work, range(samples)))
    else:
        brackets = [work(i) for i in range(samples)]
    high = sum(1 for lo, _ in brackets if lo >= g)
    low = samples - high
    table = {}
    for lo, hi in brackets:
        key = f"[{lo},{hi}]"
        table[key] = table.get(key, 0) + 1

    def entry(label, count, meaning):
        p = count / samples
        return {"class": label, "count": count, "frequency": p,
                "stderr": math.sqrt(p * (1 - p) / samples), "meaning": meaning}

    return {
        "format": "x".join(map(str, dims)),
        "samples": samples,
        "generic_subrank": g,
        "classifier": "certificate search (lower) and bound_report (upper)",
        "frequencies": [
            entry(f">={g}", high, f"verified certificate of size {g}"),
            entry(f"<={g - 1}", low,
                  f"{NOT_FOUND_WORDING} at r={g}; bracketed, not a proof of subrank < {g}"),
        ],
        "brackets": [{"bracket": k, "count": v} for k, v in sorted(table.items())],
        "search": {"restarts": restarts, "max_iters": max_iters},
    }


def cmd_montecarlo(fmt: str = "2x2x2", samples: int = 10_000, seed: int = 0,
                   band: float = DEFAULT_BAND, restarts: int = 8, max_iters: int = 200,
                   threads: int = 1):
    dims = _parse_format(fmt)
    if samples < 1:
        raise ValueError("samples must be positive")
    params = {"format": fmt, "samples": samples, "band": band, "threads": threads,
              "block": MC_BLOCK}
    if dims == (2, 2, 2):
        results, ok = _montecarlo_222(samples, seed, band, threads)
    else:
        params.update(restarts=restarts, max_iters=max_iters)
        results = _montecarlo_search(dims, samples, seed, restarts, max_iters, threads)
        ok = True
    return ExperimentReport("montecarlo", params, seed, results, ok=ok)


def frequencies_csv(report: ExperimentReport) -> str:
    lines = ["class,count,frequency,stderr"]
    for row in report.results.get("frequencies", []):
        lines.append(f"{row['class']},{row['count']},{row['frequency']!r},{row['stderr']!r}")
    return "\n".join(lines) + "\n"


# showcases

def _show_quaternion(n, seed, tol):
    T = gen.quaternion_tensor()
    cert = SubrankCertificate(*gen.QUATERNION_CERTIFICATE)
    rep = bound_report(T, seed=seed)
    probe = [o for o in rep.obstructions if o.kind == "nonsingular-span-probe"]
    res = {
        "tensor": "quaternion multiplication",
        "certificate": _cert_summary(cert, T),
        "flattening_ranks": list(rep.flattening_ranks),
        "span_probe": [{"axis": o.axis, "min_sigma": o.value, "holds": o.holds} for o in probe],
    }
    ok = res["certificate"]["exact"] and res["certificate"]["residual"] == 0.0
    return res, ok


def _pairing_pipeline(n, seed, tol):
    T = gen.division_algebra_tensor("C", n)
    cpd = jennrich(T, seed=seed)
    pairing = pair_conjugates(cpd)
    cert = conjugate_pairing_certificate(T, cpd, pairing)
    summary = _cert_summary(cert, T)
    res = {
        "tensor": f"componentwise complex multiplication, n={n}",
        "cpd_rank": cpd.rank,
        "cpd_residual": cpd.residual,
        "pairing": {"m": pairing.m, "l": pairing.l},
        "certificate": summary,
    }
    return res, summary["accepted"] and cert.r == pairing.m + pairing.l == n


def _show_c_mult(n, seed, tol):
    res, ok = _pairing_pipeline(n, seed, tol)
    T = gen.complex_mult_tensor(n)
    rep = bound_report(T, seed=seed)
    out = als_certificate_search(T, SearchConfig(r=n + 1, seed=seed))
    res["flattening_upper_bound"] = rep.best_upper_bound
    res["search_above"] = {
        "r": n + 1, "status": out.status, "best_residual": out.best_residual,
        "wording": (f"{NOT_FOUND_WORDING} at r={n + 1}; consistent with subrank {n}"
                    if not out.found else f"certificate of size {n + 1} found"),
    }
    return res, ok and not out.found


def _show_335(n, seed, tol):
    T = gen.traceless_symmetric_335()
    mats = slices(T, 3)
    obstruction = traceless_symmetric_obstruction(mats)
    est = subrank_estimate(T, SearchConfig(r=1, seed=seed))
    res = {
        "tensor": "3x3x5 traceless symmetric slices",
        "traceless_symmetric": obstruction,
        "lower": est.lower,
        "upper": est.upper,
        "gap": est.gap,
        "searches": [{"r": o.r, "status": o.status, "best_residual": o.best_residual}
                     for o in est.outcomes],
        "notes": est.notes,
    }
    if est.certificate is not None:
        res["certificate"] = _cert_summary(est.certificate, T)
    return res, obstruction and est.lower == 2 and est.upper == 3


def _show_example_1_5(n, seed, tol):
    T = gen.conjugate_pair_tensor()
    delta = hyperdeterminant(T)
    verdict = classify_222(T)
    cpd = jennrich(T, seed=seed)
    ratios = []
    for u, _, _ in cpd.factors:
        ratios.append([float((u[1] / u[0]).real), float((u[1] / u[0]).imag)])
    est = subrank_estimate(T, SearchConfig(r=1, seed=seed))
    res = {
        "tensor": "(e1 + i e2)^3 + (e1 - i e2)^3",
        "hyperdeterminant": delta,
        "classification": verdict.value,
        "cpd_residual": cpd.residual,
        "factor_ratios_u2_over_u1": sorted(ratios, key=lambda z: z[1]),
        "lower": est.lower,
        "upper": est.upper,
    }
    if est.certificate is not None:
        res["certificate"] = _cert_summary(est.certificate, T)
    ok = delta < 0 and cpd.residual < 1e-10 and est.lower == est.upper == 1
    return res, ok


def _show_sqrt_bound(n, seed, tol):
    cases = []
    ok = True
    for label, T, r in (("I_9", unit_tensor(9), 9),
                        ("complex multiplication, n=2", gen.complex_mult_tensor(2), 4)):
        cert = sqrt_bound_certificate(T, r, seed=seed)
        summary = _cert_summary(cert, T)
        cases.append({"tensor": label, "complex_subrank": r,
                      "expected_size": math.isqrt(r), "certificate": summary})
        ok = ok and summary["accepted"] and cert.r == math.isqrt(r)
    return {"cases": cases}, ok


def _show_pairing(n, seed, tol):
    return _pairing_pipeline(n, seed, tol)


def downgrade_trial(seed: int, n: int = 3, size: int = 4):
    """One random downgrade: ``T`` with a size-``n`` certificate plus a rank-one term."""
    g = gen.rng(seed)
    base = np.zeros((size, size, size))
    base[np.arange(n), np.arange(n), np.arange(n)] = 1.0
    # noise outside the certified block keeps T generic without touching I_n
    base[n:, :, :] = g.standard_normal((size - n, size, size))
    Gs = [g.standard_normal((size, size)) for _ in range(3)]
    T = mode_transform(Tensor3(base, REAL), *Gs)
    cert0 = SubrankCertificate(*(np.eye(size)[:n] for _ in range(3)))
    cert = compose_invertible(cert0, *Gs)
    vs = [g.standard_normal(size) for _ in range(3)]
    from .tensor import outer3
    S = T + Tensor3(outer3(*vs).real, REAL)
    new = rank_one_downgrade(T, cert, *vs)
    return T, cert, S, new


def _show_downgrade(n, seed, tol):
    T, cert, S, new = downgrade_trial(seed)
    before = _cert_summary(cert, T)
    after = _cert_summary(new, S)
    res = {"tensor": "random 4x4x4 with a size-3 certificate, plus a rank-one term",
           "before": before, "after": after}
    return res, before["accepted"] and after["accepted"] and new.r >= cert.r - 1


_SHOWCASE_FUNCS = {
    "quaternion": _show_quaternion,
    "c-mult": _show_c_mult,
    "paper-335": _show_335,
    "example-1-5": _show_example_1_5,
    "sqrt-bound": _show_sqrt_bound,
    "pairing": _show_pairing,
    "downgrade": _show_downgrade,
}


def cmd_showcase(name: str, n: int = 2, seed: int = 0, tol: float = 1e-10):
    if name not in _SHOWCASE_FUNCS:
        raise ValueError(f"unknown showcase {name!r}; choose from {', '.join(SHOWCASES)}")
    t0 = time.perf_counter()
    results, ok = _SHOWCASE_FUNCS[name](n, seed, tol)
    rep = ExperimentReport("showcase", {"name": name, "n": n, "tol": tol}, seed, results, ok=ok)
    rep.elapsed_seconds = time.perf_counter() - t0
    return rep


def cmd_probe_upper(name: str, n: int = 1, restarts: int = 20, seed: int = 0,
                    max_iters: int = 500):
    """Search one size above the direct-sum certificate of ``n`` copies."""
    if name not in PROBES:
        raise ValueError(f"unknown probe {name!r}; choose from {', '.join(PROBES)}")
    if n < 1:
        raise ValueError("n must be >= 1")
    algebra, dim, q = PROBES[name]
    T = gen.division_algebra_tensor(algebra, n)
    if algebra == "H":
        single = SubrankCertificate(*gen.QUATERNION_CERTIFICATE)
    else:
        cpd = jennrich(gen.complex_tensor(), seed=seed)
        single = conjugate_pairing_certificate(gen.complex_tensor(), cpd, pair_conjugates(cpd))
    cert = direct_sum_certificate(*([single] * n))
    size = n * q
    out = als_certificate_search(T, SearchConfig(r=size + 1, restarts=restarts,
                                                 max_iters=max_iters, seed=seed))
    results = {
        "tensor": f"{n} copies of {algebra} multiplication",
        "certificate": _cert_summary(cert, T),
        "search": {"r": size + 1, "status": out.status, "best_residual": out.best_residual,
                   "final_residuals": out.final_residuals},
        "conclusion": (
            f"{NOT_FOUND_WORDING} at r={size + 1} over {restarts} restarts; "
            f"consistent with subrank {size}" if not out.found else
            f"certificate of size {size + 1} found; not consistent with subrank {size}"),
    }
    params = {"name": name, "n": n, "restarts": restarts, "max_iters": max_iters}
    ok = results["certificate"]["accepted"] and cert.r == size
    return ExperimentReport("probe-upper", params, seed, results, ok=ok)
