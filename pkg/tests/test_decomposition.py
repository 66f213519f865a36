import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subrank_lab import generators as gen
from subrank_lab.decomposition import (CPDecomposition, jennrich, pair_conjugates,
                                       real_factors, reconstruct)
from subrank_lab.errors import (NotConcise, PairingFailed, ResidualTooLarge,
                                ShapeMismatch)
from subrank_lab.tensor import outer3, unit_tensor


def rel_residual(T, cpd):
    T = np.asarray(getattr(T, "data", T))
    return np.linalg.norm(T - reconstruct(cpd).data) / np.linalg.norm(T)


def normalized_terms(cpd):
    out = []
    for i in range(cpd.rank):
        t = cpd.term(i).reshape(-1)
        out.append(t / np.linalg.norm(t))
    return np.array(out)


def same_term_sets(a, b, tol=1e-6):
    """Terms of a and b agree up to permutation and a per-term scalar."""
    A, B = normalized_terms(a), normalized_terms(b)
    overlap = np.abs(A.conj() @ B.T)
    return any(all(overlap[i, p[i]] > 1 - tol for i in range(len(p)))
               for p in itertools.permutations(range(B.shape[0])))


class TestReconstruct:
    def test_empty_is_zero(self):
        out = reconstruct(CPDecomposition([], (2, 3, 1)))
        assert out.shape == (2, 3, 1) and not np.any(out.data)

    def test_single_triple(self):
        e1 = np.array([1.0, 0.0])
        out = reconstruct(CPDecomposition([(e1, e1, e1)], (2, 2, 2)))
        assert np.array_equal(out.data.real, outer3(e1, e1, e1).real)

    def test_factor_length_checked(self):
        with pytest.raises(ShapeMismatch):
            CPDecomposition([(np.ones(2), np.ones(3), np.ones(2))], (2, 2, 2))


class TestJennrich:
    def test_identity(self):
        cpd = jennrich(unit_tensor(3))
        assert cpd.rank == 3 and cpd.residual < 1e-12
        truth = CPDecomposition([(e, e, e) for e in np.eye(3)], (3, 3, 3))
        assert same_term_sets(cpd, truth)

    def test_conjugate_pair(self):
        cpd = jennrich(gen.conjugate_pair_tensor())
        assert cpd.residual < 1e-10
        ratios = sorted((u[1] / u[0] for u, _, _ in cpd.factors), key=lambda z: z.imag)
        np.testing.assert_allclose(ratios, [-1j, 1j], atol=1e-10)
        for u, v, w in cpd.factors:
            np.testing.assert_allclose(v[1] / v[0], u[1] / u[0], atol=1e-10)
            np.testing.assert_allclose(w[1] / w[0], u[1] / u[0], atol=1e-10)

    def test_matches_ground_truth(self):
        T, truth = gen.random_rank_r((4, 4, 4), 4, seed=8)
        cpd = jennrich(T)
        assert cpd.residual < 1e-8
        assert same_term_sets(cpd, truth)

    def test_not_concise(self):
        T, _ = gen.random_rank_r((3, 3, 3), 2, seed=1)
        with pytest.raises(NotConcise):
            jennrich(T)

    def test_rank_too_high(self):
        # a generic 3 x 3 x 3 tensor has rank 5 > 3
        with pytest.raises(ResidualTooLarge):
            jennrich(gen.random_gaussian((3, 3, 3), 4))

    def test_not_cubic(self):
        with pytest.raises(ShapeMismatch):
            jennrich(gen.random_gaussian((2, 3, 3), 0))

    def test_same_seed_same_output(self):
        T, _ = gen.random_rank_r((3, 3, 3), 3, seed=4)
        a, b = jennrich(T, seed=3), jennrich(T, seed=3)
        for fa, fb in zip(a.factors, b.factors):
            for x, y in zip(fa, fb):
                assert np.array_equal(x, y)

    @given(st.integers(1, 6), st.integers(0, 2**31 - 1), st.sampled_from(["real", "complex"]))
    def test_round_trip(self, n, seed, field):
        T, _ = gen.random_rank_r((n, n, n), n, seed=seed, field=field)
        cpd = jennrich(T, seed=seed)
        assert rel_residual(T, cpd) < 1e-8


class TestPairing:
    def test_identity(self):
        p = pair_conjugates(jennrich(unit_tensor(3)))
        assert (p.m, p.l) == (3, 0)

    def test_conjugate_pair(self):
        p = pair_conjugates(jennrich(gen.conjugate_pair_tensor()))
        assert (p.m, p.l) == (0, 1)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_complex_mult(self, n):
        p = pair_conjugates(jennrich(gen.division_algebra_tensor("C", n)))
        assert (p.m, p.l) == (0, n)

    def test_non_real_sum_rejected(self):
        u = np.array([1, 1j])
        cpd = CPDecomposition([(u, u, u)], (2, 2, 2))
        with pytest.raises(PairingFailed):
            pair_conjugates(cpd)

    @given(st.integers(0, 3), st.integers(0, 2), st.integers(0, 2**31 - 1))
    def test_mixed_counts(self, m, l, seed):
        # real tensor built from m real triples and l conjugate pairs
        n = m + 2 * l
        if n == 0:
            return
        g = np.random.default_rng(seed)
        factors = []
        for _ in range(m):
            factors.append(tuple(g.standard_normal(n) for _ in range(3)))
        for _ in range(l):
            z = tuple(g.standard_normal(n) + 1j * g.standard_normal(n) for _ in range(3))
            factors.append(z)
            factors.append(tuple(f.conj() for f in z))
        T = reconstruct(CPDecomposition(factors, (n, n, n))).data
        assert np.abs(T.imag).max() < 1e-12
        cpd = jennrich(T.real, seed=seed)
        p = pair_conjugates(cpd)
        assert (p.m, p.l) == (m, l)
        # conjugating the whole factor set permutes the terms
        conj = CPDecomposition([tuple(f.conj() for f in t) for t in cpd.factors], cpd.shape)
        assert same_term_sets(cpd, conj)


@given(st.integers(0, 2**31 - 1))
def test_real_factors_rotates_phase(seed):
    g = np.random.default_rng(seed)
    u, v, w = (g.standard_normal(3) for _ in range(3))
    phases = np.exp(1j * g.uniform(0, 2 * np.pi, 2))
    ru, rv, rw = real_factors(u * phases[0], v * phases[1], w / phases[0] / phases[1])
    assert all(not np.iscomplexobj(f) for f in (ru, rv, rw))
    np.testing.assert_allclose(outer3(ru, rv, rw), outer3(u, v, w), atol=1e-10)
