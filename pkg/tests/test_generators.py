import numpy as np
import pytest

from subrank_lab import generators as gen
from subrank_lab.decomposition import reconstruct
from subrank_lab.tensor import is_concise, slices, unfold

import oracles


def left_mult(T, a):
    """Matrix of x -> a * x for the structure tensor T[a, b, c] (coefficient of e_c in e_a e_b)."""
    return np.einsum("a,abc->cb", a, T.data)


def test_quaternion_relations():
    # i^2 = j^2 = k^2 = -1, ij = k, jk = i, ki = j, and ji = -k
    mul = lambda x, y: np.einsum("a,b,abc->c", x, y, gen.quaternion_tensor().data)  # noqa: E731
    one, i, j, k = np.eye(4)
    for u in (i, j, k):
        assert np.array_equal(mul(u, u), -one)
    assert np.array_equal(mul(i, j), k)
    assert np.array_equal(mul(j, k), i)
    assert np.array_equal(mul(k, i), j)
    assert np.array_equal(mul(j, i), -k)


def test_quaternion_identity_row_and_column():
    T = gen.quaternion_tensor().data
    assert np.array_equal(T[0], np.eye(4))
    assert np.array_equal(T[:, 0, :], np.eye(4))


def test_printed_left_mult_matrices():
    # first printed matrix is the identity; the second has (1,2) = -1, (2,1) = +1
    L = gen.LEFT_MULT_QUATERNION
    assert np.array_equal(L[0], np.eye(4))
    assert L[1][0, 1] == -1 and L[1][1, 0] == 1
    T = gen.quaternion_tensor()
    for a in range(4):
        assert np.array_equal(left_mult(T, np.eye(4)[a]), L[a])


def test_quaternion_norm_form(g):
    mats = gen.LEFT_MULT_QUATERNION
    c = g.standard_normal((1000, 4))
    dets = np.linalg.det(np.tensordot(c, mats, axes=(1, 0)))
    expected = np.sum(c**2, axis=1) ** 2
    np.testing.assert_allclose(dets, expected, rtol=1e-8)


@pytest.mark.parametrize("D", ["C", "H", "O"])
def test_division_property(D, g):
    T = gen.division_algebra_tensor(D, 1)
    n = T.shape[0]
    for a in g.standard_normal((1000, n)):
        L = left_mult(T, a)
        s = np.linalg.svd(L, compute_uv=False)
        assert s[-1] > 1e-8 * s[0]


@pytest.mark.parametrize("D", ["C", "H", "O"])
def test_norm_multiplicative(D, g):
    T = gen.division_algebra_tensor(D, 1).data
    for _ in range(50):
        x, y = g.standard_normal((2, T.shape[0]))
        xy = np.einsum("a,b,abc->c", x, y, T)
        assert np.linalg.norm(xy) == pytest.approx(np.linalg.norm(x) * np.linalg.norm(y))


def test_octonion_contains_quaternions():
    assert np.array_equal(gen.octonion_tensor().data[:4, :4, :4], gen.quaternion_tensor().data)


def test_octonions_not_associative():
    T = gen.octonion_tensor().data
    mul = lambda x, y: np.einsum("a,b,abc->c", x, y, T)  # noqa: E731
    e = np.eye(8)
    assert not np.allclose(mul(mul(e[1], e[2]), e[4]), mul(e[1], mul(e[2], e[4])))


def test_complex_entries():
    T = gen.division_algebra_tensor("C", 1).data
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1
    expected[0, 1, 1] = -1
    expected[1, 0, 1] = 1
    expected[1, 1, 0] = 1
    assert np.array_equal(T, expected)


def test_complex_product_rule(g):
    # reading the stored tensor as (out, a, b): (a1 + i a2)(b1 + i b2)
    T = gen.complex_tensor().data
    for _ in range(20):
        a, b = g.standard_normal((2, 2))
        out = np.einsum("cab,a,b->c", T, a, b)
        z = complex(*a) * complex(*b)
        np.testing.assert_allclose(out, [z.real, z.imag], atol=1e-12)


def test_division_sums():
    assert gen.division_algebra_tensor("H", 1) == gen.quaternion_tensor()
    assert gen.division_algebra_tensor("C", 3).shape == (6, 6, 6)
    with pytest.raises(ValueError):
        gen.division_algebra_tensor("S", 1)
    with pytest.raises(ValueError):
        gen.division_algebra_tensor("C", 0)


def test_conjugate_pair_entries():
    T = gen.conjugate_pair_tensor().data
    assert T[0, 0, 0] == 2
    assert T[0, 1, 1] == T[1, 0, 1] == T[1, 1, 0] == -2
    assert np.count_nonzero(T) == 4


def test_conjugate_pair_from_complex_terms():
    u = np.array([1, 1j])
    total = np.einsum("i,j,k->ijk", u, u, u) + np.einsum("i,j,k->ijk", *(u.conj(),) * 3)
    assert np.abs(total.imag).max() == 0
    assert np.array_equal(total.real, gen.conjugate_pair_tensor().data)


def test_traceless_335_slices():
    s = slices(gen.traceless_symmetric_335(), 3)
    assert len(s) == 5
    assert np.array_equal(s[0], np.diag([1.0, 0, -1]))
    E12 = np.zeros((3, 3))
    E12[0, 1] = E12[1, 0] = 1
    assert np.array_equal(s[2], E12)
    for m in s:
        assert np.array_equal(m, m.T) and np.trace(m) == 0
    assert np.linalg.matrix_rank(unfold(gen.traceless_symmetric_335(), 3)) == 5


class TestRandom:
    def test_same_seed_identical(self):
        a = gen.random_gaussian((3, 3, 5), 7)
        b = gen.random_gaussian((3, 3, 5), 7)
        assert a == b

    def test_different_seeds_differ(self):
        assert gen.random_gaussian((2, 2, 2), 1) != gen.random_gaussian((2, 2, 2), 2)

    def test_mean_and_variance(self):
        x = gen.random_gaussian((100, 100, 100), 3).flat
        # 5 sigma bands for 10^6 standard normals
        assert abs(x.mean()) < 5e-3
        assert abs(x.var() - 1) < 5 * np.sqrt(2 / x.size)

    def test_matches_pcg64_stream(self):
        expected = np.random.Generator(np.random.PCG64(99)).standard_normal((2, 3, 4))
        assert np.array_equal(gen.random_gaussian((2, 3, 4), 99).data, expected)

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            gen.rng(-1)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            gen.random_gaussian((2, 0, 2), 0)

    def test_rank_one_minors_vanish(self):
        T, _ = gen.random_rank_r((3, 4, 2), 1, seed=5)
        for axis in (1, 2, 3):
            M = unfold(T, axis)
            for i in range(M.shape[0]):
                for j in range(i + 1, M.shape[0]):
                    minors = np.outer(M[i], M[j]) - np.outer(M[j], M[i])
                    assert np.abs(minors).max() < 1e-10

    def test_rank3_concise(self):
        T, _ = gen.random_rank_r((3, 3, 3), 3, seed=11)
        assert is_concise(T) == (True, True, True)

    @pytest.mark.parametrize("field", ["real", "complex"])
    def test_reconstruct_matches(self, field):
        T, cpd = gen.random_rank_r((3, 4, 5), 2, seed=2, field=field)
        R = reconstruct(cpd).data
        if field == "real":
            R = R.real
        np.testing.assert_allclose(T.data, R, atol=1e-12)

    def test_rank_r_rejects_zero(self):
        with pytest.raises(ValueError):
            gen.random_rank_r((2, 2, 2), 0, 0)


def test_quaternion_certificate_by_oracle():
    A, B, C = gen.QUATERNION_CERTIFICATE
    assert oracles.cert_residual(gen.quaternion_tensor().data, A, B, C) == 0.0
