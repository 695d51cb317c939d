import numpy as np
import pytest

from nhevolve import matlin
from nhevolve.errors import (
    ArgumentError,
    MagnitudeError,
    NearEPError,
    SingularMatrixError,
)


def random_complex(rng, *shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def triple_loop_product(a, b):
    n = a.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                out[i, j] += a[i, k] * b[k, j]
    return out


def taylor_exp(a, terms=30):
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


class TestMatMul:
    def test_identity(self, rng):
        a = random_complex(rng, 3, 3)
        assert np.allclose(matlin.mat_mul(np.eye(3), a), a)

    def test_diagonal_product(self):
        d = np.diag([1j, -1j])
        assert np.allclose(matlin.mat_mul(d, d), np.diag([-1, -1]))

    def test_against_triple_loop(self, rng):
        a = random_complex(rng, 3, 3)
        b = random_complex(rng, 3, 3)
        assert np.max(np.abs(matlin.mat_mul(a, b) - triple_loop_product(a, b))) < 1e-13

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ArgumentError):
            matlin.mat_mul(np.eye(2), np.eye(3))

    def test_nonfinite_rejected(self):
        with pytest.raises(ArgumentError):
            matlin.mat_mul(np.array([[np.nan, 0], [0, 0]]), np.eye(2))


class TestMatInv:
    def test_identity(self):
        assert np.allclose(matlin.mat_inv(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        inv = matlin.mat_inv(np.diag([2.0, 1j]))
        assert np.allclose(inv, np.diag([0.5, -1j]))

    def test_residual_on_random(self, rng):
        a = random_complex(rng, 4, 4) + 3 * np.eye(4)
        res = np.linalg.norm(a @ matlin.mat_inv(a) - np.eye(4))
        assert res < 1e-10 * 4

    def test_double_inverse_is_identity(self, rng):
        a = random_complex(rng, 3, 3) + 2 * np.eye(3)
        assert np.linalg.norm(matlin.mat_inv(matlin.mat_inv(a)) - a) < 1e-9 * np.linalg.norm(a)

    def test_singular_raises_with_estimate(self):
        with pytest.raises(SingularMatrixError) as info:
            matlin.mat_inv(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert info.value.condition is None or info.value.condition > 1e12

    def test_condition_cap(self):
        a = np.diag([1.0, 1e-9])
        with pytest.raises(SingularMatrixError):
            matlin.mat_inv(a, cond_cap=1e6)


class TestEigGeneral:
    def test_diagonal_input(self):
        diag = np.array([1 + 2j, 3.0])
        dec = matlin.eig_general(np.diag(diag))
        assert np.allclose(sorted(dec.values, key=lambda z: z.real),
                           sorted(diag, key=lambda z: z.real))
        for k, lam in enumerate(dec.values):
            j = int(np.argmin(np.abs(diag - lam)))  # basis column of this value
            want = np.zeros(2)
            want[j] = 1.0
            assert np.allclose(dec.right_vectors[:, k], want)

    def test_traceless_symmetric_pair(self):
        # 2x2 with zero diagonal and -1 couplings: eigenvalues +-1
        h = np.array([[0, -1], [-1, 0]], dtype=complex)
        dec = matlin.eig_general(h)
        assert np.allclose(sorted(dec.values.real), [-1, 1])
        assert np.allclose(dec.values.imag, 0, atol=1e-12)

    def test_closed_form_branch_order(self):
        # first value is mean + principal sqrt of the discriminant
        h = np.array([[0.2 + 0.9j, -1], [-1, -0.2 - 0.9j]])
        dec = matlin.eig_general(h)
        expected = np.sqrt(1 + (0.2 + 0.9j) ** 2)
        assert abs(dec.values[0] - expected) < 1e-12

    def test_planted_spectrum(self, rng):
        planted = np.array([2.0, -1.0 + 1j, 0.5 - 2j, 3j, -2.5])
        v = random_complex(rng, 5, 5) + 2 * np.eye(5)
        a = v @ np.diag(planted) @ np.linalg.inv(v)
        dec = matlin.eig_general(a)
        got = sorted(dec.values, key=lambda z: (z.real, z.imag))
        want = sorted(planted, key=lambda z: (z.real, z.imag))
        assert np.max(np.abs(np.array(got) - np.array(want))) < 1e-8

    def test_residual_invariant(self, rng):
        for n in (2, 3, 5, 8):
            a = random_complex(rng, n, n)
            dec = matlin.eig_general(a)
            res = np.linalg.norm(
                a @ dec.right_vectors - dec.right_vectors * dec.values[None, :])
            assert res < 1e-9 * np.linalg.norm(a)
            assert np.allclose(np.linalg.norm(dec.right_vectors, axis=0), 1.0)

    def test_hermitian_real_values_unitary_vectors(self, rng):
        a = random_complex(rng, 4, 4)
        a = a + a.conj().T
        dec = matlin.eig_general(a)
        assert np.max(np.abs(dec.values.imag)) < 1e-10
        v = dec.right_vectors
        assert np.linalg.norm(v.conj().T @ v - np.eye(4)) < 1e-9

    def test_defective_raises_near_ep(self):
        with pytest.raises(NearEPError):
            matlin.eig_general(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_dimension_cap(self):
        with pytest.raises(ArgumentError):
            matlin.eig_general(np.eye(9))


class TestMatExp:
    def test_zero(self):
        assert np.allclose(matlin.mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        out = matlin.mat_exp(np.diag([1j * np.pi, 0.0]))
        assert np.allclose(out, np.diag([-1.0, 1.0]), atol=1e-14)

    def test_against_taylor_2x2(self, rng):
        for _ in range(20):
            a = random_complex(rng, 2, 2)
            assert np.max(np.abs(matlin.mat_exp(a) - taylor_exp(a))) < 1e-11

    def test_against_taylor_4x4(self, rng):
        a = random_complex(rng, 4, 4, scale=0.5)
        assert np.max(np.abs(matlin.mat_exp(a) - taylor_exp(a))) < 1e-11

    def test_inverse_pairing(self, rng):
        for n in (2, 4):
            a = random_complex(rng, n, n)
            a *= 5.0 / max(np.linalg.norm(a), 5.0)
            prod = matlin.mat_exp(a) @ matlin.mat_exp(-a)
            assert np.linalg.norm(prod - np.eye(n)) < 1e-9

    def test_magnitude_guard(self):
        with pytest.raises(MagnitudeError):
            matlin.mat_exp(np.diag([1e4, -1e4]))

    def test_batch_matches_scalar(self, rng):
        ms = random_complex(rng, 7, 2, 2)
        batch = matlin.expm_2x2_batch(ms)
        for k in range(7):
            assert np.max(np.abs(batch[k] - taylor_exp(ms[k]))) < 1e-11
