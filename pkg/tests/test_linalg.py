"""Hermitian eigensolver wrapper: correctness, contracts, analytic blocks."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabimod.errors import ContractViolation, DomainError
from rabimod.numerics import eigh
from rabimod.numerics.linalg import MAX_DIM


def _random_hermitian(rng, d, complex_=True):
    a = rng.standard_normal((d, d))
    if complex_:
        a = a + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


# ------------------------------------------------------------------ analytics


def test_pauli_z():
    dec = eigh(np.diag([1.0, -1.0]))
    assert np.allclose(dec.values, [-1.0, 1.0])
    # eigenvectors are basis vectors up to phase
    assert abs(abs(dec.vectors[1, 0]) - 1.0) < 1e-14
    assert abs(abs(dec.vectors[0, 1]) - 1.0) < 1e-14


def test_two_level_block_closed_form():
    # [[d/2, g], [g, -d/2]] has eigenvalues +-sqrt(d^2/4 + g^2)
    d, g = 0.3, 0.05
    dec = eigh(np.array([[0.5 * d, g], [g, -0.5 * d]]))
    split = np.hypot(0.5 * d, g)
    assert dec.values == pytest.approx([-split, split], abs=1e-15)
    # mixing angle: tan(2 theta) = 2 g / d
    theta = 0.5 * np.arctan2(2 * g, d)
    ground = dec.vectors[:, 0]
    expect = np.array([-np.sin(theta), np.cos(theta)])
    overlap = abs(np.dot(ground, expect))
    assert overlap == pytest.approx(1.0, abs=1e-14)


# ----------------------------------------------------------------- invariants


@pytest.mark.parametrize("d", [2, 16, 62])
@pytest.mark.parametrize("complex_", [False, True])
def test_residual_and_orthonormality(d, complex_):
    rng = np.random.default_rng(7 * d + complex_)
    a = _random_hermitian(rng, d, complex_)
    dec = eigh(a)
    residual = a @ dec.vectors - dec.vectors * dec.values
    assert np.max(np.abs(residual)) < 1e-10 * max(np.max(np.abs(a)), 1.0)
    gram = dec.vectors.conj().T @ dec.vectors
    assert np.max(np.abs(gram - np.eye(d))) < 1e-10
    assert np.all(np.diff(dec.values) >= 0.0)


def test_real_input_gives_real_vectors():
    rng = np.random.default_rng(3)
    dec = eigh(_random_hermitian(rng, 8, complex_=False))
    assert not np.iscomplexobj(dec.vectors)


def test_degenerate_cluster_is_orthonormal():
    # 3-fold degenerate eigenvalue; vectors must still be orthonormal
    u = np.linalg.qr(np.random.default_rng(5).standard_normal((6, 6)))[0]
    a = u @ np.diag([1.0, 1.0, 1.0, 2.0, 3.0, 4.0]) @ u.T
    dec = eigh(0.5 * (a + a.T))
    gram = dec.vectors.T @ dec.vectors
    assert np.max(np.abs(gram - np.eye(6))) < 1e-10


@given(st.integers(1, 24), st.integers(0, 2 ** 31 - 1))
@settings(deadline=None, max_examples=40)
def test_reconstruction_property(d, seed):
    a = _random_hermitian(np.random.default_rng(seed), d)
    dec = eigh(a)
    rebuilt = (dec.vectors * dec.values) @ dec.vectors.conj().T
    assert np.max(np.abs(rebuilt - a)) < 1e-10 * max(np.max(np.abs(a)), 1.0)


# ------------------------------------------------------------------ contracts


def test_rejects_non_hermitian():
    with pytest.raises(ContractViolation):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ContractViolation):
        eigh(np.array([[1.0, 1e-6j], [0.0, 1.0]]))


def test_rejects_non_square_and_oversized():
    with pytest.raises(ContractViolation):
        eigh(np.zeros((2, 3)))
    with pytest.raises(ContractViolation):
        eigh(np.zeros(4))
    with pytest.raises(DomainError):
        eigh(np.eye(MAX_DIM + 1))


def test_boundary_dimension_works():
    dec = eigh(np.eye(MAX_DIM))
    assert dec.values.shape == (MAX_DIM,)


def test_zero_matrix():
    dec = eigh(np.zeros((3, 3)))
    assert np.all(dec.values == 0.0)
