from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlslab import linalg
from nlslab.model import (ConfigError, ModelConfig, build, ground_state,
                          j_components, j_vector, nls_block_eigenvalues,
                          nls_eigenvectors, nls_positions, projector_PDprime,
                          subsystem_eigensystem, telescoping_sum, zero_cluster)


def check_structure(m):
    D, h = m.D, m.D // 2
    for a in (1, 2):
        P = m.Psi(a)
        assert abs(np.trace(P) - 1) <= 1e-10
        assert np.array_equal(P, P.T)
        S = m.S(a)
        assert np.allclose(S @ S.T, P, atol=1e-12)
        # J = S^T E^T, so J^T J = E Psi E^T
        J = m.J(a)
        assert np.allclose(J.T @ J, m.E @ P @ m.E.T, atol=1e-12)
        assert np.allclose(m.JtJ(a), J.T @ J, atol=1e-14)
    assert linalg.rank_tol(m.Psi1) == h + 1
    assert linalg.rank_tol(m.Psi2) == D
    assert np.max(np.abs(m.Psi1[h:, h:] - 1 / D)) <= 1e-12
    off = (D - 4) / D ** 2
    tail2 = m.Psi2[h:, h:]
    assert np.max(np.abs(np.diag(tail2) - 1 / D)) <= 1e-12
    assert np.max(np.abs(tail2[~np.eye(h, dtype=bool)] - off)) <= 1e-12
    assert linalg.is_hermitian(m.M, 1e-12)
    assert np.allclose(m.E.T @ m.E, np.eye(D), atol=1e-12)


@given(st.sampled_from([4, 8, 16]), st.integers(0, 2**32))
def test_structure_property(D, seed):
    check_structure(build(ModelConfig(D=D, seed=seed)))


@pytest.mark.parametrize("D", [4, 8, 16, 62])
def test_structure_fixed_dims(model_cache, D):
    check_structure(model_cache(D))


def test_build_deterministic():
    a = build(ModelConfig(D=8, seed=5))
    b = build(ModelConfig(D=8, seed=5))
    for name in ("H", "S1", "S2", "Psi1", "Psi2", "M"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


@pytest.mark.parametrize("kwargs", [dict(D=3), dict(D=2), dict(D=8, lambda1=1, lambda2=1)])
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        ModelConfig(**kwargs)


def test_ranks_d8(model8):
    assert linalg.rank_tol(model8.Psi1) == 5
    assert linalg.rank_tol(model8.Psi2) == 8


def test_nls_eigenvalue_d8(model8):
    ev = nls_block_eigenvalues(model8)
    assert ev["trailing"] == pytest.approx(0.375, abs=1e-10)
    assert ev["full"] == pytest.approx(0.5, abs=1e-10)


def test_psi2_tail_diagonal_at_d4(model_cache):
    m = model_cache(4)
    assert np.allclose(m.Psi2[2:, 2:], np.eye(2) / 4, atol=1e-12)


def test_nls_vector_d4():
    v = nls_eigenvectors(4).vectors
    assert v.shape == (4, 1)
    assert np.allclose(v[:, 0], [0, 0, np.sqrt(0.5), -np.sqrt(0.5)], atol=1e-15)


def test_nls_vector_d8_j3():
    v = nls_eigenvectors(8).vectors[:, 2]
    assert v[4] == pytest.approx(np.sqrt(3) / 2, abs=1e-15)
    assert np.allclose(v[5:], -1 / np.sqrt(12), atol=1e-15)
    assert np.allclose(v[:4], 0)
    assert np.allclose(v ** 2, [0, 0, 0, 0, 3 / 4, 1 / 12, 1 / 12, 1 / 12])


@given(st.integers(2, 64))
def test_nls_vectors_orthonormal_and_telescoping(half):
    D = 2 * half
    V = nls_eigenvectors(D).vectors
    assert np.allclose(V.T @ V, np.eye(half - 1), atol=1e-13)
    # each vector sums to zero over the tail, so it is orthogonal to the uniform direction
    assert np.allclose(V.sum(axis=0), 0, atol=1e-13)
    n = half - 1
    assert telescoping_sum(n) == Fraction(n, n + 1)


def test_telescoping_d8():
    assert telescoping_sum(3) == Fraction(3, 4)


@pytest.mark.parametrize("D", [4, 8, 16, 62])
def test_closed_form_spans_numerical_nullspace(model_cache, D):
    m = model_cache(D)
    N = m.nls.vectors
    assert np.max(np.abs(m.Psi1 @ N)) <= 1e-12
    # raw eigensolver, independent of the canonical substitution
    es = linalg.eig_general(m.Psi1)
    zero = np.abs(es.values) < 1e-8
    Q, _ = np.linalg.qr(es.right[:, zero])
    assert Q.shape[1] == D // 2 - 1
    assert np.linalg.norm(N - Q @ (Q.conj().T @ N)) <= 1e-12


def test_nls_positions_d8(model8):
    # vector j sits at 1-based position D-j+1
    pos = nls_positions(model8) + 1
    assert list(pos) == [6, 7, 8]
    V = subsystem_eigensystem(model8, 1).right
    for j in (1, 2, 3):
        assert np.allclose(V[:, 8 - j], model8.nls.vectors[:, j - 1], atol=1e-15)


def test_zero_cluster_size(model8):
    assert zero_cluster(model8, 1).size == 3
    assert zero_cluster(model8, 2).size == 0


def test_gram_diagonal_entries(model8):
    for a in (1, 2):
        V = subsystem_eigensystem(model8, a).right
        G = V.T @ V
        assert np.allclose(G, np.diag(np.diag(G)), atol=1e-10)
        assert np.allclose(np.diag(G), 1, atol=1e-10)


def test_projector_pdprime(model8):
    P = projector_PDprime(model8)
    assert np.trace(P).real == pytest.approx(8)
    assert linalg.rank_tol(P) == 1


@pytest.mark.parametrize("a", [1, 2])
def test_j_vector_normalized(model8, a):
    c = j_components(model8, a)
    assert np.sum(c ** 2) == pytest.approx(1, abs=1e-14)
    assert np.linalg.norm(j_vector(model8, a)) == pytest.approx(1, abs=1e-14)


def test_ground_state_d4(model_cache):
    m = model_cache(4)
    v = m.nls.vectors[:, 0]
    assert v @ ground_state(m) == pytest.approx(1, abs=1e-12)


def test_ground_state_nls_overlaps(model8):
    V = subsystem_eigensystem(model8, 1).right
    ov = (V.conj().T @ ground_state(model8)) / 8
    nls = nls_positions(model8)
    assert np.allclose(ov[nls], 1 / 8, atol=1e-10)
