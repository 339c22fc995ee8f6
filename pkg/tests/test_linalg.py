from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from operator_forge.exceptions import (HypothesisViolationError,
                                       InsufficientDimensionError)
from operator_forge.linalg import (Frame, embed, extend_frame, inner, norm,
                                   operator_norm, orthonormalize, project,
                                   rank_one)
from operator_forge.sampling import random_operator, random_unit_vector, rng


def basis(i, d):
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def test_inner_orthonormal_basis():
    assert inner(basis(0, 3), basis(0, 3)) == 1.0
    assert inner(basis(0, 3), basis(1, 3)) == 0.0


def test_inner_convention():
    # linear in the first slot, conjugate-linear in the second
    u = np.array([1.0 + 2.0j, 0.5j])
    v = np.array([0.25 - 1.0j, 3.0])
    assert inner(2j * u, v) == pytest.approx(2j * inner(u, v))
    assert inner(u, 2j * v) == pytest.approx(-2j * inner(u, v))


@pytest.mark.parametrize("seed", range(5))
def test_inner_matches_summation_oracle(seed):
    gen = rng(seed, 11)
    u = random_unit_vector(gen, 17) * 3.0
    v = random_unit_vector(gen, 17) * 0.7
    oracle = sum(u[i] * np.conj(v[i]) for i in range(17))
    assert abs(inner(u, v) - oracle) <= 1e-14 * abs(oracle)


def test_inner_dim_mismatch():
    with pytest.raises(HypothesisViolationError):
        inner(np.zeros(2, dtype=complex), np.zeros(3, dtype=complex))


def test_operator_norm_identity():
    assert operator_norm(np.eye(4, dtype=complex)) == pytest.approx(1.0)


def test_operator_norm_scaled_shift():
    a = np.array([[0.0, 2.0], [0.0, 0.0]], dtype=complex)
    assert operator_norm(a) == pytest.approx(2.0)


def _power_iteration_norm(a, iters=2000):
    # largest singular value via power iteration on A*A, independent of SVD
    b = a.conj().T @ a
    gen = np.random.default_rng(12345)
    v = gen.standard_normal(a.shape[1]) + 1j * gen.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = b @ v
        v = w / np.linalg.norm(w)
    return float(np.sqrt(np.real(np.vdot(v, b @ v))))


@pytest.mark.parametrize("seed", range(4))
def test_operator_norm_matches_power_iteration(seed):
    a = random_operator(rng(seed, 12), 16, 1.7)
    assert operator_norm(a) == pytest.approx(_power_iteration_norm(a), rel=1e-8)


def test_operator_norm_large_dimension_lanczos_path():
    # above 512 dims the norm comes from svds; compare against dense SVD
    gen = rng(3, 13)
    d = 530
    a = (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d)))
    a /= np.sqrt(2.0 * d)
    dense = float(np.linalg.svd(a, compute_uv=False)[0])
    assert operator_norm(a) == pytest.approx(dense, rel=1e-9)
    assert operator_norm(sp.csr_matrix(a)) == pytest.approx(dense, rel=1e-9)


def test_operator_norm_zero_sparse():
    assert operator_norm(sp.csr_matrix((40, 40), dtype=complex)) == 0.0


def test_orthonormalize_duplicate_deflated():
    f = orthonormalize([basis(0, 3), basis(0, 3)])
    assert f.size == 1
    np.testing.assert_allclose(f.matrix[:, 0], basis(0, 3))


def test_orthonormalize_plane_gram_identity():
    e0, e1 = basis(0, 4), basis(1, 4)
    f = orthonormalize([e0 + e1, e0 - e1])
    assert f.size == 2
    np.testing.assert_allclose(f.gram(), np.eye(2), atol=1e-12)
    # spans the same plane
    for v in (e0, e1):
        assert norm(v - project(f, v)) <= 1e-12


def test_orthonormalize_empty():
    assert orthonormalize([]).size == 0
    assert orthonormalize([], dim=5).dim == 5


def test_project_examples():
    f = orthonormalize([basis(0, 3)])
    np.testing.assert_allclose(project(f, basis(1, 3)), np.zeros(3), atol=0)
    v = 3.0 * basis(0, 3) + 4.0 * basis(1, 3)
    np.testing.assert_allclose(project(f, v), 3.0 * basis(0, 3), atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_project_residual_orthogonality_and_bessel(seed):
    gen = rng(seed, 14)
    d = 12
    f = orthonormalize([random_unit_vector(gen, d) for _ in range(4)])
    v = random_unit_vector(gen, d) * 2.5
    p = project(f, v)
    for q in f.vectors:
        assert abs(inner(v - p, q)) <= 1e-12
    assert norm(p) <= norm(v) + 1e-12
    np.testing.assert_allclose(project(f, p), p, atol=1e-12)


def test_rank_one_examples():
    phi = basis(0, 3)
    a = rank_one(phi, basis(1, 3))
    np.testing.assert_allclose(a @ basis(0, 3), basis(1, 3))
    np.testing.assert_allclose(a @ basis(2, 3), np.zeros(3))


@pytest.mark.parametrize("seed", range(3))
def test_rank_one_norm(seed):
    gen = rng(seed, 15)
    phi = random_unit_vector(gen, 9) * 1.3
    v = random_unit_vector(gen, 9) * 0.4
    assert operator_norm(rank_one(phi, v)) == pytest.approx(
        norm(phi) * norm(v), rel=1e-10)


def test_extend_frame_deterministic():
    f = orthonormalize([basis(0, 6), basis(2, 6)])
    g1 = extend_frame(f, 3)
    g2 = extend_frame(f, 3)
    np.testing.assert_allclose(g1.matrix, g2.matrix)
    assert g1.size == 5
    np.testing.assert_allclose(g1.gram(), np.eye(5), atol=1e-12)
    # new directions are orthogonal to the original frame
    for i in range(2, 5):
        assert abs(inner(g1.matrix[:, i], f.matrix[:, 0])) <= 1e-12


def test_extend_frame_insufficient_dimension():
    f = orthonormalize([basis(0, 3), basis(1, 3)])
    with pytest.raises(InsufficientDimensionError) as err:
        extend_frame(f, 2)
    assert err.value.required_dim == 4


def test_embed_vector_and_operator():
    v = np.array([1.0 + 1.0j, 2.0])
    w = embed(v, 5)
    assert w.shape == (5,)
    assert norm(w) == pytest.approx(norm(v))
    a = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    b = embed(a, 4)
    np.testing.assert_allclose(b[:2, :2], a)
    assert operator_norm(b) == pytest.approx(operator_norm(a), rel=1e-12)
    with pytest.raises(HypothesisViolationError):
        embed(v, 1)


@pytest.mark.parametrize("seed", range(4))
def test_operator_norm_submultiplicative(seed):
    gen = rng(seed, 16)
    a = random_operator(gen, 10, 1.3)
    b = random_operator(gen, 10, 0.8)
    assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) + 1e-9


def test_frame_vectors_accessor():
    f = orthonormalize([basis(1, 4)])
    assert isinstance(f, Frame)
    assert len(f.vectors) == 1
    np.testing.assert_allclose(f.vectors[0], basis(1, 4))
