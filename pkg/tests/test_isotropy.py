import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lapext.boundary_unitary import decompose, random_phases, random_unitary
from lapext.errors import DegenerateBasis, DimensionMismatch, NotIsotropic, NotMaximal
from lapext.isotropy import (
    BoundaryPair,
    IsotropicSubspace,
    boundary_equation_residual,
    cayley,
    inverse_cayley,
    projector_distance,
    property_report,
    recover_unitary,
    sigma,
    sigma_c,
    sigma_complement,
    subspace_from_json,
    subspace_from_unitary,
    subspace_to_json,
)

seeds = st.integers(0, 2**32 - 1)


def random_pair(rng, n):
    z = lambda: rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return BoundaryPair(z(), z())


def test_sigma_basic_values():
    p = BoundaryPair([1.0], [0.0])
    q = BoundaryPair([0.0], [1.0])
    assert sigma(p, q) == 1
    assert sigma(q, p) == -1
    assert sigma(p, p) == 0


def test_pair_length_mismatch():
    with pytest.raises(DimensionMismatch):
        BoundaryPair([1.0, 2.0], [1.0])
    with pytest.raises(DimensionMismatch):
        sigma(BoundaryPair([1.0], [1.0]), BoundaryPair([1.0, 2.0], [1.0, 2.0]))


@given(st.integers(1, 12), seeds)
def test_sigma_is_skew_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    p, q = random_pair(rng, n), random_pair(rng, n)
    assert abs(sigma(p, q) + np.conj(sigma(q, p))) <= 1e-12 * p.norm() * q.norm()


@given(st.integers(1, 12), seeds)
def test_cayley_intertwines_the_forms(n, seed):
    rng = np.random.default_rng(seed)
    p, q = random_pair(rng, n), random_pair(rng, n)
    assert abs(sigma(p, q) - sigma_c(cayley(p), cayley(q))) <= 1e-12 * p.norm() * q.norm()
    back = inverse_cayley(cayley(p))
    np.testing.assert_allclose(back.stacked(), p.stacked(), atol=1e-13)
    assert cayley(p).norm() == pytest.approx(p.norm())


@given(st.integers(1, 16), seeds)
def test_subspace_from_unitary_is_maximal_isotropic(n, seed):
    rng = np.random.default_rng(seed)
    U = decompose(random_unitary(rng, n))
    W = subspace_from_unitary(U)
    assert W.dim == n
    assert W.isotropy_defect() <= 1e-12
    for p in W.pairs:
        assert boundary_equation_residual(p, U) <= 1e-12
    comp = sigma_complement(W)
    assert projector_distance(comp, W.basis) <= 1e-10


@given(st.integers(1, 16), seeds)
def test_recover_unitary_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    U = decompose(random_unitary(rng, n, random_phases(rng, n, gap=0.0, n_minus_one=int(rng.integers(0, n + 1)))))
    W = subspace_from_unitary(U)
    V = recover_unitary(W)
    np.testing.assert_allclose(V.matrix, U.matrix, atol=1e-10)
    assert projector_distance(subspace_from_unitary(V).basis, W.basis) <= 1e-10


def test_recover_from_rotated_basis(rng):
    # any basis of the same subspace gives the same unitary
    U = decompose(random_unitary(rng, 6))
    W = subspace_from_unitary(U)
    R = np.linalg.qr(rng.standard_normal((6, 6)))[0]
    W2 = IsotropicSubspace(n=6, basis=W.basis @ R)
    np.testing.assert_allclose(recover_unitary(W2).matrix, U.matrix, atol=1e-10)


@pytest.mark.parametrize(
    "U, label",
    [(-np.eye(2), "dirichlet"), (np.eye(2), "neumann")],
)
def test_trivial_subspaces(U, label):
    W = subspace_from_unitary(U)
    B1, B2 = W.basis[:2], W.basis[2:]
    if label == "dirichlet":
        assert np.allclose(B1, 0)
    else:
        assert np.allclose(B2, 0)


def test_dirichlet_pairs_are_annihilated_by_trace():
    # Dirichlet: phi1 = 0, phi2 arbitrary
    W = IsotropicSubspace.from_pairs([BoundaryPair([0, 0], [1, 0]), BoundaryPair([0, 0], [0, 1])])
    np.testing.assert_allclose(recover_unitary(W).matrix, -np.eye(2), atol=1e-14)


def test_non_isotropic_rejected():
    W = IsotropicSubspace.from_pairs([BoundaryPair([1.0], [1j])])
    assert W.isotropy_defect() == pytest.approx(1.0)
    with pytest.raises(NotIsotropic):
        recover_unitary(W)


def test_non_maximal_rejected():
    W = IsotropicSubspace.from_pairs([BoundaryPair([1.0, 0.0], [0.0, 0.0])])
    with pytest.raises(NotMaximal):
        recover_unitary(W)
    assert property_report(W)["maximal"] is False


def test_degenerate_phi_plus_block():
    # (1, i) has phi+ = 0; only reachable once the isotropy check is switched off
    W = IsotropicSubspace.from_pairs([BoundaryPair([1.0], [1j])])
    with pytest.raises(DegenerateBasis):
        recover_unitary(W, tol=np.inf)


def test_json_roundtrip(rng):
    U = decompose(random_unitary(rng, 4))
    W = subspace_from_unitary(U)
    W2 = subspace_from_json(json.loads(json.dumps(subspace_to_json(W))))
    assert projector_distance(W.basis, W2.basis) < 1e-12
    np.testing.assert_allclose(W2.source_unitary.matrix, U.matrix)


def test_property_report_fields(rng):
    W = subspace_from_unitary(random_unitary(rng, 5))
    rep = property_report(W)
    assert rep["isotropic"] and rep["maximal"]
    assert rep["roundtrip_distance"] <= 1e-10
    json.dumps(rep)
