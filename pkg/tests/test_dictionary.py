import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dictionary
from itkmlab.dictionary import (
    Dictionary,
    Perturbation,
    coherence,
    dict_canonical,
    dict_canonical_half_hadamard,
    dict_perturbed_basis_3d,
    distance_matched,
    distance_raw,
    distance_sign_invariant,
    frame_stats,
    random_tangent_directions,
    realize_perturbation,
)
from itkmlab.errors import DegenerateFrameError, InvalidInputError


def test_construction_rejects_non_unit_columns():
    with pytest.raises(InvalidInputError):
        Dictionary(np.array([[1.0, 0.0], [0.0, 1.0 + 1e-6]]))


def test_construction_rejects_d_greater_than_K():
    with pytest.raises(InvalidInputError):
        Dictionary(np.eye(3)[:, :2])


def test_atoms_are_read_only():
    D = dict_canonical(3)
    with pytest.raises(ValueError):
        D.atoms[0, 0] = 2.0


class TestCoherence:
    def test_orthonormal(self):
        assert coherence(dict_canonical(3)) == 0.0

    def test_half_hadamard_16(self):
        assert coherence(dict_canonical_half_hadamard(16)) == pytest.approx(0.25, abs=1e-15)

    def test_half_hadamard_4_by_enumeration(self):
        D = dict_canonical_half_hadamard(4)
        assert D.K == 6
        A = D.atoms
        mu = max(abs(A[:, i] @ A[:, j]) for i in range(6) for j in range(6) if i != j)
        assert mu == pytest.approx(0.5)
        assert coherence(D) == pytest.approx(0.5)

    def test_duplicated_atom(self):
        assert coherence(Dictionary(np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))) == 1.0

    def test_single_atom_rejected(self):
        with pytest.raises(InvalidInputError):
            coherence(Dictionary(np.ones((1, 1))))


class TestFrameStats:
    @pytest.mark.parametrize("d", [1, 3, 8])
    def test_orthonormal_basis(self, d):
        fs = frame_stats(dict_canonical(d))
        assert fs.A == pytest.approx(1.0, abs=1e-10)
        assert fs.B == pytest.approx(1.0, abs=1e-10)
        assert fs.kappa == pytest.approx(1.0, abs=1e-10)

    def test_random_rotation_is_tight(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        fs = frame_stats(Dictionary(Q))
        assert fs.A == pytest.approx(1.0, abs=1e-10) and fs.B == pytest.approx(1.0, abs=1e-10)

    def test_half_hadamard_8(self):
        D = dict_canonical_half_hadamard(8)
        # independent route: full eigendecomposition of the 8x8 Gram
        w = np.linalg.eigvalsh(D.atoms @ D.atoms.T)
        assert w[0] == pytest.approx(1.0) and w[-1] == pytest.approx(2.0)
        fs = frame_stats(D)
        assert fs.A == pytest.approx(1.0, abs=1e-12)
        assert fs.B == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    def test_perturbed_basis_condition_number(self, t):
        assert frame_stats(dict_perturbed_basis_3d(t)).kappa == pytest.approx(1 + 3 * t, abs=1e-9)

    def test_rank_deficient(self):
        D = Dictionary(np.array([[1.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(DegenerateFrameError):
            frame_stats(D)

    def test_invariants(self, rng):
        for _ in range(20):
            fs = frame_stats(random_dictionary(rng, 4, 7))
            assert 0 < fs.A <= fs.B and 0 <= fs.mu <= 1 and fs.kappa >= 1


class TestDistances:
    def test_identity(self, rng):
        D = random_dictionary(rng, 3, 5)
        assert distance_raw(D, D) == 0
        assert distance_sign_invariant(D, D) == 0
        dist, perm = distance_matched(D, D)
        assert dist == 0 and perm.tolist() == list(range(5))

    def test_negated_atom(self, rng):
        D = random_dictionary(rng, 3, 5)
        A = D.atoms.copy()
        A[:, 0] *= -1
        E = Dictionary(A)
        assert distance_raw(D, E) == pytest.approx(2.0)
        assert distance_sign_invariant(D, E) == 0.0

    def test_sign_flip_2d(self):
        s = math.sqrt(0.5)
        D1 = Dictionary(np.array([[1.0, s], [0.0, s]]))
        D2 = Dictionary(np.array([[-1.0, s], [0.0, s]]))
        assert distance_sign_invariant(D1, D2) == 0.0

    def test_reversed_columns(self, rng):
        D = random_dictionary(rng, 4, 6)
        dist, perm = distance_matched(D, Dictionary(D.atoms[:, ::-1]))
        assert dist == 0.0
        assert perm.tolist() == [5, 4, 3, 2, 1, 0]

    def test_signed_permutation(self, rng):
        D = random_dictionary(rng, 3, 3)
        pi = [1, 2, 0]  # (2,3,1) in one-based notation
        signs = np.array([-1.0, 1.0, -1.0])
        E = Dictionary(D.atoms[:, pi] * signs)
        dist, perm = distance_matched(E, D)
        assert dist == pytest.approx(0.0, abs=1e-15)
        assert perm.tolist() == pi

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            distance_raw(dict_canonical(2), dict_canonical(3))
        with pytest.raises(InvalidInputError):
            distance_matched(dict_canonical(2), dict_canonical(3))

    def test_ordering_of_distances(self, rng):
        for _ in range(50):
            D1 = random_dictionary(rng, 3, 4)
            D2 = random_dictionary(rng, 3, 4)
            raw = distance_raw(D1, D2)
            sgn = distance_sign_invariant(D1, D2)
            mat = distance_matched(D1, D2)[0]
            assert mat <= sgn + 1e-15 <= raw + 2e-15


class TestPerturbation:
    def test_zero_radius_is_exact(self, rng):
        D = random_dictionary(rng, 4, 6)
        P = Perturbation(D, np.zeros(6), random_tangent_directions(D, rng))
        assert realize_perturbation(P) == D

    def test_two_dimensional_example(self):
        D = dict_canonical(2)
        Z = np.array([[0.0, 1.0], [1.0, 0.0]])
        Psi = realize_perturbation(Perturbation(D, np.array([0.2, 0.0]), Z))
        alpha = 1 - 0.02
        omega = math.sqrt(0.04 - 0.0004)
        np.testing.assert_allclose(Psi.atoms[:, 0], [alpha, omega], atol=1e-15)
        assert omega == pytest.approx(0.198997487421324)

    def test_alpha_omega_identity(self, rng):
        D = random_dictionary(rng, 3, 5)
        radii = rng.uniform(0, math.sqrt(2), 5)
        P = Perturbation(D, radii, random_tangent_directions(D, rng))
        np.testing.assert_allclose(P.alpha**2 + P.omega**2, 1.0, atol=1e-12)

    def test_distance_recovers_radius(self, rng):
        for _ in range(1000):
            d = int(rng.integers(2, 6))
            K = int(rng.integers(d, 9))
            D = random_dictionary(rng, d, K)
            radii = rng.uniform(0, math.sqrt(2), K)
            Psi = realize_perturbation(Perturbation(D, radii, random_tangent_directions(D, rng)))
            np.testing.assert_allclose(np.linalg.norm(Psi.atoms - D.atoms, axis=0), radii, atol=1e-9)
            assert distance_raw(D, Psi) == pytest.approx(radii.max(), abs=1e-9)

    def test_uniform_radius(self, rng):
        D = random_dictionary(rng, 4, 6)
        Psi = realize_perturbation(Perturbation(D, np.full(6, 0.1), random_tangent_directions(D, rng)))
        assert distance_raw(D, Psi) == pytest.approx(0.1, abs=1e-9)

    def test_rejects_bad_directions(self):
        D = dict_canonical(2)
        with pytest.raises(InvalidInputError):
            Perturbation(D, np.array([0.1, 0.0]), np.array([[1.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(InvalidInputError):
            Perturbation(D, np.array([0.1, 0.0]), np.array([[0.0, 0.0], [2.0, 1.0]]))

    def test_ignores_direction_of_unperturbed_atom(self):
        D = dict_canonical(2)
        Perturbation(D, np.array([0.1, 0.0]), np.array([[0.0, 5.0], [1.0, 5.0]]))

    def test_rejects_large_radius(self):
        D = dict_canonical(2)
        with pytest.raises(InvalidInputError):
            Perturbation(D, np.array([1.5, 0.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))


class TestTangentDirections:
    def test_orthogonal_and_unit(self, rng):
        D = random_dictionary(rng, 5, 9)
        Z = random_tangent_directions(D, rng)
        np.testing.assert_allclose(np.sum(Z * D.atoms, axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(Z, axis=0), 1.0, atol=1e-12)

    def test_deterministic(self):
        D = dict_canonical_half_hadamard(4)
        Z1 = random_tangent_directions(D, np.random.default_rng(7))
        Z2 = random_tangent_directions(D, np.random.default_rng(7))
        np.testing.assert_array_equal(Z1, Z2)


class TestZoo:
    def test_canonical(self):
        np.testing.assert_array_equal(dict_canonical(4).atoms, np.eye(4))

    def test_perturbed_basis_at_zero(self):
        np.testing.assert_array_equal(dict_perturbed_basis_3d(0.0).atoms, np.eye(3))

    def test_half_hadamard_shape(self):
        assert dict_canonical_half_hadamard(8).shape == (8, 12)

    def test_half_hadamard_needs_power_of_two(self):
        with pytest.raises(InvalidInputError):
            dict_canonical_half_hadamard(6)

    def test_perturbed_basis_range(self):
        with pytest.raises(InvalidInputError):
            dict_perturbed_basis_3d(0.6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_matched_vanishes_under_signed_permutation(seed):
    rng = np.random.default_rng(seed)
    D = random_dictionary(rng, 3, 5)
    perm = rng.permutation(5)
    signs = rng.choice([-1.0, 1.0], 5)
    assert distance_matched(D, Dictionary(D.atoms[:, perm] * signs))[0] < 1e-12
