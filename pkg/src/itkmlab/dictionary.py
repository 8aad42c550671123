"""Dictionaries of unit-norm atoms, test dictionaries and matrix metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrameError, InvalidInputError
from .linalg import bottleneck_assignment, jacobi_eigh

UNIT_NORM_TOL = 1e-9
MAX_RADIUS = math.sqrt(2.0)


class Dictionary:
    """A d x K matrix whose columns (atoms) have unit Euclidean norm.

    The atom array is copied and frozen. Columns that are not unit norm
    within 1e-9 are rejected rather than renormalised.
    """

    __slots__ = ("_atoms",)

    def __init__(self, atoms):
        A = np.array(atoms, dtype=float)
        if A.ndim != 2:
            raise InvalidInputError(f"atoms must be a 2-d array, got shape {A.shape}")
        d, K = A.shape
        if d < 1 or K < 1:
            raise InvalidInputError("dictionary must have at least one row and one atom")
        if d > K:
            raise InvalidInputError(f"d={d} exceeds K={K}")
        if not np.all(np.isfinite(A)):
            raise InvalidInputError("atoms contain non-finite entries")
        norms = np.linalg.norm(A, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise InvalidInputError(f"atoms {bad.tolist()} are not unit norm (norms {norms[bad]})")
        A.setflags(write=False)
        self._atoms = A

    @classmethod
    def from_columns(cls, M) -> "Dictionary":
        """Normalise the columns of ``M`` and wrap them."""
        M = np.asarray(M, dtype=float)
        norms = np.linalg.norm(M, axis=0)
        if np.any(norms == 0):
            raise InvalidInputError("cannot normalise a zero column")
        return cls(M / norms)

    @property
    def atoms(self) -> np.ndarray:
        return self._atoms

    @property
    def d(self) -> int:
        return self._atoms.shape[0]

    @property
    def K(self) -> int:
        return self._atoms.shape[1]

    @property
    def shape(self):
        return self._atoms.shape

    def __array__(self, dtype=None, copy=None):
        return np.array(self._atoms, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._atoms, other._atoms))

    def __hash__(self):
        return hash((self.shape, self._atoms.tobytes()))

    def __repr__(self):
        return f"Dictionary(d={self.d}, K={self.K})"


@dataclass(frozen=True)
class FrameStats:
    A: float
    B: float
    mu: float
    kappa: float


@dataclass(frozen=True)
class Perturbation:
    """Atom-wise perturbation psi_i = alpha_i phi_i + omega_i z_i of a base dictionary.

    ``radii[i]`` is the distance ||psi_i - phi_i||; ``directions[:, i]`` must be a unit
    vector orthogonal to phi_i whenever ``radii[i] > 0``.
    """

    base: Dictionary
    radii: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        radii = np.array(self.radii, dtype=float).reshape(-1)
        Z = np.array(self.directions, dtype=float)
        d, K = self.base.shape
        if radii.shape != (K,):
            raise InvalidInputError(f"need {K} radii, got {radii.shape}")
        if Z.shape != (d, K):
            raise InvalidInputError(f"directions must have shape {(d, K)}, got {Z.shape}")
        if np.any(radii < 0) or np.any(radii > MAX_RADIUS + 1e-15):
            raise InvalidInputError("radii must lie in [0, sqrt(2)]")
        active = radii > 0
        if np.any(active):
            Za = Z[:, active]
            norms = np.linalg.norm(Za, axis=0)
            inner = np.abs(np.sum(Za * self.base.atoms[:, active], axis=0))
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
                raise InvalidInputError("direction columns must be unit norm")
            if np.any(inner > UNIT_NORM_TOL):
                raise InvalidInputError("direction columns must be orthogonal to their atoms")
        radii.setflags(write=False)
        Z.setflags(write=False)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "directions", Z)

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 - self.radii**2 / 2.0

    @property
    def omega(self) -> np.ndarray:
        e = self.radii
        return np.sqrt(np.maximum(e**2 - e**4 / 4.0, 0.0))


def coherence(D: Dictionary) -> float:
    if D.K < 2:
        raise InvalidInputError("coherence needs at least two atoms")
    G = np.abs(D.atoms.T @ D.atoms)
    np.fill_diagonal(G, 0.0)
    return float(min(1.0, G.max()))


def frame_stats(D: Dictionary) -> FrameStats:
    """Frame bounds A, B as extreme eigenvalues of D D^T, plus coherence and condition number."""
    gram = D.atoms @ D.atoms.T
    w, _, _ = jacobi_eigh(gram, tol=1e-12)
    A, B = float(w[0]), float(w[-1])
    if A <= 1e-10:
        raise DegenerateFrameError(f"D D^T has smallest eigenvalue {A:.3e}; D does not span R^{D.d}")
    mu = coherence(D) if D.K >= 2 else 0.0
    return FrameStats(A=A, B=B, mu=mu, kappa=math.sqrt(B / A))


def _check_same_shape(D1: Dictionary, D2: Dictionary):
    if D1.shape != D2.shape:
        raise InvalidInputError(f"shape mismatch {D1.shape} vs {D2.shape}")


def distance_raw(D1: Dictionary, D2: Dictionary) -> float:
    """max_i ||phi_i - psi_i|| with fixed atom correspondence."""
    _check_same_shape(D1, D2)
    return float(np.linalg.norm(D1.atoms - D2.atoms, axis=0).max())


def _sign_min_columns(P, Q):
    plus = np.linalg.norm(P - Q, axis=0)
    minus = np.linalg.norm(P + Q, axis=0)
    return np.minimum(plus, minus)


def distance_sign_invariant(D1: Dictionary, D2: Dictionary) -> float:
    _check_same_shape(D1, D2)
    return float(_sign_min_columns(D1.atoms, D2.atoms).max())


def distance_matched(D1: Dictionary, D2: Dictionary):
    """Smallest max-atom distance over column permutations and signs of D2.

    Returns ``(distance, perm)`` where atom i of D1 is matched to atom ``perm[i]`` of D2.
    """
    _check_same_shape(D1, D2)
    P, Q = D1.atoms, D2.atoms
    diff = P[:, :, None] - Q[:, None, :]
    summ = P[:, :, None] + Q[:, None, :]
    cost = np.minimum(np.linalg.norm(diff, axis=0), np.linalg.norm(summ, axis=0))
    value, perm = bottleneck_assignment(cost)
    return value, perm


def realize_perturbation(P: Perturbation) -> Dictionary:
    """Atoms psi_i = alpha_i phi_i + omega_i z_i; exact copy of phi_i where the radius is zero."""
    Phi = P.base.atoms
    Psi = Phi * P.alpha + P.directions * P.omega
    zero = P.radii == 0
    Psi[:, zero] = Phi[:, zero]
    return Dictionary(Psi)


def random_tangent_directions(D: Dictionary, rng: np.random.Generator) -> np.ndarray:
    """Per atom, a uniformly random unit vector orthogonal to that atom."""
    Phi = D.atoms
    if D.d < 2:
        raise InvalidInputError("no tangent directions exist in dimension 1")
    Z = rng.standard_normal(Phi.shape)
    for _ in range(2):
        Z -= Phi * np.sum(Phi * Z, axis=0)
    return Z / np.linalg.norm(Z, axis=0)


def random_perturbation(D: Dictionary, radius, rng: np.random.Generator) -> Dictionary:
    """Realised perturbation with all radii equal to ``radius`` (or a radius vector)."""
    radii = np.broadcast_to(np.asarray(radius, dtype=float), (D.K,))
    return realize_perturbation(Perturbation(D, radii, random_tangent_directions(D, rng)))


def dict_canonical(d: int) -> Dictionary:
    if d < 1:
        raise InvalidInputError("d must be positive")
    return Dictionary(np.eye(d))


def hadamard(d: int) -> np.ndarray:
    """Sylvester Hadamard matrix with entries +-1."""
    if d < 1 or d & (d - 1):
        raise InvalidInputError(f"d={d} is not a power of two")
    H = np.ones((1, 1))
    while H.shape[0] < d:
        H = np.block([[H, H], [H, -H]])
    return H


def dict_canonical_half_hadamard(d: int) -> Dictionary:
    """Canonical basis of R^d followed by the first d/2 normalised Hadamard vectors (K = 3d/2)."""
    if d < 2:
        raise InvalidInputError("d must be at least 2")
    H = hadamard(d) / math.sqrt(d)
    return Dictionary(np.hstack([np.eye(d), H[:, : d // 2]]))


def dict_perturbed_basis_3d(t: float) -> Dictionary:
    """Atoms (e_i + t (1,1,1)) / ||e_i + t (1,1,1)|| in R^3."""
    if not 0.0 <= t <= 0.5:
        raise InvalidInputError("t must lie in [0, 0.5]")
    return Dictionary.from_columns(np.eye(3) + t * np.ones((3, 3)))
