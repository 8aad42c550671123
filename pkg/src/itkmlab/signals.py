"""Synthetic sparse training signals.

Two coefficient models are provided. The parametric generator draws a decaying
sequence with ``S`` large entries, a random tail up to ``T`` nonzeros and optional
noise. The simple model permutes and sign-flips one fixed sequence ``c``. In both,
the coefficient vector x of a signal is ``x[i] = sigma[i] * c[p[i]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .dictionary import Dictionary
from .errors import InvalidInputError, NumericalError

NoiseKind = Literal["gaussian", "bernoulli", "none"]


@dataclass(frozen=True)
class CoefficientSpec:
    S: int
    b: float
    T: int
    rho: float = 0.0
    noise_kind: NoiseKind = "none"

    def __post_init__(self):
        if self.S < 1 or self.T < self.S:
            raise InvalidInputError(f"need 1 <= S <= T, got S={self.S}, T={self.T}")
        if not 0.0 <= self.b < 1.0:
            raise InvalidInputError(f"b must lie in [0, 1), got {self.b}")
        if self.rho < 0:
            raise InvalidInputError("rho must be nonnegative")
        if self.noise_kind not in ("gaussian", "bernoulli", "none"):
            raise InvalidInputError(f"unknown noise kind {self.noise_kind!r}")
        if (self.rho == 0) != (self.noise_kind == "none"):
            raise InvalidInputError("rho = 0 exactly when noise_kind is 'none'")

    @classmethod
    def make(cls, S, b, T, rho=0.0, noise_kind: NoiseKind = "gaussian"):
        """Like the constructor, but ``rho = 0`` silently selects the noiseless model."""
        return cls(S, b, T, rho, noise_kind if rho > 0 else "none")

    def check_atoms(self, K: int):
        if self.T > K:
            raise InvalidInputError(f"T={self.T} exceeds the number of atoms K={K}")


@dataclass(frozen=True)
class SimpleSequenceSpec:
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        if c.size == 0 or np.any(c < 0):
            raise InvalidInputError("c must be a nonempty nonnegative sequence")
        if np.any(np.diff(c) > 0):
            raise InvalidInputError("c must be nonincreasing")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise InvalidInputError(f"c must have unit norm, got {np.linalg.norm(c)}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def K(self) -> int:
        return self.c.size


@dataclass
class Provenance:
    coefficients: np.ndarray  # (N, K) drawn sequences c, before permutation and signs
    perms: np.ndarray  # (N, K) permutations p
    signs: np.ndarray  # (N, K) sign vectors sigma
    noise: Optional[np.ndarray] = None  # (d, N) noise draws r

    def sparse_coefficients(self) -> np.ndarray:
        """The (K, N) matrix of coefficient vectors x_n = c_{p, sigma}."""
        return (self.signs * np.take_along_axis(self.coefficients, self.perms, axis=1)).T


@dataclass
class SignalBatch:
    Y: np.ndarray
    provenance: Optional[Provenance] = None

    @property
    def d(self) -> int:
        return self.Y.shape[0]

    @property
    def N(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx) -> "SignalBatch":
        return SignalBatch(self.Y[:, idx])


def _draw_sequences(spec: CoefficientSpec, K: int, n: int, rng: np.random.Generator) -> np.ndarray:
    S, T = spec.S, spec.T
    cb = rng.uniform(1.0 - spec.b, 1.0, size=n)
    C = np.zeros((n, K))
    C[:, :S] = cb[:, None] ** np.arange(1, S + 1) / math.sqrt(S)
    if T == S:
        C[:, :S] /= np.linalg.norm(C[:, :S], axis=1, keepdims=True)
    else:
        R2 = 1.0 - np.sum(C[:, :S] ** 2, axis=1)
        if np.any(R2 < -1e-12):
            raise NumericalError(f"negative tail energy {R2.min():.3e}")
        R = np.sqrt(np.maximum(R2, 0.0))
        tail = rng.standard_normal((n, T - S))
        tail /= np.linalg.norm(tail, axis=1, keepdims=True)
        C[:, S:T] = tail * R[:, None]
    return C


def _draw_arrangements(K: int, n: int, rng: np.random.Generator):
    perms = rng.permuted(np.tile(np.arange(K), (n, 1)), axis=1)
    signs = 2.0 * rng.integers(0, 2, size=(n, K)) - 1.0
    return perms, signs


def draw_table1_coefficients(spec: CoefficientSpec, K: int, rng: np.random.Generator):
    """One draw ``(c, p, sigma)`` of the parametric coefficient model.

    ``c`` is the unpermuted sequence: entries 1..S decay geometrically with a
    random factor in [1-b, 1], entries S+1..T lie on a sphere completing the unit
    norm, the rest are zero. Tail entries are signed and are not re-sorted.
    """
    spec.check_atoms(K)
    C = _draw_sequences(spec, K, 1, rng)
    perms, signs = _draw_arrangements(K, 1, rng)
    return C[0], perms[0], signs[0]


def _noise(spec: CoefficientSpec, d: int, N: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    if spec.noise_kind == "none":
        return None
    if spec.noise_kind == "gaussian":
        return spec.rho * rng.standard_normal((d, N))
    return spec.rho * (2.0 * rng.integers(0, 2, size=(d, N)) - 1.0)


def synthesize(
    D: Dictionary,
    spec: CoefficientSpec,
    N: int,
    rng: np.random.Generator,
    keep_provenance: bool = False,
) -> SignalBatch:
    """Draw N signals ``y = D x`` or, with noise r, ``y = (D x + r) / sqrt(1 + ||r||^2)``."""
    spec.check_atoms(D.K)
    if N < 0:
        raise InvalidInputError("N must be nonnegative")
    C = _draw_sequences(spec, D.K, N, rng)
    perms, signs = _draw_arrangements(D.K, N, rng)
    prov = Provenance(C, perms, signs)
    Y = D.atoms @ prov.sparse_coefficients()
    r = _noise(spec, D.d, N, rng)
    if r is not None:
        Y = (Y + r) / np.sqrt(1.0 + np.sum(r * r, axis=0))
        prov.noise = r
    return SignalBatch(Y, prov if keep_provenance else None)


def draw_simple_signals(D: Dictionary, spec: SimpleSequenceSpec, N: int, rng: np.random.Generator) -> SignalBatch:
    """Signals ``D c_{p, sigma}`` with uniformly random permutation p and signs sigma."""
    if spec.K != D.K:
        raise InvalidInputError(f"sequence length {spec.K} does not match K={D.K}")
    perms, signs = _draw_arrangements(D.K, N, rng)
    C = np.broadcast_to(spec.c, (N, D.K)).copy()
    prov = Provenance(C, perms, signs)
    return SignalBatch(D.atoms @ prov.sparse_coefficients(), prov)


def mean_rearranged_coefficients(spec: CoefficientSpec, K: int, M: int, rng: np.random.Generator):
    """Monte Carlo mean of the nonincreasing rearrangement of |x|, with per-entry standard errors."""
    spec.check_atoms(K)
    if M < 1:
        raise InvalidInputError("M must be at least 1")
    C = _draw_sequences(spec, K, M, rng)
    R = -np.sort(-np.abs(C), axis=1)
    mean = R.mean(axis=0)
    if M > 1:
        stderr = R.std(axis=0, ddof=1) / math.sqrt(M)
    else:
        stderr = np.zeros(K)
    return mean, stderr


def gap_beta(c, mu: float, S: int, mode: Literal["exact_model", "stable_model"] = "exact_model") -> float:
    """Gap between the S-th and (S+1)-th largest coefficients.

    ``exact_model`` subtracts the coherence penalty 2 mu ||c||_1. The result may be
    negative. ``c[K]`` (one past the end) is taken as 0.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    K = c.size
    if not 1 <= S <= K:
        raise InvalidInputError(f"S={S} outside 1..K={K}")
    if np.any(np.diff(c) > 0):
        raise InvalidInputError("c must be nonincreasing")
    nxt = c[S] if S < K else 0.0
    gap = c[S - 1] - nxt
    if mode == "exact_model":
        return float(gap - 2.0 * mu * np.abs(c).sum())
    if mode == "stable_model":
        return float(gap)
    raise InvalidInputError(f"unknown mode {mode!r}")
