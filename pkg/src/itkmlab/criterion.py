"""The S-response criterion: thresholding, finite-sample objective and exact expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional

import numpy as np

from .dictionary import Dictionary, random_perturbation
from .errors import BudgetExceededError, InvalidInputError
from .signals import SignalBatch, SimpleSequenceSpec

DEFAULT_BUDGET = 10_000_000
_CHUNK = 1 << 16


@dataclass(frozen=True)
class SupportSelection:
    indices: tuple
    signs: tuple


def _sign(x):
    # sign(0) := +1
    return np.where(x >= 0, 1.0, -1.0)


def select_supports(R: np.ndarray, S: int) -> np.ndarray:
    """Row indices of the S largest |R| in every column, ties to the lowest index.

    Returns an (S, N) integer array in order of decreasing magnitude.
    """
    K = R.shape[0]
    if not 1 <= S <= K:
        raise InvalidInputError(f"S={S} outside 1..K={K}")
    A = np.abs(R)
    if S == 1:
        return np.argmax(A, axis=0)[None, :]
    return np.argsort(-A, axis=0, kind="stable")[:S]


def support_threshold(Psi: Dictionary, y, S: int) -> SupportSelection:
    y = np.asarray(y, dtype=float).reshape(-1)
    r = Psi.atoms.T @ y
    idx = np.sort(select_supports(r[:, None], S)[:, 0])
    return SupportSelection(tuple(int(i) for i in idx), tuple(int(s) for s in _sign(r[idx])))


def _top_s_sums(R: np.ndarray, S: int) -> np.ndarray:
    """Per column, the sum of the S largest absolute entries."""
    A = np.abs(R)
    if S == 1:
        return A.max(axis=0)
    if S == A.shape[0]:
        return A.sum(axis=0)
    part = np.partition(A, A.shape[0] - S, axis=0)
    return part[A.shape[0] - S :].sum(axis=0)


def objective_finite(Psi: Dictionary, Y, S: int) -> float:
    """(1/N) sum_n max_{|I|=S} ||Psi_I^T y_n||_1."""
    Y = Y.Y if isinstance(Y, SignalBatch) else np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] == 0:
        raise InvalidInputError("objective needs a nonempty batch of signals")
    if not 1 <= S <= Psi.K:
        raise InvalidInputError(f"S={S} outside 1..K={Psi.K}")
    return float(_top_s_sums(Psi.atoms.T @ Y, S).mean())


def distinct_placements(c) -> Iterable[np.ndarray]:
    """Every distinct rearrangement of the multiset of entries of ``c``."""
    c = np.asarray(c, dtype=float)
    values, counts = np.unique(c, return_counts=True)
    order = np.argsort(-values, kind="stable")
    values, counts = values[order], counts[order]
    K = c.size

    def rec(free, level, current):
        if level == len(values):
            yield current.copy()
            return
        for pos in combinations(free, int(counts[level])):
            current[list(pos)] = values[level]
            rest = tuple(f for f in free if f not in pos)
            yield from rec(rest, level + 1, current)

    yield from rec(tuple(range(K)), 0, np.zeros(K))


def enumeration_size(c) -> int:
    """Number of (placement, sign pattern) pairs the exact expectation enumerates."""
    c = np.asarray(c, dtype=float)
    _, counts = np.unique(c, return_counts=True)
    placements = math.factorial(c.size)
    for m in counts:
        placements //= math.factorial(int(m))
    return placements * 2 ** int(np.count_nonzero(c))


def _sign_patterns(n: int) -> np.ndarray:
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


def objective_expectation_bruteforce(
    Psi: Dictionary,
    Phi: Dictionary,
    c: SimpleSequenceSpec,
    S: int,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Exact E_{p,sigma} max_{|I|=S} ||Psi_I^T Phi c_{p,sigma}||_1.

    Enumerates each distinct placement of the values of ``c`` once, together with
    all sign patterns on its nonzero entries. Every such pair carries the same
    probability, so the expectation is their plain average.
    """
    if Psi.shape != Phi.shape:
        raise InvalidInputError("Psi and Phi must have the same shape")
    if c.K != Phi.K:
        raise InvalidInputError(f"sequence length {c.K} does not match K={Phi.K}")
    if not 1 <= S <= Phi.K:
        raise InvalidInputError(f"S={S} outside 1..K={Phi.K}")
    total = enumeration_size(c.c)
    if total > budget:
        raise BudgetExceededError(total, budget)

    M = Psi.atoms.T @ Phi.atoms
    nnz = int(np.count_nonzero(c.c))
    signs = _sign_patterns(nnz)
    per_chunk = max(1, _CHUNK // len(signs))
    acc = 0.0
    batch = []

    def flush(batch):
        P = np.array(batch)  # (n, K)
        nzpos = np.nonzero(P)[1].reshape(len(P), nnz)
        X = np.repeat(P[:, None, :], len(signs), axis=1)  # (n, 2^nnz, K)
        rows = np.arange(len(P))[:, None, None]
        pats = np.arange(len(signs))[None, :, None]
        X[rows, pats, nzpos[:, None, :]] *= signs[None, :, :]
        X = X.reshape(-1, P.shape[1]).T
        return float(_top_s_sums(M @ X, S).sum())

    for placement in distinct_placements(c.c):
        batch.append(placement)
        if len(batch) == per_chunk:
            acc += flush(batch)
            batch = []
    if batch:
        acc += flush(batch)
    return acc / total


def example1_dictionary(d: int, eps: float) -> Dictionary:
    """Canonical basis with the last atom tilted towards the first: (e_d + eps e_1)/sqrt(1 + eps^2)."""
    if d < 2:
        raise InvalidInputError("d must be at least 2")
    U = np.eye(d)
    U[0, d - 1] = eps
    U[:, d - 1] /= math.sqrt(1.0 + eps * eps)
    return Dictionary(U)


def flat_two_sparse(d: int) -> SimpleSequenceSpec:
    c = np.zeros(d)
    c[:2] = 1.0 / math.sqrt(2.0)
    return SimpleSequenceSpec(c)


def example1_closed_form(d: int, eps: float) -> float:
    if d < 2 or eps < 0:
        raise InvalidInputError("need d >= 2 and eps >= 0")
    w = 1.0 / (d * (d - 1))
    return (1.0 - w + w * (1.0 + eps) / math.sqrt(1.0 + eps * eps)) / math.sqrt(2.0)


def example1_bruteforce(d: int, eps: float) -> float:
    """E ||U_eps^T y||_inf for flat 2-sparse signals in the canonical basis, by enumeration."""
    if d < 2 or eps < 0:
        raise InvalidInputError("need d >= 2 and eps >= 0")
    return objective_expectation_bruteforce(example1_dictionary(d, eps), Dictionary(np.eye(d)), flat_two_sparse(d), 1)


@dataclass
class ProbeReport:
    value_at_base: float
    values: np.ndarray
    differences: np.ndarray

    @property
    def max_difference(self) -> float:
        return float(self.differences.max()) if self.differences.size else -math.inf

    @property
    def consistent_with_local_max(self) -> bool:
        """True when no probe found a larger expectation (a falsification test, not a proof)."""
        return bool(np.all(self.differences < 0))


def local_max_probe(
    Phi: Dictionary,
    c: SimpleSequenceSpec,
    S: int,
    n_directions: int,
    eps_probe: float,
    rng: Optional[np.random.Generator] = None,
    candidates: Optional[Iterable[Dictionary]] = None,
    budget: int = DEFAULT_BUDGET,
) -> ProbeReport:
    """Compare the exact expectation at Phi with its value at perturbed dictionaries.

    By default ``n_directions`` random perturbations moving every atom by
    ``eps_probe`` are probed; ``candidates`` replaces them with explicit dictionaries.
    """
    base = objective_expectation_bruteforce(Phi, Phi, c, S, budget)
    if candidates is None:
        if rng is None:
            raise InvalidInputError("random probing needs a generator")
        candidates = (random_perturbation(Phi, eps_probe, rng) for _ in range(n_directions))
    values = np.array([objective_expectation_bruteforce(P, Phi, c, S, budget) for P in candidates])
    return ProbeReport(base, values, values - base)
