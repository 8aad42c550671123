"""Iterative Thresholding and K signed Means (ITKM).

One step thresholds every signal against the current dictionary, then replaces
each atom by the normalised sum of the signals that selected it, each signed by
its response to that atom.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional

import numpy as np

from .criterion import _sign, objective_finite, select_supports
from .dictionary import Dictionary, distance_raw, distance_sign_invariant
from .errors import InvalidInputError
from .signals import SignalBatch

Safeguard = Literal["resample_sphere", "resample_signal"]
ZERO_UPDATE_TOL = 1e-12


@dataclass(frozen=True)
class ItkmConfig:
    S: int = 1
    iterations: int = 1000
    tol: float = 0.0
    safeguard: Safeguard = "resample_sphere"
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidInputError("iterations must be at least 1")
        if not self.tol >= 0:
            raise InvalidInputError("tol must be nonnegative")
        if self.safeguard not in ("resample_sphere", "resample_signal"):
            raise InvalidInputError(f"unknown safeguard {self.safeguard!r}")


@dataclass
class ItkmTrace:
    objective: list = field(default_factory=list)  # objective of the dictionary entering each step
    distance: list = field(default_factory=list)  # sign-invariant distance of each new iterate to the reference
    safeguard_events: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.objective)


def _as_matrix(Y) -> np.ndarray:
    Y = Y.Y if isinstance(Y, SignalBatch) else np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise InvalidInputError("signals must be a d x N matrix")
    return Y


def signed_sums(atoms: np.ndarray, Y: np.ndarray, S: int) -> np.ndarray:
    """Unnormalised update: column k is the sum of sign(<psi_k, y>) y over signals selecting k."""
    K, N = atoms.shape[1], Y.shape[1]
    R = atoms.T @ Y
    idx = select_supports(R, S)
    cols = np.broadcast_to(np.arange(N), idx.shape)
    W = np.zeros((K, N))
    W[idx, cols] = _sign(R[idx, cols])
    return Y @ W.T


def normalise_with_safeguard(U: np.ndarray, safeguard: Safeguard, rng: Optional[np.random.Generator], Y=None):
    """Normalise columns; columns with norm <= 1e-12 are redrawn by the safeguard rule.

    Returns:
        (Dictionary, number of redrawn atoms)
    """
    U = np.array(U, dtype=float)
    norms = np.linalg.norm(U, axis=0)
    zero = np.flatnonzero(norms <= ZERO_UPDATE_TOL)
    for k in zero:
        if rng is None:
            raise InvalidInputError("a zero update needs a generator for the safeguard")
        if safeguard == "resample_signal" and Y is not None and Y.shape[1] > 0:
            v = Y[:, rng.integers(Y.shape[1])]
            if np.linalg.norm(v) <= ZERO_UPDATE_TOL:
                v = rng.standard_normal(U.shape[0])
        else:
            v = rng.standard_normal(U.shape[0])
        U[:, k] = v
        norms[k] = np.linalg.norm(v)
    return Dictionary(U / norms), int(zero.size)


def itkm_step(Psi: Dictionary, Y, S: int, safeguard: Safeguard = "resample_sphere", rng=None):
    """One ITKM iteration. Returns ``(new dictionary, safeguard events)``."""
    Y = _as_matrix(Y)
    if Y.shape[1] == 0:
        raise InvalidInputError("empty batch")
    if Y.shape[0] != Psi.d:
        raise InvalidInputError("signal dimension does not match the dictionary")
    U = signed_sums(Psi.atoms, Y, S)
    return normalise_with_safeguard(U, safeguard, rng, Y)


def itkm_run(Psi0: Dictionary, Y, config: ItkmConfig, reference: Optional[Dictionary] = None):
    """Iterate ``itkm_step`` up to ``config.iterations`` times.

    Stops early when an update moves no atom by more than ``config.tol``
    (raw distance); ``tol = 0`` only stops on an exact fixed point.
    """
    Y = _as_matrix(Y)
    rng = np.random.default_rng(config.seed)
    trace = ItkmTrace()
    Psi = Psi0
    for _ in range(config.iterations):
        trace.objective.append(objective_finite(Psi, Y, config.S))
        new, events = itkm_step(Psi, Y, config.S, config.safeguard, rng)
        trace.safeguard_events.append(events)
        if reference is not None:
            trace.distance.append(distance_sign_invariant(reference, new))
        moved = distance_raw(Psi, new)
        Psi = new
        if config.tol > 0 and moved <= config.tol or moved == 0.0:
            break
    return Psi, trace


def itkm_online(
    Psi0: Dictionary,
    signals: Iterable,
    S: int,
    block_size: int,
    safeguard: Safeguard = "resample_sphere",
    rng=None,
) -> Dictionary:
    """Streaming ITKM: accumulate signed signals one at a time, renormalise every ``block_size`` signals.

    Supports and signs within a block are computed with the dictionary in force
    at the start of the block. A trailing partial block is applied as a final step.
    """
    if block_size < 1:
        raise InvalidInputError("block size must be positive")
    Psi = Psi0
    U = np.zeros(Psi.shape)
    seen = []
    count = 0
    for y in signals:
        y = np.asarray(y, dtype=float).reshape(-1)
        r = Psi.atoms.T @ y
        idx = select_supports(r[:, None], S)[:, 0]
        U[:, idx] += y[:, None] * _sign(r[idx])
        if safeguard == "resample_signal":
            seen.append(y)
        count += 1
        if count == block_size:
            Psi, _ = normalise_with_safeguard(U, safeguard, rng, np.array(seen).T if seen else None)
            U = np.zeros(Psi.shape)
            seen = []
            count = 0
    if count:
        Psi, _ = normalise_with_safeguard(U, safeguard, rng, np.array(seen).T if seen else None)
    elif Psi is Psi0:
        raise InvalidInputError("empty block: the stream produced no signals")
    return Psi


def itkm_parallel(
    Psi0: Dictionary,
    Y,
    S: int,
    m: int,
    safeguard: Safeguard = "resample_sphere",
    rng=None,
    jobs: int = 1,
) -> Dictionary:
    """ITKM step computed on m contiguous chunks whose unnormalised updates are summed in chunk order."""
    Y = _as_matrix(Y)
    N = Y.shape[1]
    if m < 1:
        raise InvalidInputError("m must be at least 1")
    if m > N:
        raise InvalidInputError(f"m={m} exceeds the number of signals N={N}")
    chunks = np.array_split(np.arange(N), m)
    atoms = Psi0.atoms

    def part(ix):
        return signed_sums(atoms, Y[:, ix], S)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            partials = list(ex.map(part, chunks))
    else:
        partials = [part(ix) for ix in chunks]
    U = partials[0].copy()
    for P in partials[1:]:
        U += P
    return normalise_with_safeguard(U, safeguard, rng, Y)[0]
