"""K-SVD with one atom per signal, the comparison baseline for ITKM.

Signals are clustered by their largest absolute response and each atom is
replaced by the leading eigenvector of its cluster's Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criterion import objective_finite
from .dictionary import Dictionary, distance_raw, distance_sign_invariant
from .itkm import ItkmConfig, Safeguard, _as_matrix, normalise_with_safeguard
from .linalg import power_iteration


def partition(Psi: Dictionary, Y: np.ndarray) -> np.ndarray:
    """Index of the atom with maximal |<psi_k, y_n>| for each signal (ties to the lowest index)."""
    return np.argmax(np.abs(Psi.atoms.T @ Y), axis=0)


def ksvd1_step(Psi: Dictionary, Y, safeguard: Safeguard = "resample_sphere", rng=None) -> Dictionary:
    Y = _as_matrix(Y)
    if rng is None:
        rng = np.random.default_rng(0)
    labels = partition(Psi, Y)
    U = np.zeros(Psi.shape)
    for k in range(Psi.K):
        Yk = Y[:, labels == k]
        if Yk.shape[1] == 0 or not np.any(Yk):
            continue  # zero column, handled by the safeguard
        _, w = power_iteration(Yk @ Yk.T, rng)
        if w @ Psi.atoms[:, k] < 0:
            w = -w
        U[:, k] = w
    return normalise_with_safeguard(U, safeguard, rng, Y)[0]


@dataclass
class KsvdTrace:
    objective: list = field(default_factory=list)
    distance: list = field(default_factory=list)


def ksvd1_run(Psi0: Dictionary, Y, config: ItkmConfig, reference: Optional[Dictionary] = None):
    """Iterate ``ksvd1_step``; ``config.S`` is ignored (always one atom per signal)."""
    Y = _as_matrix(Y)
    rng = np.random.default_rng(config.seed)
    trace = KsvdTrace()
    Psi = Psi0
    for _ in range(config.iterations):
        trace.objective.append(objective_finite(Psi, Y, 1))
        new = ksvd1_step(Psi, Y, config.safeguard, rng)
        if reference is not None:
            trace.distance.append(distance_sign_invariant(reference, new))
        moved = distance_raw(Psi, new)
        Psi = new
        if config.tol > 0 and moved <= config.tol:
            break
    return Psi, trace
