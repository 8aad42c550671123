"""Closed-form identification conditions and bounds.

All logarithms are natural. Failure probabilities are returned as the raw
expression (possibly > 1); use ``clamp_probability`` for display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .dictionary import Dictionary, frame_stats
from .errors import DomainError, InvalidInputError
from .signals import CoefficientSpec, _draw_sequences, gap_beta, mean_rearranged_coefficients


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def clamp_probability(p: float) -> float:
    return min(1.0, max(0.0, p))


def thm1_eps_bound(beta, K, S, B, gamma) -> float:
    """Perturbation radius below which the generating dictionary beats every eps-perturbation."""
    _positive(beta=beta, gamma=gamma, K=K, S=S, B=B)
    arg = 25.0 * K**2 * S * math.sqrt(B) / (beta * gamma)
    if arg <= 1.0:
        raise DomainError(f"log argument {arg} must exceed 1")
    return beta / (1.0 + 3.0 * math.sqrt(math.log(arg)))


def _loglog_rhs(a: float, beta: float) -> float:
    if a <= math.e:
        raise DomainError(f"a = {a} must exceed e")
    return beta / math.sqrt(72.0 * (math.log(a) + math.log(math.log(a))))


def _coherence_noise_term(beta, mu, rho):
    m = max(mu, rho)
    if m == 0:
        return 0.0
    return math.exp(-(beta**2) / (72.0 * m * m))


@dataclass(frozen=True)
class Thm2Result:
    rhs: float
    holds: bool
    asymptotic_distance: float


def thm2_check(mu, rho, beta, K, S, B, C_r, gamma) -> Thm2Result:
    _positive(beta=beta, gamma=gamma, C_r=C_r, K=K, S=S, B=B)
    if mu < 0 or rho < 0:
        raise DomainError("mu and rho must be nonnegative")
    a = 112.0 * K**2 * S * (math.sqrt(B) + 1.0) / (C_r * beta * gamma)
    rhs = _loglog_rhs(a, beta)
    dist = 12.0 * S * K**2 * math.sqrt(B) / (C_r * gamma) * _coherence_noise_term(beta, mu, rho)
    return Thm2Result(rhs, max(mu, rho) <= rhs, dist)


def thm3_log_failure_probability(N, eps_tilde, K, d, S, B, gamma) -> float:
    _positive(eps_tilde=eps_tilde, gamma=gamma, K=K, d=d, S=S, B=B)
    if N < 0:
        raise DomainError("N must be nonnegative")
    expo = -N * eps_tilde**2 * gamma**2 / (129.0 * S**2 * K**2 * B) + K * d * math.log(
        25.0 * S * K * math.sqrt(B) / (eps_tilde * gamma)
    )
    return math.log(2.0) + expo


def thm3_failure_probability(N, eps_tilde, K, d, S, B, gamma) -> float:
    return _exp(thm3_log_failure_probability(N, eps_tilde, K, d, S, B, gamma))


def thm3_precision_check(eps_tilde, beta, K, S, B, gamma) -> bool:
    _positive(eps_tilde=eps_tilde, beta=beta, gamma=gamma, K=K, S=S, B=B)
    arg = 50.0 * K**2 * S * math.sqrt(B) / (beta * gamma)
    if arg <= 1.0:
        raise DomainError(f"log argument {arg} must exceed 1")
    return eps_tilde <= beta / (1.0 + 3.0 * math.sqrt(math.log(arg)))


def thm3_max_distance(eps_tilde, K) -> float:
    return eps_tilde + eps_tilde**2 / (4.0 * K)


@dataclass(frozen=True)
class Thm4Result:
    eps_mu_rho: float
    failure_prob: float
    max_distance: float
    conditions_hold: bool
    log_failure_prob: float = field(default=math.nan, compare=False)


def thm4_quantities(N, eps_tilde, mu, rho, K, d, S, B, C_r, gamma, beta) -> Thm4Result:
    _positive(eps_tilde=eps_tilde, beta=beta, gamma=gamma, C_r=C_r, K=K, d=d, S=S, B=B)
    if mu < 0 or rho < 0 or N < 0:
        raise DomainError("mu, rho and N must be nonnegative")
    sb1 = math.sqrt(B) + 1.0
    floor = 16.0 * S * K**2 * sb1 / (C_r * gamma) * _coherence_noise_term(beta, mu, rho)
    e = max(eps_tilde, floor)
    log_p = math.log(2.0) + (
        -N * e**2 * gamma**2 / (513.0 * C_r**2 * S**2 * K**2 * sb1**2)
        + K * d * math.log(49.0 * S * K * sb1 / (e * gamma))
    )
    a = 150.0 * K**2 * S * sb1 / (C_r * beta * gamma)
    if a <= math.e:
        raise DomainError(f"a = {a} must exceed e")
    ok = eps_tilde <= beta / (9.0 / 4.0 + 9.0 * math.sqrt(math.log(a))) and max(mu, rho) <= _loglog_rhs(a, beta)
    return Thm4Result(e, _exp(log_p), e + e**2 / (16.0 * K), ok, log_p)


def noise_constant_C_r(
    rho: float,
    d: int,
    kind: Literal["gaussian", "bernoulli", "none"] = "gaussian",
    M: int = 100_000,
    rng: Optional[np.random.Generator] = None,
):
    """E (1 + ||r||^2)^(-1/2) for noise with per-entry scale rho.

    Bernoulli (+-rho) noise has constant norm, giving the closed form
    (1 + d rho^2)^(-1/2). Gaussian noise is estimated by Monte Carlo.

    Returns:
        (estimate, standard error)
    """
    if rho < 0 or d < 1:
        raise InvalidInputError("need rho >= 0 and d >= 1")
    if rho == 0 or kind == "none":
        return 1.0, 0.0
    if kind == "bernoulli":
        return (1.0 + d * rho * rho) ** -0.5, 0.0
    if kind != "gaussian":
        raise InvalidInputError(f"unknown noise kind {kind!r}")
    if M < 1:
        raise InvalidInputError("M must be at least 1")
    if rng is None:
        rng = np.random.default_rng(0)
    r = rho * rng.standard_normal((M, d))
    v = 1.0 / np.sqrt(1.0 + np.sum(r * r, axis=1))
    se = float(v.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0
    return float(v.mean()), se


def gaussian_C_r_lower_bound(rho: float, d: int) -> float:
    return (1.0 - math.exp(-d)) / math.sqrt(1.0 + 5.0 * d * rho * rho)


@dataclass
class BoundReport:
    beta: float
    beta_exact: float
    mu: float
    A: float
    B: float
    S: int
    K: int
    d: int
    c_bar: np.ndarray
    c_bar_stderr: np.ndarray
    gamma: float
    gamma_interval: tuple
    C_r: float
    C_r_stderr: float
    eps_max_thm1: Optional[float]
    thm2_condition_rhs: Optional[float]
    thm2_holds: Optional[bool]
    thm2_asymptotic_distance: Optional[float]
    eps_tilde: float
    thm3_precision_ok: Optional[bool]
    thm3_failure_prob: dict
    thm4_eps_tilde_mu_rho: Optional[float]
    thm4_conditions_hold: Optional[bool]
    thm4_failure_prob: dict

    def rows(self):
        """Flat (name, value) pairs for tabular output."""
        out = [
            ("beta", self.beta),
            ("beta_exact", self.beta_exact),
            ("mu", self.mu),
            ("A", self.A),
            ("B", self.B),
            ("S", self.S),
            ("K", self.K),
            ("d", self.d),
            ("gamma", self.gamma),
            ("gamma_lo", self.gamma_interval[0]),
            ("gamma_hi", self.gamma_interval[1]),
            ("C_r", self.C_r),
            ("C_r_stderr", self.C_r_stderr),
            ("eps_max_thm1", self.eps_max_thm1),
            ("thm2_condition_rhs", self.thm2_condition_rhs),
            ("thm2_holds", self.thm2_holds),
            ("thm2_asymptotic_distance", self.thm2_asymptotic_distance),
            ("eps_tilde", self.eps_tilde),
            ("thm3_precision_ok", self.thm3_precision_ok),
            ("thm4_eps_tilde_mu_rho", self.thm4_eps_tilde_mu_rho),
            ("thm4_conditions_hold", self.thm4_conditions_hold),
        ]
        out += [(f"c_bar_{i + 1}", v) for i, v in enumerate(self.c_bar)]
        out += [(f"thm3_failure_prob_N{n}", v) for n, v in self.thm3_failure_prob.items()]
        out += [(f"thm4_failure_prob_N{n}", v) for n, v in self.thm4_failure_prob.items()]
        return out


def _try(f, *args):
    try:
        return f(*args)
    except DomainError:
        return None


def empirical_gaps(spec: CoefficientSpec, K: int, mu: float, M: int, rng: np.random.Generator):
    """Smallest observed gaps (stable and exact model) of the rearranged coefficients over M draws."""
    C = -np.sort(-np.abs(_draw_sequences(spec, K, M, rng)), axis=1)
    stable = min(gap_beta(c, mu, spec.S, "stable_model") for c in C)
    exact = min(gap_beta(c, mu, spec.S, "exact_model") for c in C)
    return stable, exact


def bound_report(
    D: Dictionary,
    spec: CoefficientSpec,
    eps_tilde: float,
    Ns: Sequence[int] = (),
    M: int = 100_000,
    rng: Optional[np.random.Generator] = None,
    beta: Optional[float] = None,
) -> BoundReport:
    """Evaluate every theorem quantity for a dictionary and coefficient model.

    ``beta`` defaults to the smallest gap seen in M draws, an optimistic estimate
    of the almost-sure gap. The exact-model gap always uses that empirical minimum.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    spec.check_atoms(D.K)
    fs = frame_stats(D)
    S, K, d = spec.S, D.K, D.d
    c_bar, c_se = mean_rearranged_coefficients(spec, K, M, rng)
    gamma = float(c_bar[:S].sum())
    g_se = float(np.sqrt(np.sum(c_se[:S] ** 2)))
    gamma_interval = (gamma - 2.0 * g_se, gamma + 2.0 * g_se)
    C_r, C_r_se = noise_constant_C_r(spec.rho, d, spec.noise_kind, M, rng)
    beta_stable, beta_exact = empirical_gaps(spec, K, fs.mu, min(M, 20_000), rng)
    if beta is None:
        beta = beta_stable

    eps1 = _try(thm1_eps_bound, beta_exact, K, S, fs.B, gamma) if beta_exact > 0 else None
    t2 = _try(thm2_check, fs.mu, spec.rho, beta, K, S, fs.B, C_r, gamma) if beta > 0 else None
    prec = _try(thm3_precision_check, eps_tilde, beta_exact, K, S, fs.B, gamma) if beta_exact > 0 else None
    p3 = {int(n): thm3_failure_probability(n, eps_tilde, K, d, S, fs.B, gamma) for n in Ns}
    t4 = {int(n): _try(thm4_quantities, n, eps_tilde, fs.mu, spec.rho, K, d, S, fs.B, C_r, gamma, beta) for n in Ns}
    t4_any = next((v for v in t4.values() if v is not None), None)
    if t4_any is None and beta > 0:
        t4_any = _try(thm4_quantities, 0, eps_tilde, fs.mu, spec.rho, K, d, S, fs.B, C_r, gamma, beta)

    return BoundReport(
        beta=beta,
        beta_exact=beta_exact,
        mu=fs.mu,
        A=fs.A,
        B=fs.B,
        S=S,
        K=K,
        d=d,
        c_bar=c_bar,
        c_bar_stderr=c_se,
        gamma=gamma,
        gamma_interval=gamma_interval,
        C_r=C_r,
        C_r_stderr=C_r_se,
        eps_max_thm1=eps1,
        thm2_condition_rhs=t2.rhs if t2 else None,
        thm2_holds=t2.holds if t2 else None,
        thm2_asymptotic_distance=t2.asymptotic_distance if t2 else None,
        eps_tilde=eps_tilde,
        thm3_precision_ok=prec,
        thm3_failure_prob=p3,
        thm4_eps_tilde_mu_rho=t4_any.eps_mu_rho if t4_any else None,
        thm4_conditions_hold=t4_any.conditions_hold if t4_any else None,
        thm4_failure_prob={n: (v.failure_prob if v else None) for n, v in t4.items()},
    )
