"""Monte Carlo recovery experiments with oracle initialisation.

Every trial draws fresh signals from a seed derived from (master seed,
experiment, grid point, trial index), so any single trial can be rerun alone.
"""

from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import spearmanr

from .criterion import objective_finite
from .dictionary import (
    Dictionary,
    dict_canonical_half_hadamard,
    dict_perturbed_basis_3d,
    distance_matched,
    distance_raw,
    distance_sign_invariant,
)
from .errors import InvalidInputError
from .itkm import ItkmConfig, itkm_run
from .ksvd import ksvd1_run
from .signals import CoefficientSpec, synthesize

EXPERIMENTS = ("fig1a", "fig1b", "fig2a", "fig2b", "bounds", "probe")


def _steps(lo, hi, step):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


@dataclass
class ExperimentConfig:
    experiment: str
    dims: list
    S: list
    b: list
    rho: list = field(default_factory=lambda: [0.0])
    N: list = field(default_factory=lambda: [4096])
    t: list = field(default_factory=lambda: [0.0])
    T_extra: int = 1  # T = S + T_extra
    pairs: Optional[list] = None  # explicit (d, S) curves; replaces the dims x S product
    trials: int = 10
    iterations: int = 1000
    seed: int = 0
    out: str = "results"
    jobs: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {self.experiment!r}")
        for name in ("dims", "S", "b", "rho", "N", "t"):
            if not getattr(self, name):
                raise InvalidInputError(f"grid {name!r} is empty")
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if self.iterations < 1:
            raise InvalidInputError("iterations must be at least 1")
        if self.T_extra < 0:
            raise InvalidInputError("T_extra must be nonnegative")
        if self.pairs is not None:
            self.pairs = [tuple(int(v) for v in p) for p in self.pairs]
            if not self.pairs or any(len(p) != 2 for p in self.pairs):
                raise InvalidInputError("pairs must be a nonempty list of (d, S)")

    def dim_sparsity_pairs(self):
        if self.pairs is not None:
            return list(self.pairs)
        return [(d, S) for d in self.dims for S in self.S]


# d = 8 with S = 3 leaves the basin of the generating dictionary and is not part of the published curves
PUBLISHED_PAIRS = ((8, 1), (8, 2), (16, 1), (16, 2), (16, 3))


def default_config(experiment: str, profile: str = "full") -> ExperimentConfig:
    """Grids of the four published experiments; ``profile='ci'`` shrinks iterations, trials and N."""
    if experiment == "fig1a":
        cfg = ExperimentConfig("fig1a", dims=[3], S=[1], b=[0.1, 0.2], N=[4096], t=_steps(0.0, 0.5, 0.1))
    elif experiment == "fig1b":
        cfg = ExperimentConfig("fig1b", dims=[4, 8, 16], S=[1], b=[0.01], N=[2**k for k in range(7, 15)])
    elif experiment == "fig2a":
        cfg = ExperimentConfig(
            "fig2a", dims=[8, 16], S=[1, 2, 3], b=_steps(0.0, 0.1, 0.01), N=[16384], pairs=list(PUBLISHED_PAIRS)
        )
    elif experiment == "fig2b":
        cfg = ExperimentConfig(
            "fig2b",
            dims=[8, 16],
            S=[1, 2, 3],
            b=[0.1],
            rho=[math.sqrt(v) for v in _steps(0.0, 0.1, 0.01)],
            N=[16384],
            T_extra=0,
            trials=20,
            pairs=list(PUBLISHED_PAIRS),
        )
    else:
        raise InvalidInputError(f"{experiment!r} has no default grid")
    if profile == "ci":
        cfg.iterations = 100
        cfg.trials = 5
        if experiment in ("fig2a", "fig2b"):
            cfg.N = [4096]
    elif profile != "full":
        raise InvalidInputError(f"unknown profile {profile!r}")
    return cfg


@dataclass(frozen=True)
class GridPoint:
    experiment: str
    dims: int
    K: int
    S: int
    T: int
    b: float
    rho: float
    N: int
    t: float


@dataclass
class TrialResult:
    experiment: str
    dims: int
    K: int
    S: int
    T: int
    b: float
    rho: float
    N: int
    t: float
    trial: int
    seed: int
    dist_raw: float
    dist_sign: float
    dist_matched: float
    objective: float
    safeguard_events: int
    wall_ms: float

    @property
    def point(self) -> GridPoint:
        return GridPoint(self.experiment, self.dims, self.K, self.S, self.T, self.b, self.rho, self.N, self.t)


@dataclass
class AggregateRow:
    point: GridPoint
    n_trials: int
    dist_raw: float
    dist_sign: float
    dist_matched: float
    objective: float
    safeguard_events: int
    mean_dist_sign: float
    stderr_dist_sign: float


def derive_seed(master: int, experiment: str, point, trial: int) -> int:
    """Stable 64-bit seed; independent of grid size and Python hash randomisation."""
    if isinstance(point, GridPoint):
        point = (point.dims, point.K, point.S, point.T, point.b, point.rho, point.N, point.t)
    key = repr((int(master), experiment, tuple(point), int(trial))).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def generating_dictionary(experiment: str, d: int, t: float) -> Dictionary:
    if experiment.startswith("fig1a"):
        return dict_perturbed_basis_3d(t)
    return dict_canonical_half_hadamard(d)


def grid_points(cfg: ExperimentConfig):
    """All (algorithm-tagged) grid points of an experiment, in a fixed order."""
    tags = [f"{cfg.experiment}_itkm", f"{cfg.experiment}_ksvd"] if cfg.experiment == "fig1a" else [cfg.experiment]
    pts = []
    for tag in tags:
        for d, S in cfg.dim_sparsity_pairs():
            for b in cfg.b:
                for rho in cfg.rho:
                    for N in cfg.N:
                        for t in cfg.t:
                            D = generating_dictionary(tag, d, t)
                            T = S + cfg.T_extra
                            if T > D.K:
                                raise InvalidInputError(f"T={T} exceeds K={D.K} for d={d}")
                            pts.append(GridPoint(tag, D.d, D.K, S, T, float(b), float(rho), int(N), float(t)))
    return pts


def run_trial(point: GridPoint, trial: int, seed: int, iterations: int, timing: bool = False) -> TrialResult:
    """One oracle-initialised recovery run; fully determined by its arguments."""
    start = time.perf_counter()
    D = generating_dictionary(point.experiment, point.dims, point.t)
    spec = CoefficientSpec.make(point.S, point.b, point.T, point.rho)
    rng = np.random.default_rng(seed)
    Y = synthesize(D, spec, point.N, rng).Y
    config = ItkmConfig(S=point.S, iterations=iterations, seed=seed)
    if point.experiment.endswith("_ksvd"):
        out, _ = ksvd1_run(D, Y, config)
        events = 0
    else:
        out, trace = itkm_run(D, Y, config)
        events = int(sum(trace.safeguard_events))
    wall = (time.perf_counter() - start) * 1000.0 if timing else 0.0
    return TrialResult(
        *(getattr(point, f.name) for f in fields(GridPoint)),
        trial=trial,
        seed=seed,
        dist_raw=distance_raw(D, out),
        dist_sign=distance_sign_invariant(D, out),
        dist_matched=distance_matched(D, out)[0],
        objective=objective_finite(out, Y, point.S),
        safeguard_events=events,
        wall_ms=round(wall, 3),
    )


def _run_task(args):
    return run_trial(*args)


def run_experiment(cfg: ExperimentConfig, progress: Optional[Callable[[TrialResult], None]] = None):
    """All trials of all grid points, sorted by (grid point order, trial)."""
    pts = grid_points(cfg)
    tasks = []
    seeds = set()
    for p in pts:
        for k in range(cfg.trials):
            s = derive_seed(cfg.seed, p.experiment, p, k)
            if s in seeds:
                raise InvalidInputError(f"derived seed collision at {p}, trial {k}")
            seeds.add(s)
            tasks.append((p, k, s, cfg.iterations, cfg.timing))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_run_task, tasks, chunksize=4))
    else:
        results = []
        for task in tasks:
            results.append(_run_task(task))
            if progress:
                progress(results[-1])
    order = {p: i for i, p in enumerate(pts)}
    results.sort(key=lambda r: (order[r.point], r.trial))
    return results


def run_fig1a(cfg: ExperimentConfig):
    return run_experiment(replace(cfg, experiment="fig1a"))


def run_fig1b(cfg: ExperimentConfig):
    return run_experiment(replace(cfg, experiment="fig1b"))


def run_fig2a(cfg: ExperimentConfig):
    return run_experiment(replace(cfg, experiment="fig2a"))


def run_fig2b(cfg: ExperimentConfig):
    return run_experiment(replace(cfg, experiment="fig2b"))


def aggregate(results) -> list:
    """Per grid point means (and the standard error of the sign-invariant distance)."""
    groups: dict = {}
    for r in results:
        groups.setdefault(r.point, []).append(r)
    rows = []
    for p, rs in groups.items():
        ds = np.array([r.dist_sign for r in rs])
        se = float(ds.std(ddof=1) / math.sqrt(len(ds))) if len(ds) > 1 else 0.0
        rows.append(
            AggregateRow(
                point=p,
                n_trials=len(rs),
                dist_raw=float(np.mean([r.dist_raw for r in rs])),
                dist_sign=float(ds.mean()),
                dist_matched=float(np.mean([r.dist_matched for r in rs])),
                objective=float(np.mean([r.objective for r in rs])),
                safeguard_events=int(sum(r.safeguard_events for r in rs)),
                mean_dist_sign=float(ds.mean()),
                stderr_dist_sign=se,
            )
        )
    return rows


# -- curve selection and trend statistics -------------------------------------------

X_AXIS = {"fig1a": "t", "fig1b": "N", "fig2a": "b", "fig2b": "rho2"}


def x_value(p: GridPoint, axis: str) -> float:
    return p.rho**2 if axis == "rho2" else float(getattr(p, axis))


def curves(rows, axis: str) -> dict:
    """Group aggregate rows into curves keyed by everything except the x-axis variable."""
    hidden = {"rho2": "rho"}.get(axis, axis)
    out: dict = {}
    for r in rows:
        key = tuple((k, v) for k, v in asdict(r.point).items() if k not in (hidden, "K"))
        out.setdefault(key, []).append(r)
    for key in out:
        out[key].sort(key=lambda r: x_value(r.point, axis))
    return out


def curve_label(key) -> str:
    kv = dict(key)
    parts = [str(kv.pop("experiment"))]
    parts += [f"{k}={v}" for k, v in kv.items()]
    return " ".join(parts)


def select_curve(rows, axis: str, **where):
    """Sorted (x, mean, stderr) arrays of the unique curve matching ``where``."""
    found = [
        rs for key, rs in curves(rows, axis).items() if all(dict(key).get(k) == v for k, v in where.items())
    ]
    if len(found) != 1:
        raise InvalidInputError(f"{len(found)} curves match {where}")
    rs = found[0]
    return (
        np.array([x_value(r.point, axis) for r in rs]),
        np.array([r.mean_dist_sign for r in rs]),
        np.array([r.stderr_dist_sign for r in rs]),
    )


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidInputError("log-log fit needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def spearman(x, y) -> float:
    return float(spearmanr(x, y).statistic)


def flatness_ratio(y) -> float:
    y = np.asarray(y, dtype=float)
    return float(y.max() / y.min()) if y.min() > 0 else math.inf
