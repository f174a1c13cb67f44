"""Timing of one SSN layer forward pass against ``N D^2 + E D``."""

from __future__ import annotations

import timeit
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ssx.complex import SemiSimplicialSet
from ssx.relations import Relation
from ssx.rng import make_rng
from ssx.ssn import LayerConfig, Structure, _layer_forward

__all__ = ["BenchReport", "BenchRun", "bench", "random_structure"]


@dataclass(frozen=True)
class BenchRun:
    N: int
    E: int
    D: int
    seconds: float  # median per forward, over repetitions of calibrated loops
    iqr: float  # interquartile range of the repetitions
    reps: int


@dataclass(frozen=True)
class BenchReport:
    runs: tuple[BenchRun, ...]
    coef: tuple[float, float]  # time ~ coef[0] + coef[1] * (N D^2 + E D)
    residual: float  # relative RMS residual of that fit
    edge_exponent: float  # log-log slope of time vs E (fixed N, D); nan if E does not vary

    def ratios(self) -> list[float]:
        """Time ratios between consecutive runs (sorted by E)."""
        return [b.seconds / a.seconds for a, b in zip(self.runs, self.runs[1:])]


def random_structure(N: int, E: int, seed: int) -> Structure:
    """``N`` vertices and one relation ``rand`` of ``E`` distinct random pairs."""
    rng = make_rng(seed, 3)
    E = min(E, N * N)
    keys = np.sort(rng.choice(N * N, size=E, replace=False))
    host = SemiSimplicialSet([N], [np.zeros((N, 0), np.int64)])
    rel = Relation((N,), np.stack([keys // N, keys % N], axis=1), canonical=True)
    return Structure(host, {"rand": rel})


def _time_forward(N: int, E: int, D: int, reps: int, seed: int) -> BenchRun:
    struct = random_structure(N, E, seed)
    names = ("rand",) if E else ()
    cfg = LayerConfig(names, D, D, num_dims=1, custom_dims=(("rand", 0, 0),), activation="relu")
    rng = make_rng(seed, 4)
    params = {k: rng.standard_normal(s) for k, s in cfg.param_shapes("").items()}
    X = rng.standard_normal((N, D))
    if names:
        struct.operator("rand", 0, 0, cfg.msg_agg)  # build the sparse operator outside the timed region
    timer = timeit.Timer(lambda: _layer_forward(cfg, params, "", struct, X))
    # each repetition is a loop of at least 0.2 s, so scheduler jitter on millisecond calls averages out
    number, _ = timer.autorange()
    times = np.array(timer.repeat(reps, number)) / number
    q1, med, q3 = np.percentile(times, [25, 50, 75])
    return BenchRun(N, E, D, float(med), float(q3 - q1), reps)


def bench(edge_counts: Sequence[int], *, N: int = 2048, widths: Sequence[int] = (8,), reps: int = 7, seed: int = 0) -> BenchReport:
    """Median forward time per layer over random relations of growing size."""
    if reps < 5:
        raise ValueError("use at least 5 repetitions")
    runs = sorted((_time_forward(N, int(E), int(D), reps, seed) for D in widths for E in edge_counts), key=lambda r: (r.D, r.E))
    cost = np.array([r.N * r.D**2 + r.E * r.D for r in runs], dtype=np.float64)
    t = np.array([r.seconds for r in runs])
    A = np.stack([np.ones_like(cost), cost], axis=1)
    coef, *_ = np.linalg.lstsq(A, t, rcond=None)
    residual = float(np.sqrt(np.mean(((A @ coef - t) / t) ** 2)))
    Es = np.array([r.E for r in runs if r.D == runs[0].D and r.E > 0], dtype=np.float64)
    ts = np.array([r.seconds for r in runs if r.D == runs[0].D and r.E > 0])
    slope = float(np.polyfit(np.log(Es), np.log(ts), 1)[0]) if len(set(Es)) > 1 else float("nan")
    return BenchReport(tuple(runs), (float(coef[0]), float(coef[1])), residual, slope)
