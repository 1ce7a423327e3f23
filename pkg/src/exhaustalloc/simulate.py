"""Event-driven Monte Carlo of workers under Poisson sampling.

Each sojourn draws one exponential with the total exit rate of the current
state (chain transitions plus the sampling clock), then a categorical draw
picks which clock fired. Random numbers come from per-worker PCG64 streams,
pre-drawn in fixed-size chunks, so a seed reproduces a run bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numba
import numpy as np

from .model import Policy, WorkerParams

GENERATOR = "numpy.random.PCG64 via SeedSequence(seed, spawn_key=(worker, purpose))"
PURPOSE_EVENTS = 0
CHUNK = 1 << 20


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 1e6
    seed: int = 0
    warmup: float = 0.1
    batches: int = 50

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0.0 <= self.warmup <= 0.5:
            raise ValueError("warmup fraction must lie in [0, 0.5]")
        if self.batches < 2:
            raise ValueError("batch means needs at least 2 batches")


@dataclass
class SimStats:
    occupancy: np.ndarray
    occupancy_stderr: np.ndarray
    success_rate: float
    assign_rate: float
    stderr: float
    samples: int = 0

    def to_dict(self) -> dict:
        return {
            "occupancy": [float(v) for v in self.occupancy],
            "occupancy_stderr": [float(v) for v in self.occupancy_stderr],
            "success_rate": self.success_rate,
            "assign_rate": self.assign_rate,
            "stderr": self.stderr,
            "samples": self.samples,
        }


@numba.njit(cache=True)
def _advance(state, t, lam, mu, alpha, p, ps, t0, t1, nb,
             expo, u_pick, u_assign, u_succ, occ, succ, assign, sampled):
    """Consume one chunk of draws. Returns ``(state, t, finished)``.

    ``occ[b, s]`` accumulates time in state ``s`` during batch ``b`` of the
    window ``[t0, t1]``; ``succ``/``assign``/``sampled`` count events per batch.
    """
    blen = (t1 - t0) / nb
    n = expo.shape[0]
    for e in range(n):
        # exit rates: up, down, and the extra state-2* move to 1*
        if state == 0:
            up, down, extra = lam, 0.0, 0.0
        elif state == 1:
            up, down, extra = lam, mu, 0.0
        elif state == 2:
            up, down, extra = 0.0, mu, 0.0
        elif state == 3:
            up, down, extra = mu, 0.0, 0.0
        else:
            up, down, extra = mu, 0.0, lam
        total = up + down + extra + alpha
        t_next = t + expo[e] / total
        # sojourn time, split over batches inside the window
        a = t if t > t0 else t0
        b = t_next if t_next < t1 else t1
        while a < b:
            k = int((a - t0) / blen)
            if k >= nb:
                k = nb - 1
            edge = t0 + (k + 1) * blen
            seg_end = b if b < edge else edge
            occ[k, state] += seg_end - a
            a = seg_end
        if t_next >= t1:
            return state, t1, True
        t = t_next
        in_window = t >= t0
        kb = int((t - t0) / blen) if in_window else 0
        if kb >= nb:
            kb = nb - 1
        x = u_pick[e] * total
        if x < up:
            if state == 0:
                state = 1
            elif state == 1:
                state = 2
            elif state == 3:
                state = 4
            else:  # state 4 -> 3
                state = 2
        elif x < up + down:
            if state == 1:
                state = 0
            else:  # state 2 -> 1
                state = 1
        elif x < up + down + extra:
            state = 3  # 2* -> 1*
        else:
            if in_window:
                sampled[kb] += 1
            if state == 2:
                if in_window:
                    assign[kb] += 1
                    succ[kb] += 1
                state = 3
            elif state == 1 or state == 4:
                if u_assign[e] < p:
                    if in_window:
                        assign[kb] += 1
                        if u_succ[e] < ps:
                            succ[kb] += 1
                    state = 3
    return state, t, False


def _stream(seed: int, worker: int, purpose: int = PURPOSE_EVENTS) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=(int(worker), int(purpose)))
    return np.random.Generator(np.random.PCG64(ss))


def simulate_worker(w: WorkerParams, alpha: float, p: float = 0.0, mode: str = "strict",
                    cfg: SimConfig = SimConfig(), worker_index: int = 0) -> SimStats:
    """Simulate one worker over ``cfg.horizon`` time units.

    In strict mode ``p`` is forced to 0, but the same draws are consumed, so
    the path matches a run with ``p = 0`` exactly.
    """
    if mode not in ("strict", "moderate"):
        raise ValueError(f"unknown mode {mode!r}")
    if alpha < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("need alpha >= 0 and p in [0, 1]")
    if mode == "strict":
        p = 0.0
    rng = _stream(cfg.seed, worker_index)
    nb = cfg.batches
    t0 = cfg.warmup * cfg.horizon
    t1 = cfg.horizon
    occ = np.zeros((nb, 5))
    succ = np.zeros(nb, dtype=np.int64)
    assign = np.zeros(nb, dtype=np.int64)
    sampled = np.zeros(nb, dtype=np.int64)
    state, t = 0, 0.0
    finished = False
    while not finished:
        expo = rng.standard_exponential(CHUNK)
        u = rng.random((3, CHUNK))
        state, t, finished = _advance(state, t, w.lam, w.mu, float(alpha), float(p), w.ps, t0, t1, nb,
                                      expo, u[0], u[1], u[2], occ, succ, assign, sampled)
    span = t1 - t0
    blen = span / nb
    occupancy = occ.sum(axis=0) / span
    batch_occ = occ / blen
    batch_rate = succ / blen
    return SimStats(
        occupancy=occupancy,
        occupancy_stderr=batch_occ.std(axis=0, ddof=1) / np.sqrt(nb),
        success_rate=float(succ.sum() / span),
        assign_rate=float(assign.sum() / span),
        stderr=float(batch_rate.std(ddof=1) / np.sqrt(nb)),
        samples=int(sampled.sum()),
    )


@dataclass
class SystemStats:
    aggregate: SimStats
    workers: List[SimStats]
    generator: str = GENERATOR

    def to_dict(self) -> dict:
        return {
            "generator": self.generator,
            "success_rate": self.aggregate.success_rate,
            "assign_rate": self.aggregate.assign_rate,
            "stderr": self.aggregate.stderr,
            "workers": [s.to_dict() for s in self.workers],
        }


def simulate_system(workers: Sequence[WorkerParams], policy: Policy, mode: str = "strict",
                    cfg: SimConfig = SimConfig()) -> SystemStats:
    """Simulate every worker on its own stream and add up the rates.

    Workers are independent, so the aggregate standard error combines the
    per-worker ones in quadrature.
    """
    workers = list(workers)
    if len(policy) != len(workers):
        raise ValueError("policy length does not match the worker count")
    per = [
        simulate_worker(w, a, q, mode, cfg, worker_index=i)
        for i, (w, a, q) in enumerate(zip(workers, policy.alpha, policy.p))
    ]
    agg = SimStats(
        occupancy=np.mean([s.occupancy for s in per], axis=0),
        occupancy_stderr=np.sqrt(np.sum([s.occupancy_stderr**2 for s in per], axis=0)) / len(per),
        success_rate=float(sum(s.success_rate for s in per)),
        assign_rate=float(sum(s.assign_rate for s in per)),
        stderr=float(np.sqrt(sum(s.stderr**2 for s in per))),
        samples=sum(s.samples for s in per),
    )
    return SystemStats(agg, per)
