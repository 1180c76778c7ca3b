"""Regenerative discrete-event simulation of the M/G/inf queue.

A cycle starts when the system becomes empty (time 0 counts as such an
instant) and ends at the next emptying, so busy cycle = idle + busy period
and the idle part is exponential(lam). Cycles are i.i.d.; every estimate is
either a per-cycle mean or a ratio of per-cycle sums, with the standard error
taken over cycles.

Events are swept with numpy rather than popped from a heap: with infinitely
many servers every customer departs at arrival + service, so the state path
is a cumulative sum over the merged, sorted event list. Simultaneous events
are ordered departures first, departures by arrival order.
"""

from __future__ import annotations

import heapq
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dist import ServiceDistribution, parse_spec, sample
from .renewal import QueueConfig

__all__ = [
    "SimConfig",
    "Estimate",
    "SimReport",
    "CycleData",
    "SimulationBudgetError",
    "run",
    "run_replication",
    "merge",
    "sampler",
    "cycle_data",
    "reference_cycle_data",
    "summarize",
    "config_for",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_ARRIVALS = 200_000_000
DEFAULT_CYCLE_BUDGET = 100_000_000
_CHUNK_MIN = 4_096
_CHUNK_MAX = 2_000_000


class SimulationBudgetError(RuntimeError):
    """No regeneration cycle completed within the arrival budget."""


@dataclass(frozen=True)
class SimConfig:
    queue: QueueConfig
    cycles: int
    k_max: int = 10
    seed: int = 0
    replications: int = 1
    max_arrivals: int = DEFAULT_MAX_ARRIVALS  # per replication
    cycle_budget: int = DEFAULT_CYCLE_BUDGET  # cycles * replications

    def __post_init__(self) -> None:
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.cycles * self.replications > self.cycle_budget:
            raise ValueError(
                f"cycles*replications = {self.cycles * self.replications} exceeds budget {self.cycle_budget}"
            )


@dataclass(frozen=True)
class Estimate:
    estimate: float
    standard_error: float
    count: float

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.estimate - target) <= n_se * self.standard_error


@dataclass(frozen=True)
class SimReport:
    """Simulation estimates; per-state sequences are indexed k = 0..k_max.

    ``upward_entries_per_cycle`` counts only entries from k-1; its k = 0 entry
    follows the cycle convention (one entry per cycle). ``occupancy_tail`` is
    the time fraction spent above k_max.
    """

    lam: float
    dist_spec: str
    k_max: int
    busy_cycle_mean: Estimate
    busy_period_mean: Estimate
    sojourn_mean: tuple[Estimate, ...]
    entries_per_cycle: tuple[Estimate, ...]
    upward_entries_per_cycle: tuple[Estimate, ...]
    time_in_state_per_cycle: tuple[Estimate, ...]
    occupancy: tuple[Estimate, ...]
    occupancy_tail: Estimate
    cycles: int
    total_time: float
    streams: tuple[tuple[int, int], ...] = field(default=())  # (seed, replication)

    @property
    def seed(self) -> int:
        return self.streams[0][0] if self.streams else 0


def sampler(d: ServiceDistribution, rng: np.random.Generator) -> float:
    """One service-time draw."""
    return float(sample(d, rng, 1)[0])


@dataclass
class CycleData:
    """Per-cycle raw observations, one row per completed cycle."""

    length: np.ndarray  # busy cycle length
    idle: np.ndarray
    entries: np.ndarray  # (n, k_max+1), entries from either side
    upward: np.ndarray  # (n, k_max+1), entries from k-1
    time: np.ndarray  # (n, k_max+1), time spent in k

    @property
    def n(self) -> int:
        return len(self.length)

    @classmethod
    def empty(cls, k_max: int) -> CycleData:
        z = np.zeros(0)
        zz = np.zeros((0, k_max + 1))
        return cls(z, z.copy(), zz, zz.copy(), zz.copy())

    @classmethod
    def concat(cls, parts: list[CycleData], k_max: int) -> CycleData:
        if not parts:
            return cls.empty(k_max)
        return cls(
            np.concatenate([p.length for p in parts]),
            np.concatenate([p.idle for p in parts]),
            np.concatenate([p.entries for p in parts]),
            np.concatenate([p.upward for p in parts]),
            np.concatenate([p.time for p in parts]),
        )

    def head(self, n: int) -> CycleData:
        return CycleData(self.length[:n], self.idle[:n], self.entries[:n], self.upward[:n], self.time[:n])


def _sweep(arrivals: np.ndarray, services: np.ndarray, k_max: int):
    """Complete cycles in one block of customers that starts with an empty system at t=0.

    Returns the per-cycle data, the index of the first customer not yet
    absorbed into a complete cycle and the time of the last regeneration.
    """
    n = len(arrivals)
    departures = arrivals + services
    times = np.concatenate([arrivals, departures])
    is_arr = np.concatenate([np.ones(n, dtype=np.int8), np.zeros(n, dtype=np.int8)])
    idx = np.concatenate([np.arange(n), np.arange(n)])
    order = np.lexsort((idx, is_arr, times))
    times = times[order]
    is_arr = is_arr[order]
    state = np.cumsum(np.where(is_arr == 1, 1, -1))

    # a return to 0 is a regeneration unless a later (unseen) arrival could precede it
    zeros = np.flatnonzero(state == 0)
    zeros = zeros[times[zeros] <= arrivals[-1]] if n else zeros
    if len(zeros) == 0:
        return CycleData.empty(k_max), 0, 0.0

    last = zeros[-1]
    ev_t = times[: last + 1]
    ev_state = state[: last + 1]
    ev_up = is_arr[: last + 1] == 1

    # visit j: state 0 from t=0 to the first event, then the state after event j-1
    v_state = np.concatenate([[0], ev_state[:-1]])
    v_start = np.concatenate([[0.0], ev_t[:-1]])
    v_dur = ev_t - v_start
    v_up = np.concatenate([[False], ev_up[:-1]])
    v_cycle = np.cumsum(v_state == 0) - 1
    n_cycles = int(v_cycle[-1]) + 1

    width = k_max + 1
    keep = v_state <= k_max
    cell = v_cycle[keep] * width + v_state[keep]
    size = n_cycles * width
    entries = np.bincount(cell, minlength=size).astype(float).reshape(n_cycles, width)
    upward = np.bincount(cell, weights=v_up[keep].astype(float), minlength=size).reshape(n_cycles, width)
    upward[:, 0] = 1.0
    occ = np.bincount(cell, weights=v_dur[keep], minlength=size).reshape(n_cycles, width)

    bounds = np.concatenate([[0.0], ev_t[zeros]])
    length = np.diff(bounds)
    idle = v_dur[v_state == 0]

    consumed = int(np.count_nonzero(ev_up))
    return CycleData(length, idle, entries, upward, occ), consumed, float(ev_t[-1])


def cycle_data(arrivals: np.ndarray, services: np.ndarray, k_max: int) -> CycleData:
    """Per-cycle data for a fixed customer sequence (system empty at t=0)."""
    data, _, _ = _sweep(np.asarray(arrivals, float), np.asarray(services, float), k_max)
    return data


def reference_cycle_data(arrivals, services, k_max: int) -> CycleData:
    """Plain event-loop version of :func:`cycle_data`, kept as a cross-check."""
    arrivals = list(map(float, arrivals))
    services = list(map(float, services))
    last_arrival = arrivals[-1]
    heap: list[tuple[float, int, int]] = []  # (time, 0=departure/1=arrival, customer)
    for i, a in enumerate(arrivals):
        heapq.heappush(heap, (a, 1, i))
    rows = []
    state, now, cyc_start = 0, 0.0, 0.0
    width = k_max + 1
    entries = [0.0] * width
    upward = [0.0] * width
    occ = [0.0] * width
    entries[0] = 1.0
    upward[0] = 1.0
    idle = None
    while heap:
        t, kind, i = heapq.heappop(heap)
        if state <= k_max:
            occ[state] += t - now
        if state == 0:
            idle = t - now
        now = t
        if kind == 1:
            state += 1
            heapq.heappush(heap, (t + services[i], 0, i))
        else:
            state -= 1
        if state == 0:
            if t > last_arrival:
                break
            rows.append((t - cyc_start, idle, entries, upward, occ))
            cyc_start = t
            entries = [0.0] * width
            upward = [0.0] * width
            occ = [0.0] * width
            entries[0] = 1.0
            upward[0] = 1.0
        elif state <= k_max:
            entries[state] += 1.0
            if kind == 1:
                upward[state] += 1.0
    if not rows:
        return CycleData.empty(k_max)
    return CycleData(
        np.array([r[0] for r in rows]),
        np.array([r[1] for r in rows]),
        np.array([r[2] for r in rows]),
        np.array([r[3] for r in rows]),
        np.array([r[4] for r in rows]),
    )


def _streams(seed: int, replication: int) -> tuple[np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(seed, spawn_key=(replication,))
    arr_ss, svc_ss = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(arr_ss)), np.random.Generator(np.random.PCG64(svc_ss))


def _simulate_cycles(sc: SimConfig, replication: int) -> CycleData:
    q = sc.queue
    arr_rng, svc_rng = _streams(sc.seed, replication)
    per_cycle = math.exp(min(q.rho, 30.0))  # expected arrivals per cycle
    parts: list[CycleData] = []
    done = 0
    drawn = 0
    carry_a = np.zeros(0)
    carry_s = np.zeros(0)
    while done < sc.cycles:
        need = sc.cycles - done
        size = int(min(_CHUNK_MAX, max(_CHUNK_MIN, 1.1 * need * per_cycle + 100)))
        if drawn + size > sc.max_arrivals:
            size = sc.max_arrivals - drawn
            if size <= 0:
                break
        gaps = -np.log1p(-arr_rng.random(size)) / q.lam
        start = carry_a[-1] if len(carry_a) else 0.0
        new_a = start + np.cumsum(gaps)
        new_s = sample(q.dist, svc_rng, size)
        drawn += size
        a = np.concatenate([carry_a, new_a])
        s = np.concatenate([carry_s, new_s])
        data, consumed, t_regen = _sweep(a, s, sc.k_max)
        if data.n:
            parts.append(data.head(min(data.n, need)))
            done += min(data.n, need)
        # rebase the unfinished cycle to the last regeneration instant
        carry_a = a[consumed:] - t_regen
        carry_s = s[consumed:]
    if done == 0:
        raise SimulationBudgetError(
            f"no complete cycle within {sc.max_arrivals} arrivals (seed {sc.seed}, replication {replication})"
        )
    if done < sc.cycles:
        log.warning("arrival budget exhausted after %d of %d cycles", done, sc.cycles)
    return CycleData.concat(parts, sc.k_max)


def _mean(x: np.ndarray) -> Estimate:
    n = len(x)
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return Estimate(m, se, float(n))


def _ratio(y: np.ndarray, v: np.ndarray, count: float) -> Estimate:
    n = len(y)
    sv = float(np.sum(v))
    if sv == 0:
        return Estimate(math.nan, math.nan, count)
    r = float(np.sum(y)) / sv
    if n > 1:
        resid = y - r * v
        se = float(np.std(resid, ddof=1) / (math.sqrt(n) * (sv / n)))
    else:
        se = math.nan
    return Estimate(r, se, count)


def summarize(data: CycleData, sc: SimConfig, replication: int = 0) -> SimReport:
    k_max = sc.k_max
    busy = data.length - data.idle
    tail_time = data.length - data.time.sum(axis=1)
    ones = np.ones_like(data.length)
    return SimReport(
        lam=sc.queue.lam,
        dist_spec=sc.queue.dist.spec,
        k_max=k_max,
        busy_cycle_mean=_mean(data.length),
        busy_period_mean=_mean(busy),
        sojourn_mean=tuple(
            _ratio(data.time[:, k], data.entries[:, k], float(data.entries[:, k].sum())) for k in range(k_max + 1)
        ),
        entries_per_cycle=tuple(_mean(data.entries[:, k]) for k in range(k_max + 1)),
        upward_entries_per_cycle=tuple(_mean(data.upward[:, k]) for k in range(k_max + 1)),
        time_in_state_per_cycle=tuple(_mean(data.time[:, k]) for k in range(k_max + 1)),
        occupancy=tuple(_ratio(data.time[:, k], data.length, float(data.n)) for k in range(k_max + 1)),
        occupancy_tail=_ratio(tail_time, data.length, float(data.n)),
        cycles=data.n,
        total_time=float(np.sum(data.length)),
        streams=((sc.seed, replication),),
    )


def run_replication(sc: SimConfig, replication: int) -> SimReport:
    return summarize(_simulate_cycles(sc, replication), sc, replication)


def _run_one(args: tuple[SimConfig, int]) -> SimReport:
    return run_replication(*args)


def run(sc: SimConfig, *, workers: int = 1) -> SimReport:
    """Simulate ``sc.replications`` independent replications and pool them.

    Replication i draws from the substream (seed, i), so the result does not
    depend on ``workers``.
    """
    jobs = [(sc, i) for i in range(sc.replications)]
    if workers > 1 and sc.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    return merge(reports)


def _pool(items: list[Estimate], weights: list[float]) -> Estimate:
    est = sum(w * e.estimate for w, e in zip(weights, items))
    se = math.sqrt(sum((w * e.standard_error) ** 2 for w, e in zip(weights, items)))
    return Estimate(est, se, sum(e.count for e in items))


def merge(reports: list[SimReport]) -> SimReport:
    """Pool independent reports, weighting each by its number of cycles."""
    if not reports:
        raise ValueError("nothing to merge")
    if len(reports) == 1:
        return reports[0]
    first = reports[0]
    for r in reports[1:]:
        if (r.lam, r.dist_spec, r.k_max) != (first.lam, first.dist_spec, first.k_max):
            raise ValueError("cannot merge reports of different configurations")
    streams = [s for r in reports for s in r.streams]
    if len(set(streams)) != len(streams):
        raise ValueError("reports share a random substream")
    total = sum(r.cycles for r in reports)
    w = [r.cycles / total for r in reports]

    def pool(attr: str) -> Estimate:
        return _pool([getattr(r, attr) for r in reports], w)

    def pool_seq(attr: str) -> tuple[Estimate, ...]:
        return tuple(_pool([getattr(r, attr)[k] for r in reports], w) for k in range(first.k_max + 1))

    return SimReport(
        lam=first.lam,
        dist_spec=first.dist_spec,
        k_max=first.k_max,
        busy_cycle_mean=pool("busy_cycle_mean"),
        busy_period_mean=pool("busy_period_mean"),
        sojourn_mean=pool_seq("sojourn_mean"),
        entries_per_cycle=pool_seq("entries_per_cycle"),
        upward_entries_per_cycle=pool_seq("upward_entries_per_cycle"),
        time_in_state_per_cycle=pool_seq("time_in_state_per_cycle"),
        occupancy=pool_seq("occupancy"),
        occupancy_tail=pool("occupancy_tail"),
        cycles=total,
        total_time=math.fsum(r.total_time for r in reports),
        streams=tuple(streams),
    )


def config_for(lam: float, spec: str, **kw) -> SimConfig:
    """Shorthand used by scripts: ``config_for(1.0, "det:alpha=1.0", cycles=10_000)``."""
    return SimConfig(QueueConfig(lam, parse_spec(spec)), **kw)
