"""Markov renewal approximation of the M/G/inf state process.

State k is the number of customers in service. The approximating process
spends on average

    m_k = int_0^inf exp(-lam t) T(t)^k dt

in state k, where T is the equilibrium survival of the service law. From the
m_k this module builds the sojourn-time CDFs, the state-0 recurrence time,
the busy-period mean and the mean number of entries into each state per
cycle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .dist import Kind, ServiceDistribution, equilibrium_survival
from .errors import DegenerateRatioError
from .quadrature import integrate

__all__ = [
    "QueueConfig",
    "Method",
    "SojournRow",
    "CycleMetrics",
    "LowerCheckRow",
    "sojourn_mean",
    "sojourn_quadrature",
    "sojourn_means",
    "det_recursion",
    "sojourn_cdf",
    "recurrence_mean",
    "entries_mean",
    "literal_entries",
    "recursion_lower_check",
]

QUAD_ABS_TOL = 1e-10
TRUNCATION_LOG = math.log(1e-16)
SERIES_REL_TOL = 1e-12
DEGENERATE_GAP = 1e-12
# forward recursion is abandoned once it has lost six significant digits
_RECURSION_DIGIT_LOSS = 1e6 * np.finfo(float).eps


@dataclass(frozen=True)
class QueueConfig:
    lam: float
    dist: ServiceDistribution

    def __post_init__(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("arrival rate must be positive and finite")

    @property
    def alpha(self) -> float:
        return self.dist.mean

    @property
    def rho(self) -> float:
        return self.lam * self.dist.mean


class Method(str, enum.Enum):
    STATE_ZERO = "state_zero"
    CLOSED_FORM_EXPONENTIAL = "closed_form_exponential"
    RECURSION_DETERMINISTIC = "recursion_deterministic"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class SojournRow:
    k: int
    m: float
    method: Method
    error: float = 0.0  # quadrature error estimate, 0 for closed forms


@dataclass(frozen=True)
class CycleMetrics:
    """Cycle-level quantities of the approximating process.

    ``v`` and ``time_in_state`` are indexed by state, starting at k = 0 with
    the conventions v_0 = 1 and m_0 v_0 = 1/lam.
    """

    mu0: float
    busy_period_mean: float
    v: tuple[float, ...]
    time_in_state: tuple[float, ...]
    m: tuple[float, ...]
    truncation_k: int
    truncation_error_estimate: float
    v_literal: tuple[float, ...] | None = field(default=None, compare=False)


def _log_power_integrand(cfg: QueueConfig, k: int):
    lam = cfg.lam
    d = cfg.dist

    def f(t: np.ndarray) -> np.ndarray:
        tail = equilibrium_survival(d, t)
        if k == 0:
            return np.exp(-lam * t)
        with np.errstate(divide="ignore"):
            logt = np.log(tail)
        return np.where(tail > 0, np.exp(-lam * t + k * logt), 0.0)

    return f


def _truncation_point(cfg: QueueConfig, k: int) -> float:
    """Smallest t (to bisection accuracy) past which exp(-lam t) T(t)^k < 1e-16."""
    hi = -TRUNCATION_LOG / cfg.lam
    if k == 0:
        return hi
    hi = min(hi, cfg.dist.support_end)

    def logf(t: float) -> float:
        tail = equilibrium_survival(cfg.dist, t)
        if tail <= 0:
            return -math.inf
        return -cfg.lam * t + k * math.log(tail)

    lo = 0.0
    if logf(hi) >= TRUNCATION_LOG:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if logf(mid) < TRUNCATION_LOG:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def sojourn_quadrature(cfg: QueueConfig, k: int, *, abs_tol: float = QUAD_ABS_TOL) -> SojournRow:
    """m_k by adaptive quadrature of the defining integral, whatever the law."""
    if k < 0:
        raise ValueError("state index must be >= 0")
    t_max = _truncation_point(cfg, k)
    res = integrate(_log_power_integrand(cfg, k), 0.0, t_max, abs_tol=abs_tol, points=cfg.dist.kinks)
    return SojournRow(k, res.value, Method.QUADRATURE, res.error)


def sojourn_mean(cfg: QueueConfig, k: int, *, method: str | Method = "auto") -> SojournRow:
    """Mean sojourn in state k.

    ``method="auto"`` uses 1/lam at k = 0, the closed form alpha/(k+rho) for
    exponential service, the forward recursion for deterministic service and
    quadrature otherwise. ``method="quadrature"`` forces quadrature.
    """
    if k < 0:
        raise ValueError("state index must be >= 0")
    method = Method(method) if method != "auto" else "auto"
    if method is Method.QUADRATURE:
        return sojourn_quadrature(cfg, k)
    if method != "auto":
        raise ValueError(f"method must be 'auto' or 'quadrature', got {method!r}")
    if k == 0:
        return SojournRow(0, 1.0 / cfg.lam, Method.STATE_ZERO)
    if cfg.dist.kind is Kind.EXPONENTIAL:
        return SojournRow(k, cfg.alpha / (k + cfg.rho), Method.CLOSED_FORM_EXPONENTIAL)
    if cfg.dist.kind is Kind.DETERMINISTIC:
        return det_recursion(cfg, k)[-1]
    return sojourn_quadrature(cfg, k)


def _det_m1(cfg: QueueConfig) -> tuple[float, float]:
    """m_1 for constant service and a bound on its absolute rounding error."""
    rho, alpha = cfg.rho, cfg.alpha
    em = math.expm1(-rho)
    num = rho + em
    if rho < 1e-3:
        # series of rho + e^{-rho} - 1 avoids the cancellation
        num = rho * rho * (0.5 - rho / 6 + rho * rho / 24 - rho**3 / 120)
        rel = 4 * np.finfo(float).eps
    else:
        rel = 4 * np.finfo(float).eps * (rho + abs(em)) / num
    m1 = alpha * num / rho**2
    return m1, rel * m1


def _det_rows(cfg: QueueConfig) -> Iterator[SojournRow]:
    """Yield m_1, m_2, ... for constant service (recursion, then quadrature)."""
    if cfg.dist.kind is not Kind.DETERMINISTIC:
        raise ValueError("recursion requires deterministic service")
    eps = np.finfo(float).eps
    inv_lam = 1.0 / cfg.lam
    m, err = _det_m1(cfg)
    yield SojournRow(1, m, Method.RECURSION_DETERMINISTIC)
    k = 1
    stable = True
    while True:
        if stable:
            c = (k + 1) / cfg.rho
            nxt = inv_lam - c * m
            err = c * err + eps * (inv_lam + c * abs(m) + abs(nxt))
            if nxt > 0 and err <= _RECURSION_DIGIT_LOSS * nxt:
                m = nxt
                k += 1
                yield SojournRow(k, m, Method.RECURSION_DETERMINISTIC)
                continue
            stable = False
        k += 1
        yield sojourn_quadrature(cfg, k)


@lru_cache(maxsize=256)
def _det_table(cfg: QueueConfig, k_max: int) -> tuple[SojournRow, ...]:
    rows = []
    for row in _det_rows(cfg):
        rows.append(row)
        if row.k >= k_max:
            break
    return tuple(rows)


def det_recursion(cfg: QueueConfig, k_max: int) -> list[SojournRow]:
    """m_1..m_k_max for constant service.

    Starts from the closed form of m_1 and runs the forward recursion
    m_{k+1} = 1/lam - (k+1)/rho m_k. The recursion amplifies rounding error
    by (k+1)/rho per step; once the tracked error bound exceeds six lost
    digits the remaining states fall back to quadrature.
    """
    if cfg.dist.kind is not Kind.DETERMINISTIC:
        raise ValueError("det_recursion requires deterministic service")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    return list(_det_table(cfg, int(k_max)))


def _iter_rows(cfg: QueueConfig) -> Iterator[SojournRow]:
    """m_1, m_2, ... by the default method for the service law."""
    if cfg.dist.kind is Kind.DETERMINISTIC:
        yield from _det_rows(cfg)
        return
    k = 1
    while True:
        yield sojourn_mean(cfg, k)
        k += 1


def sojourn_means(cfg: QueueConfig, k_max: int) -> list[SojournRow]:
    """Rows for k = 0..k_max by the default method."""
    rows = [sojourn_mean(cfg, 0)]
    if k_max >= 1:
        for row in _iter_rows(cfg):
            rows.append(row)
            if row.k >= k_max:
                break
    return rows


def sojourn_cdf(cfg: QueueConfig, k: int, t):
    """C_k(t) = 1 - exp(-lam t) T(t)^k; scalar or array ``t``."""
    if k < 0:
        raise ValueError("state index must be >= 0")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise ValueError("time argument must be >= 0")
    tail = np.asarray(equilibrium_survival(cfg.dist, t_arr))
    with np.errstate(divide="ignore"):
        expo = -cfg.lam * t_arr + (k * np.log(tail) if k else 0.0)
    out = np.where((tail > 0) | (k == 0), -np.expm1(expo), 1.0)
    return float(out) if np.ndim(t) == 0 else out


def _ratio(cfg: QueueConfig, row: SojournRow) -> float:
    x = cfg.lam * row.m
    if x >= 1.0 - DEGENERATE_GAP:
        raise DegenerateRatioError(f"lam*m_{row.k} = {x!r} is numerically 1")
    return x / (1.0 - x)


def _cycle(cfg: QueueConfig, k_max: int, max_terms: int) -> CycleMetrics:
    inv_lam = 1.0 / cfg.lam
    rows = [sojourn_mean(cfg, 0)]
    terms = [1.0]  # T_0 = 1 carries the m_0 v_0 = 1/lam contribution
    running = 1.0
    trunc_k = None
    trunc_err = 0.0
    it = _iter_rows(cfg)
    for row in it:
        r = _ratio(cfg, row)
        rows.append(row)
        if trunc_k is not None:
            if row.k >= k_max:
                break
            continue
        term = terms[-1] * r
        terms.append(term)
        running += term
        if term < SERIES_REL_TOL * running:
            nxt = next(it)
            r_next = _ratio(cfg, nxt)
            rows.append(nxt)
            if r_next < 1.0:
                trunc_k = row.k
                trunc_err = inv_lam * term * r_next / (1.0 - r_next)
                if nxt.k >= k_max:
                    break
                continue
            # ratio still >= 1: the tail is not yet geometric, keep summing
            terms.append(term * r_next)
            running += terms[-1]
        if row.k > max_terms:
            raise DegenerateRatioError(f"series did not settle within {max_terms} terms")

    mu0 = inv_lam * math.fsum(terms[: trunc_k + 1])
    m = tuple(r.m for r in rows)
    lam = cfg.lam
    # v_k = lam^{k-1} m_1..m_{k-1} / prod_{i<=k}(1 - lam m_i), built incrementally
    v = [1.0]
    acc = 1.0
    for i in range(1, len(m)):
        if i > 1:
            acc *= lam * m[i - 1]
        acc /= 1.0 - lam * m[i]
        v.append(acc)
    n_keep = max(k_max, trunc_k) + 1
    v = v[:n_keep]
    time_in_state = tuple(mi * vi for mi, vi in zip(m, v))
    return CycleMetrics(
        mu0=mu0,
        busy_period_mean=mu0 - inv_lam,
        v=tuple(v),
        time_in_state=time_in_state,
        m=m[:n_keep],
        truncation_k=trunc_k,
        truncation_error_estimate=trunc_err,
    )


def recurrence_mean(cfg: QueueConfig, *, max_terms: int = 10_000) -> CycleMetrics:
    """State-0 mean recurrence time (busy-cycle mean) of the approximating process.

    Sums mu0 = (1/lam) [1 + sum_j prod_{k<=j} lam m_k / (1 - lam m_k)] until
    a term falls below 1e-12 of the running sum; the neglected tail is
    bounded by a geometric majorant since the ratios are nonincreasing in k.
    """
    return _cycle(cfg, 0, max_terms)


def entries_mean(
    cfg: QueueConfig, k_max: int, *, literal: bool = False, max_terms: int = 10_000
) -> CycleMetrics:
    """Mean entries v_k into each state per cycle, for k = 0..k_max.

    Uses v_k = lam^{k-1} (m_1...m_{k-1}) / prod_{i=1}^{k} (1 - lam m_i). With
    ``literal=True`` the dimensionally inconsistent variant
    lam^{k-1} (m_1...m_k) / prod (1 - m_i) is filled into ``v_literal`` for
    comparison only.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    cm = _cycle(cfg, k_max, max_terms)
    if literal:
        cm = _with_literal(cfg, cm, k_max)
    return cm


def literal_entries(m: tuple[float, ...], lam: float, k_max: int) -> tuple[float, ...]:
    out = [1.0]
    for k in range(1, k_max + 1):
        num = lam ** (k - 1) * math.prod(m[1 : k + 1])
        den = math.prod(1.0 - mi for mi in m[1 : k + 1])
        out.append(num / den if den != 0 else math.inf)
    return tuple(out)


def _with_literal(cfg: QueueConfig, cm: CycleMetrics, k_max: int) -> CycleMetrics:
    from dataclasses import replace

    return replace(cm, v_literal=literal_entries(cm.m, cfg.lam, k_max))


@dataclass(frozen=True)
class LowerCheckRow:
    k: int
    lhs: float  # m_{k+1}
    rhs: float  # 1/lam - (k+1)/rho m_k
    holds: bool
    slack: float


def recursion_lower_check(cfg: QueueConfig, k_max: int, *, tol: float = 1e-9) -> list[LowerCheckRow]:
    """Check m_{k+1} >= 1/lam - (k+1)/rho m_k for k = 1..k_max.

    Uses quadrature for every m_k so the deterministic case, where the
    inequality is an equality, is not checked against its own recursion.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if cfg.dist.kind is Kind.EXPONENTIAL:
        ms = [sojourn_mean(cfg, k).m for k in range(k_max + 2)]
    else:
        ms = [sojourn_quadrature(cfg, k).m for k in range(k_max + 2)]
    out = []
    for k in range(1, k_max + 1):
        rhs = 1.0 / cfg.lam - (k + 1) / cfg.rho * ms[k]
        lhs = ms[k + 1]
        out.append(LowerCheckRow(k, lhs, rhs, lhs >= rhs - tol, lhs - rhs))
    return out
