"""Known exact M/G/inf values used as ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dist import Kind
from .renewal import QueueConfig

__all__ = ["ExactAnchors", "exact_anchors", "exact_sojourn_cdf_exponential", "poisson_pmf"]


@dataclass(frozen=True)
class ExactAnchors:
    mu0: float
    eb: float
    m0: float
    mk_exponential: tuple[float, ...] | None  # k = 0..k_max, exponential service only
    mkvk: tuple[float, ...]  # k = 0..k_max
    p: tuple[float, ...]  # stationary occupancy, k = 0..k_max


def poisson_pmf(rho: float, k: int) -> float:
    return math.exp(-rho + k * math.log(rho) - math.lgamma(k + 1)) if k else math.exp(-rho)


def exact_anchors(cfg: QueueConfig, k_max: int) -> ExactAnchors:
    """Busy cycle, busy period, state-0 sojourn and m_k v_k of the true queue.

    All of these are insensitive: they depend on the service law only through
    its mean. The per-state sojourn mean is known only for exponential service.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    lam, rho, alpha = cfg.lam, cfg.rho, cfg.alpha
    mu0 = math.exp(rho) / lam
    eb = math.expm1(rho) / lam
    mk = None
    if cfg.dist.kind is Kind.EXPONENTIAL:
        mk = tuple(alpha / (k + rho) for k in range(k_max + 1))
    # m_0 v_0 = 1/lam (one idle period per cycle); alpha rho^{k-1}/k! for k >= 1
    mkvk = tuple(
        1.0 / lam if k == 0 else alpha * math.exp((k - 1) * math.log(rho) - math.lgamma(k + 1))
        for k in range(k_max + 1)
    )
    p = tuple(poisson_pmf(rho, k) for k in range(k_max + 1))
    return ExactAnchors(mu0=mu0, eb=eb, m0=1.0 / lam, mk_exponential=mk, mkvk=mkvk, p=p)


def exact_sojourn_cdf_exponential(cfg: QueueConfig, k: int, t: float) -> float:
    """1 - exp(-(k + rho) t / alpha) for exponential service; 1 - exp(-lam t) at k = 0."""
    if t < 0 or math.isnan(t):
        raise ValueError("time argument must be >= 0")
    if k < 0:
        raise ValueError("state index must be >= 0")
    if k == 0:
        return -math.expm1(-cfg.lam * t)
    if cfg.dist.kind is not Kind.EXPONENTIAL:
        raise ValueError("the sojourn law for k >= 1 is known only for exponential service")
    return -math.expm1(-(k + cfg.rho) * t / cfg.alpha)
