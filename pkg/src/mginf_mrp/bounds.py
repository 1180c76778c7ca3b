"""Closed-form bounds on the approximating process and relative-error criteria.

Every bound is returned as a :class:`BoundValue`, also when its hypothesis
fails; callers render inapplicable bounds instead of catching exceptions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .dist import Tag
from .renewal import QueueConfig

__all__ = [
    "Direction",
    "Source",
    "BoundValue",
    "CycleBounds",
    "VisitBounds",
    "ErrorReport",
    "basic_bounds",
    "regime_bound",
    "regime_case",
    "class_bounds",
    "cycle_bounds",
    "visit_bounds",
    "cdf_bounds",
    "error_report",
    "goodness_threshold",
]

E_MINUS_1 = math.e - 1.0


class Direction(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"


class Source(str, enum.Enum):
    E0 = "E0"
    E1 = "E1"
    E2 = "E2"
    REGIME_MIN = "REGIME_MIN"
    NBUE = "NBUE"
    NWUE = "NWUE"
    IMRL = "IMRL"
    DFR = "DFR"
    MU0_CAP = "MU0_CAP"
    EB_CAP = "EB_CAP"
    VK_CAP = "VK_CAP"
    MKVK_CAP = "MKVK_CAP"
    UNIVERSAL = "UNIVERSAL"


@dataclass(frozen=True)
class BoundValue:
    value: float
    direction: Direction
    source: Source
    applicable: bool = True
    inapplicability_reason: str = ""

    def admits(self, x: float, tol: float = 0.0) -> bool:
        """True if ``x`` lies on the permitted side (always True when inapplicable)."""
        if not self.applicable:
            return True
        if self.direction is Direction.UPPER:
            return x <= self.value + tol
        return x >= self.value - tol


def _inapplicable(value: float, direction: Direction, source: Source, why: str) -> BoundValue:
    return BoundValue(value, direction, source, False, why)


def _load(cfg: QueueConfig) -> float:
    """rho (scv + 1), the quantity every regime threshold is written in."""
    return cfg.rho * (cfg.dist.scv + 1.0)


def _e1(cfg: QueueConfig, k: int) -> float:
    g = cfg.dist.scv + 1.0
    return cfg.alpha * math.sqrt(g / (2.0 * cfg.rho * (2 * k + 1)))


def _e2(cfg: QueueConfig, k: int) -> float:
    return cfg.alpha * (cfg.dist.scv + 1.0) / (k + 1)


def basic_bounds(cfg: QueueConfig, k: int) -> tuple[BoundValue, BoundValue, BoundValue]:
    """E0 = 1/lam, E1 (Cauchy-Schwarz) and E2 upper bounds on m_k."""
    if k < 0:
        raise ValueError("state index must be >= 0")
    e0 = BoundValue(1.0 / cfg.lam, Direction.UPPER, Source.E0)
    e1 = BoundValue(_e1(cfg, k), Direction.UPPER, Source.E1)
    e2 = BoundValue(_e2(cfg, k), Direction.UPPER, Source.E2)
    if k == 0:
        why = "stated for k >= 1"
        e1 = _inapplicable(e1.value, Direction.UPPER, Source.E1, why)
        e2 = _inapplicable(e2.value, Direction.UPPER, Source.E2, why)
    return e0, e1, e2


def regime_case(cfg: QueueConfig) -> str:
    """'A', 'B' or 'C' according to rho (scv + 1)."""
    x = _load(cfg)
    if x > 2.0 / 3.0:
        return "A"
    if x > 0.5:
        return "B"
    return "C"


def regime_bound(cfg: QueueConfig, k: int) -> BoundValue:
    """The preferred of E0, E1, E2 for state k >= 1.

    Thresholds are inclusive exactly as the crossover inequalities are
    written, e.g. k >= 4 rho (scv+1) - 1 selects E2.
    """
    if k < 1:
        raise ValueError("regime bound is defined for k >= 1")
    x = _load(cfg)
    e0, e1, e2 = basic_bounds(cfg, k)

    def lesser() -> BoundValue:
        return BoundValue(min(e1.value, e2.value), Direction.UPPER, Source.REGIME_MIN)

    case = regime_case(cfg)
    if case == "A":
        if k < x / 4.0 - 0.5:
            return e0
        if k <= 2.0 * x - 1.0:
            return e1
        if k < 4.0 * x - 1.0:
            return lesser()
        return e2
    if case == "B":
        return lesser() if k == 1 else e2
    return e2


def class_bounds(cfg: QueueConfig, k: int) -> list[BoundValue]:
    """Bounds on m_k tied to the reliability class: NBUE, NWUE, IMRL, DFR (in that order)."""
    if k < 1:
        raise ValueError("class bounds are stated for k >= 1")
    d = cfg.dist
    tags = d.tags
    alpha, rho = cfg.alpha, cfg.rho
    expo = alpha / (k + rho)
    imrl = math.exp(k * (1.0 - 2.0 * alpha * d.mu3 / (3.0 * d.mu2**2))) * d.mu2 / (
        d.mu2 * cfg.lam + 2.0 * k * alpha
    )
    dfr = math.exp(k * (1.0 - d.scv) / 2.0) * expo
    spec = [
        (Tag.NBUE, Source.NBUE, Direction.UPPER, expo),
        (Tag.NWUE, Source.NWUE, Direction.LOWER, expo),
        (Tag.IMRL, Source.IMRL, Direction.LOWER, imrl),
        (Tag.DFR, Source.DFR, Direction.LOWER, dfr),
    ]
    out = []
    for tag, src, direction, value in spec:
        if tag in tags:
            out.append(BoundValue(value, direction, src))
        else:
            out.append(_inapplicable(value, direction, src, f"service law is not {tag.value}"))
    return out


@dataclass(frozen=True)
class CycleBounds:
    """Bounds on mu0 and E[B]; caps are the tightest applicable upper bounds."""

    mu0_cap: BoundValue
    eb_cap: BoundValue
    mu0_floor: BoundValue
    eb_floor: BoundValue
    candidates: tuple[BoundValue, ...]


def _tightest(cands: list[BoundValue], direction: Direction, fallback: BoundValue) -> BoundValue:
    live = [b for b in cands if b.applicable and b.direction is direction]
    if not live:
        return fallback
    pick = min if direction is Direction.UPPER else max
    return pick(live, key=lambda b: b.value)


def cycle_bounds(cfg: QueueConfig) -> CycleBounds:
    lam, rho = cfg.lam, cfg.rho
    x = _load(cfg)
    tags = cfg.dist.tags
    general_ok = x <= 1.0
    why = f"needs rho(scv+1) <= 1, have {x:.6g}"
    mu0_gen = BoundValue(math.exp(x) / lam, Direction.UPPER, Source.MU0_CAP, general_ok, "" if general_ok else why)
    eb_gen = BoundValue(math.expm1(x) / lam, Direction.UPPER, Source.EB_CAP, general_ok, "" if general_ok else why)

    mu0_cls = math.exp(rho) / lam
    eb_cls = math.expm1(rho) / lam
    nbue = Tag.NBUE in tags
    nwue = Tag.NWUE in tags
    mu0_nbue = BoundValue(mu0_cls, Direction.UPPER, Source.NBUE, nbue, "" if nbue else "service law is not NBUE")
    eb_nbue = BoundValue(eb_cls, Direction.UPPER, Source.NBUE, nbue, "" if nbue else "service law is not NBUE")
    mu0_nwue = BoundValue(mu0_cls, Direction.LOWER, Source.NWUE, nwue, "" if nwue else "service law is not NWUE")
    eb_nwue = BoundValue(eb_cls, Direction.LOWER, Source.NWUE, nwue, "" if nwue else "service law is not NWUE")

    return CycleBounds(
        mu0_cap=_tightest([mu0_gen, mu0_nbue], Direction.UPPER, mu0_gen),
        eb_cap=_tightest([eb_gen, eb_nbue], Direction.UPPER, eb_gen),
        mu0_floor=_tightest([mu0_nwue], Direction.LOWER, mu0_nwue),
        eb_floor=_tightest([eb_nwue], Direction.LOWER, eb_nwue),
        candidates=(mu0_gen, eb_gen, mu0_nbue, eb_nbue, mu0_nwue, eb_nwue),
    )


@dataclass(frozen=True)
class VisitBounds:
    vk_cap: BoundValue
    mkvk_cap: BoundValue
    vk_floor: BoundValue
    mkvk_floor: BoundValue
    candidates: tuple[BoundValue, ...]


def visit_bounds(cfg: QueueConfig, k: int) -> VisitBounds:
    """Bounds on v_k and m_k v_k.

    The general caps need rho(scv+1) <= 1. The class forms drop the scv
    factor; the v_k forms carry (k+1) in place of (k+rho), so the NBUE cap
    is only valid for rho <= 1 and the NWUE floor only for rho >= 1.
    """
    if k < 1:
        raise ValueError("visit bounds are stated for k >= 1")
    rho, alpha = cfg.rho, cfg.alpha
    g = cfg.dist.scv + 1.0
    x = rho * g
    tags = cfg.dist.tags
    fact = math.factorial(k)

    general_ok = x <= 1.0
    why = f"needs rho(scv+1) <= 1, have {x:.6g}"
    vk_gen = BoundValue(
        (k + 1) * (rho * g) ** (k - 1) / fact, Direction.UPPER, Source.VK_CAP,
        general_ok, "" if general_ok else why,
    )
    mkvk_gen = BoundValue(
        alpha * rho ** (k - 1) * g**k / fact, Direction.UPPER, Source.MKVK_CAP,
        general_ok, "" if general_ok else why,
    )

    vk_cls = (k + 1) * rho ** (k - 1) / fact
    mkvk_cls = alpha * rho ** (k - 1) / fact

    def flag(tag: Tag, extra_ok: bool = True, extra_why: str = "") -> tuple[bool, str]:
        if tag not in tags:
            return False, f"service law is not {tag.value}"
        if not extra_ok:
            return False, extra_why
        return True, ""

    ok, why_ = flag(Tag.NBUE, rho <= 1.0, f"(k+1) form needs rho <= 1, have {rho:.6g}")
    vk_nbue = BoundValue(vk_cls, Direction.UPPER, Source.NBUE, ok, why_)
    ok, why_ = flag(Tag.NBUE)
    mkvk_nbue = BoundValue(mkvk_cls, Direction.UPPER, Source.NBUE, ok, why_)
    ok, why_ = flag(Tag.NWUE, rho >= 1.0, f"(k+1) form needs rho >= 1, have {rho:.6g}")
    vk_nwue = BoundValue(vk_cls, Direction.LOWER, Source.NWUE, ok, why_)
    ok, why_ = flag(Tag.NWUE)
    mkvk_nwue = BoundValue(mkvk_cls, Direction.LOWER, Source.NWUE, ok, why_)

    return VisitBounds(
        vk_cap=_tightest([vk_gen, vk_nbue], Direction.UPPER, vk_gen),
        mkvk_cap=_tightest([mkvk_gen, mkvk_nbue], Direction.UPPER, mkvk_gen),
        vk_floor=_tightest([vk_nwue], Direction.LOWER, vk_nwue),
        mkvk_floor=_tightest([mkvk_nwue], Direction.LOWER, mkvk_nwue),
        candidates=(vk_gen, mkvk_gen, vk_nbue, mkvk_nbue, vk_nwue, mkvk_nwue),
    )


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def cdf_bounds(cfg: QueueConfig, k: int, t: float) -> list[BoundValue]:
    """Bounds on C_k(t): universal, NBUE, NWUE, IMRL, DFR (in that order)."""
    if k < 0:
        raise ValueError("state index must be >= 0")
    if t < 0 or math.isnan(t):
        raise ValueError("time argument must be >= 0")
    d = cfg.dist
    tags = d.tags
    lam, alpha, rho = cfg.lam, cfg.alpha, cfg.rho
    universal = _clamp01(-math.expm1(-lam * t))
    expo = _clamp01(-math.expm1(-(k + rho) * t / alpha))
    imrl = _clamp01(
        -math.expm1(-lam * t + k * (-2.0 * alpha * t / d.mu2 - 2.0 * alpha * d.mu3 / (3.0 * d.mu2**2) + 1.0))
    )
    dfr = _clamp01(-math.expm1(-(k + rho) * t / alpha + k * (1.0 - d.scv) / 2.0))
    out = [BoundValue(universal, Direction.LOWER, Source.UNIVERSAL)]
    for tag, src, direction, value in (
        (Tag.NBUE, Source.NBUE, Direction.LOWER, expo),
        (Tag.NWUE, Source.NWUE, Direction.UPPER, expo),
        (Tag.IMRL, Source.IMRL, Direction.UPPER, imrl),
        (Tag.DFR, Source.DFR, Direction.UPPER, dfr),
    ):
        if tag in tags:
            out.append(BoundValue(value, direction, src))
        else:
            out.append(_inapplicable(value, direction, src, f"service law is not {tag.value}"))
    return out


@dataclass(frozen=True)
class ErrorReport:
    """Relative errors of the E2-based cycle bounds against the exact values.

    epsilon is the relative error of the mu0 cap, delta that of the E[B] cap.
    """

    epsilon: float
    epsilon_cap: float
    delta: float
    delta_cap: float
    universal_cap: float
    applicable: bool = True
    inapplicability_reason: str = ""


def error_report(cfg: QueueConfig) -> ErrorReport:
    rho, scv = cfg.rho, cfg.dist.scv
    eps = math.expm1(rho * scv)
    eps_cap = math.expm1(scv / (scv + 1.0))
    denom = -math.expm1(-rho)
    x = _load(cfg)
    ok = x <= 1.0
    return ErrorReport(
        epsilon=eps,
        epsilon_cap=eps_cap,
        delta=eps / denom,
        delta_cap=eps_cap / denom,
        universal_cap=E_MINUS_1,
        applicable=ok,
        inapplicability_reason="" if ok else f"needs rho(scv+1) <= 1, have {x:.6g}",
    )


def goodness_threshold(r: float, rho: float | None = None) -> float:
    """Largest scv that keeps the relative error of the cap at or below ``r``.

    Without ``rho`` the mu0 criterion is used (requires 0 < r < e - 1); with
    ``rho`` the E[B] criterion (requires 0 < r < (e - 1)/(1 - e^{-rho})).
    """
    if rho is None:
        if not 0.0 < r < E_MINUS_1:
            raise ValueError(f"r must lie in (0, e-1), got {r!r}")
        s = math.log1p(r)
    else:
        if not rho > 0:
            raise ValueError("rho must be positive")
        scale = -math.expm1(-rho)
        if not 0.0 < r < E_MINUS_1 / scale:
            raise ValueError(f"r must lie in (0, (e-1)/(1-e^-rho)) = (0, {E_MINUS_1 / scale:.6g}), got {r!r}")
        s = math.log1p(r * scale)
    return s / (1.0 - s)
