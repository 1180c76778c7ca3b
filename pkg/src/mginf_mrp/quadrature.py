"""Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

The integrand must accept a 1-d ``numpy`` array of abscissae. Error
estimation follows the QUADPACK QK15 heuristic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import NumericalFailure

__all__ = ["QuadratureError", "QuadResult", "integrate"]

# QUADPACK qk15 abscissae (descending, last is the centre) and weights
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
# 7-point Gauss weights; they sit on _XGK[1], _XGK[3], _XGK[5], _XGK[7]
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

# full symmetric node set on [-1, 1] and matching weight vectors
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[9, 11, 13]] = _WG[:3][::-1]

_EPS = np.finfo(float).eps


class QuadratureError(NumericalFailure):
    """Adaptive refinement ran out of budget before meeting the tolerance."""


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int
    intervals: int


def _kronrod(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> tuple[float, float]:
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fv = np.asarray(f(centre + half * _NODES), dtype=float)
    resk = float(_KW @ fv)
    resg = float(_GW @ fv)
    mean = 0.5 * resk
    resasc = float(_KW @ np.abs(fv - mean))
    resabs = float(_KW @ np.abs(fv))
    resk *= half
    resasc *= abs(half)
    resabs *= abs(half)
    err = abs((resk - resg * half))
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(50 * _EPS * resabs, err)
    return resk, err


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-12,
    points: Iterable[float] = (),
    initial_pieces: int = 8,
    max_evals: int = 1_000_000,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]``.

    The interval is first cut at ``points`` (kinks of the integrand) and into
    ``initial_pieces`` equal parts; the piece with the largest error estimate
    is then bisected until the summed estimate drops below
    ``max(abs_tol, rel_tol * |value|)``.

    Raises
    ------
    QuadratureError
        If ``max_evals`` integrand evaluations are spent first.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if b == a:
        return QuadResult(0.0, 0.0, 0, 0)
    if b < a:
        r = integrate(
            f, b, a, abs_tol=abs_tol, rel_tol=rel_tol, points=points,
            initial_pieces=initial_pieces, max_evals=max_evals,
        )
        return QuadResult(-r.value, r.error, r.evaluations, r.intervals)

    cuts = sorted({a, b, *(p for p in points if a < p < b)})
    edges: list[float] = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        edges.extend(np.linspace(lo, hi, initial_pieces + 1)[:-1].tolist())
    edges.append(b)

    heap: list[tuple[float, float, float, float]] = []  # (-err, lo, hi, value)
    total = 0.0
    total_err = 0.0
    evals = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = _kronrod(f, lo, hi)
        evals += 15
        total += val
        total_err += err
        heapq.heappush(heap, (-err, lo, hi, val))

    while total_err > max(abs_tol, rel_tol * abs(total)):
        if evals + 30 > max_evals:
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after {evals} evaluations "
                f"(error estimate {total_err:.3g})"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # interval cannot be split further in floating point
            raise QuadratureError(f"interval [{lo}, {hi}] exhausted floating-point resolution")
        v1, e1 = _kronrod(f, lo, mid)
        v2, e2 = _kronrod(f, mid, hi)
        evals += 30
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        if len(heap) % 64 == 0:
            # resum to keep incremental drift out of the stopping test
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)

    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return QuadResult(total, total_err, evals, len(heap))
