"""Service-time distribution catalog.

Five closed-form laws: exponential, deterministic, Erlang, two-branch
hyperexponential and uniform. Each provides the survival function, the
equilibrium (stationary-excess) survival, the first three raw moments and a
set of reliability-class tags used to pick the applicable bounds.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Kind",
    "Tag",
    "ServiceDistribution",
    "Moments",
    "parse_spec",
    "survival",
    "equilibrium_survival",
    "moments",
    "class_tags",
    "sample",
]


class Kind(str, enum.Enum):
    EXPONENTIAL = "exp"
    DETERMINISTIC = "det"
    ERLANG = "erlang"
    HYPEREXP2 = "hyperexp2"
    UNIFORM = "uniform"


class Tag(str, enum.Enum):
    NBUE = "NBUE"
    NWUE = "NWUE"
    IMRL = "IMRL"
    DFR = "DFR"
    EXPONENTIAL = "EXPONENTIAL"
    DETERMINISTIC = "DETERMINISTIC"


_EXPONENTIAL_TAGS = frozenset({Tag.NBUE, Tag.NWUE, Tag.IMRL, Tag.DFR, Tag.EXPONENTIAL})

# accepted keys per kind, in canonical order
_KEYS: dict[Kind, tuple[str, ...]] = {
    Kind.EXPONENTIAL: ("alpha",),
    Kind.DETERMINISTIC: ("alpha",),
    Kind.ERLANG: ("n", "alpha"),
    Kind.HYPEREXP2: ("p", "alpha1", "alpha2"),
    Kind.UNIFORM: ("a", "b"),
}

_ALIASES = {"exponential": Kind.EXPONENTIAL, "deterministic": Kind.DETERMINISTIC}

_SPEC_RE = re.compile(r"^([a-z0-9]+):([a-z0-9]+=[^,=\s]+(?:,[a-z0-9]+=[^,=\s]+)*)$")
_NUMBER_RE = re.compile(r"^[+]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class Moments:
    mean: float
    mu2: float
    mu3: float
    scv: float  # squared coefficient of variation, mu2/mean^2 - 1


@dataclass(frozen=True)
class ServiceDistribution:
    """A validated member of the service-time catalog.

    Instances are immutable. Build them through the classmethods or
    :func:`parse_spec`; ``params`` keeps the keys of the text form.
    """

    kind: Kind
    params: tuple[tuple[str, float], ...]
    _moments: Moments = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        _validate(self.kind, dict(self.params))
        object.__setattr__(self, "_moments", _closed_form_moments(self.kind, dict(self.params)))

    # constructors -------------------------------------------------------

    @classmethod
    def exponential(cls, alpha: float) -> ServiceDistribution:
        return cls(Kind.EXPONENTIAL, (("alpha", float(alpha)),))

    @classmethod
    def deterministic(cls, alpha: float) -> ServiceDistribution:
        return cls(Kind.DETERMINISTIC, (("alpha", float(alpha)),))

    @classmethod
    def erlang(cls, n: int, alpha: float) -> ServiceDistribution:
        return cls(Kind.ERLANG, (("n", n), ("alpha", float(alpha))))

    @classmethod
    def hyperexp2(cls, p: float, alpha1: float, alpha2: float) -> ServiceDistribution:
        return cls(
            Kind.HYPEREXP2, (("p", float(p)), ("alpha1", float(alpha1)), ("alpha2", float(alpha2)))
        )

    @classmethod
    def uniform(cls, a: float, b: float) -> ServiceDistribution:
        return cls(Kind.UNIFORM, (("a", float(a)), ("b", float(b))))

    # derived quantities --------------------------------------------------

    def __getitem__(self, key: str) -> float:
        return dict(self.params)[key]

    @property
    def mean(self) -> float:
        return self._moments.mean

    @property
    def mu2(self) -> float:
        return self._moments.mu2

    @property
    def mu3(self) -> float:
        return self._moments.mu3

    @property
    def scv(self) -> float:
        return self._moments.scv

    @property
    def support_end(self) -> float:
        """Right end of the support (``inf`` for unbounded laws)."""
        if self.kind is Kind.DETERMINISTIC:
            return self["alpha"]
        if self.kind is Kind.UNIFORM:
            return self["b"]
        return math.inf

    @property
    def kinks(self) -> tuple[float, ...]:
        """Interior points where the equilibrium tail is not smooth."""
        if self.kind is Kind.UNIFORM and self["a"] > 0:
            return (self["a"],)
        return ()

    @property
    def tags(self) -> frozenset[Tag]:
        return class_tags(self)

    @property
    def spec(self) -> str:
        """Canonical spec string, parseable by :func:`parse_spec`."""
        body = ",".join(f"{k}={_fmt_param(v)}" for k, v in self.params)
        return f"{self.kind.value}:{body}"

    def __str__(self) -> str:
        return self.spec


def _fmt_param(v: float) -> str:
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _validate(kind: Kind, p: dict[str, float]) -> None:
    expected = set(_KEYS[kind])
    if set(p) != expected:
        raise ValueError(f"{kind.value}: expected keys {sorted(expected)}, got {sorted(p)}")
    for key, val in p.items():
        if not math.isfinite(val):
            raise ValueError(f"{kind.value}: {key} must be finite")
    if kind in (Kind.EXPONENTIAL, Kind.DETERMINISTIC):
        if p["alpha"] <= 0:
            raise ValueError(f"{kind.value}: alpha must be positive")
    elif kind is Kind.ERLANG:
        if int(p["n"]) != p["n"] or p["n"] < 1:
            raise ValueError("erlang: n must be an integer >= 1")
        if p["alpha"] <= 0:
            raise ValueError("erlang: alpha must be positive")
    elif kind is Kind.HYPEREXP2:
        if not 0 < p["p"] < 1:
            raise ValueError("hyperexp2: p must lie in (0, 1)")
        if p["alpha1"] <= 0 or p["alpha2"] <= 0:
            raise ValueError("hyperexp2: alpha1 and alpha2 must be positive")
    elif kind is Kind.UNIFORM:
        if not 0 <= p["a"] < p["b"]:
            raise ValueError("uniform: need 0 <= a < b")


def _closed_form_moments(kind: Kind, p: dict[str, float]) -> Moments:
    if kind is Kind.EXPONENTIAL:
        a = p["alpha"]
        m1, m2, m3 = a, 2 * a**2, 6 * a**3
    elif kind is Kind.DETERMINISTIC:
        a = p["alpha"]
        m1, m2, m3 = a, a**2, a**3
    elif kind is Kind.ERLANG:
        n, a = int(p["n"]), p["alpha"]
        m1 = a
        m2 = a**2 * (n + 1) / n
        m3 = a**3 * (n + 1) * (n + 2) / n**2
    elif kind is Kind.HYPEREXP2:
        q, a1, a2 = p["p"], p["alpha1"], p["alpha2"]
        m1 = q * a1 + (1 - q) * a2
        m2 = 2 * (q * a1**2 + (1 - q) * a2**2)
        m3 = 6 * (q * a1**3 + (1 - q) * a2**3)
    else:
        a, b = p["a"], p["b"]
        # mu_r = (b^{r+1} - a^{r+1}) / ((r+1)(b-a)), expanded to avoid cancellation
        m1 = (a + b) / 2
        m2 = (a * a + a * b + b * b) / 3
        m3 = (a + b) * (a * a + b * b) / 4
    if kind is Kind.DETERMINISTIC:
        scv = 0.0
    elif kind is Kind.EXPONENTIAL:
        scv = 1.0
    elif kind is Kind.ERLANG:
        scv = 1.0 / int(p["n"])
    elif kind is Kind.UNIFORM:
        scv = (p["b"] - p["a"]) ** 2 / (3 * (p["a"] + p["b"]) ** 2)
    else:
        scv = m2 / m1**2 - 1.0
    return Moments(m1, m2, m3, scv)


def parse_spec(text: str) -> ServiceDistribution:
    """Parse ``kind:key=val[,key=val...]`` into a :class:`ServiceDistribution`.

    >>> parse_spec("erlang:n=2,alpha=1.0").scv
    0.5
    """
    m = _SPEC_RE.match(text.strip())
    if m is None:
        raise ValueError(f"malformed distribution spec {text!r}")
    name, body = m.groups()
    try:
        kind = _ALIASES.get(name) or Kind(name)
    except ValueError:
        raise ValueError(f"unknown distribution kind {name!r}") from None
    params: dict[str, float] = {}
    for item in body.split(","):
        key, raw = item.split("=")
        if key in params:
            raise ValueError(f"duplicate key {key!r} in {text!r}")
        if not _NUMBER_RE.match(raw):
            raise ValueError(f"{key}={raw!r} is not a non-negative decimal literal")
        params[key] = float(raw)
    if set(params) != set(_KEYS[kind]):
        raise ValueError(f"{kind.value}: expected keys {list(_KEYS[kind])}, got {list(params)}")
    if kind is Kind.ERLANG:
        n = params["n"]
        if n != int(n) or n < 1:
            raise ValueError("erlang: n must be an integer >= 1")
        params["n"] = int(n)
    return ServiceDistribution(kind, tuple((k, params[k]) for k in _KEYS[kind]))


def _check_nonneg(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("time argument must be >= 0")
    return arr


def _wrap(out: np.ndarray, x):
    return float(out) if np.ndim(x) == 0 else out


def _erlang_tail_sum(n: int, y: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_i weights[i] * e^{-y} y^i / i!, evaluated in log space."""
    i = np.arange(n, dtype=float)
    lgam = np.array([math.lgamma(j + 1.0) for j in range(n)])
    y = np.atleast_1d(y)
    logy = np.log(np.where(y > 0, y, 1.0))
    powers = i[None, :] * logy[:, None]
    # y == 0 contributes only the i == 0 term
    powers[(y == 0)[:, None] & (i[None, :] > 0)] = -np.inf
    logterms = -y[:, None] + powers - lgam
    return np.exp(logterms) @ weights


def survival(d: ServiceDistribution, x):
    """Survival function ``1 - G(x)``; accepts scalars or arrays of ``x >= 0``."""
    x_arr = _check_nonneg(x)
    k = d.kind
    if k is Kind.EXPONENTIAL:
        out = np.exp(-x_arr / d["alpha"])
    elif k is Kind.DETERMINISTIC:
        out = np.where(x_arr < d["alpha"], 1.0, 0.0)
    elif k is Kind.ERLANG:
        n = int(d["n"])
        y = np.ravel(x_arr) * n / d["alpha"]
        out = _erlang_tail_sum(n, y, np.ones(n)).reshape(x_arr.shape)
    elif k is Kind.HYPEREXP2:
        p, a1, a2 = d["p"], d["alpha1"], d["alpha2"]
        out = p * np.exp(-x_arr / a1) + (1 - p) * np.exp(-x_arr / a2)
    else:
        a, b = d["a"], d["b"]
        out = np.clip((b - x_arr) / (b - a), 0.0, 1.0)
    return _wrap(np.asarray(out, dtype=float), x)


def equilibrium_survival(d: ServiceDistribution, t):
    """Tail of the equilibrium law, ``(1/mean) * int_t^inf S(x) dx``.

    Every catalog member has a closed form here, so no quadrature is used.
    """
    t_arr = _check_nonneg(t)
    k = d.kind
    if k is Kind.EXPONENTIAL:
        out = np.exp(-t_arr / d["alpha"])
    elif k is Kind.DETERMINISTIC:
        out = np.maximum(0.0, 1.0 - t_arr / d["alpha"])
    elif k is Kind.ERLANG:
        n = int(d["n"])
        y = np.ravel(t_arr) * n / d["alpha"]
        w = (n - np.arange(n, dtype=float)) / n
        out = _erlang_tail_sum(n, y, w).reshape(t_arr.shape)
    elif k is Kind.HYPEREXP2:
        p, a1, a2 = d["p"], d["alpha1"], d["alpha2"]
        out = (p * a1 * np.exp(-t_arr / a1) + (1 - p) * a2 * np.exp(-t_arr / a2)) / d.mean
    else:
        a, b = d["a"], d["b"]
        before = (a - t_arr) + (b - a) / 2
        inside = np.maximum(b - t_arr, 0.0) ** 2 / (2 * (b - a))
        out = np.where(t_arr < a, before, inside) / d.mean
    return _wrap(np.clip(np.asarray(out, dtype=float), 0.0, 1.0), t)


def moments(d: ServiceDistribution) -> Moments:
    return d._moments


def class_tags(d: ServiceDistribution) -> frozenset[Tag]:
    k = d.kind
    if k is Kind.EXPONENTIAL:
        return _EXPONENTIAL_TAGS
    if k is Kind.DETERMINISTIC:
        return frozenset({Tag.NBUE, Tag.DETERMINISTIC})
    if k is Kind.ERLANG:
        return _EXPONENTIAL_TAGS if int(d["n"]) == 1 else frozenset({Tag.NBUE})
    if k is Kind.HYPEREXP2:
        if d["alpha1"] == d["alpha2"]:
            return _EXPONENTIAL_TAGS
        return frozenset({Tag.NWUE, Tag.IMRL, Tag.DFR})
    return frozenset({Tag.NBUE})


def sample(d: ServiceDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` service times.

    Inversion for exponential and uniform, sum of exponential phases for
    Erlang, branch selection followed by inversion for the hyperexponential.
    """
    k = d.kind
    if k is Kind.DETERMINISTIC:
        return np.full(size, d["alpha"])
    if k is Kind.EXPONENTIAL:
        return -d["alpha"] * np.log1p(-rng.random(size))
    if k is Kind.UNIFORM:
        a, b = d["a"], d["b"]
        return a + (b - a) * rng.random(size)
    if k is Kind.ERLANG:
        n = int(d["n"])
        u = rng.random((size, n))
        return -(d["alpha"] / n) * np.log1p(-u).sum(axis=1)
    p, a1, a2 = d["p"], d["alpha1"], d["alpha2"]
    branch = rng.random(size) < p
    scale = np.where(branch, a1, a2)
    return -scale * np.log1p(-rng.random(size))
