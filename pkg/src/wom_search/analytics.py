"""Closed-form layer of the two-firm search model with word-of-mouth sharing.

Every quantity here is a deterministic function of the primitives
``(q, k, v)``.  Money quantities scale linearly in the valuation ``v``, so the
heavy lifting is done at ``v = 1`` and rescaled on the way out.

Powers such as ``(1 - q) ** (k + 1)`` are never formed directly; they are
carried as logarithms (``(k + 1) * log1p(-q)``) and differences of powers go
through ``expm1``.  That keeps ``eta`` accurate for ``k`` in the millions and
``q`` down to ``1e-9``, where naive evaluation cancels catastrophically.

Functions accept a scalar ``q`` (returning ``float``) or a numpy array of
``q`` values (returning an array), which is what the equilibrium grid scans
rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "MarketParams",
    "SearchStrategy",
    "InformationShares",
    "PriceDistribution",
    "eta",
    "log_eta",
    "information_shares",
    "price_distribution",
    "price_cdf",
    "price_quantile",
    "expected_price",
    "expected_min_gap",
    "search_benefit",
    "second_search_benefit",
    "firm_profit",
    "profit_at_price",
    "lower_cost_bound",
]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a formula."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarketParams:
    """Primitives of one market: valuation, search cost, friends, link cost."""

    v: float
    c: float
    k: int
    l: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.v) and self.v > 0):
            raise DomainError(f"v must be positive and finite, got {self.v!r}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"c must be positive and finite, got {self.c!r}")
        _check_k(self.k)
        if not (math.isfinite(self.l) and self.l >= 0):
            raise DomainError(f"l must be non-negative, got {self.l!r}")


@dataclass(frozen=True)
class SearchStrategy:
    """Probabilities of sampling 0, 1 and 2 price quotes."""

    q0: float
    q1: float
    q2: float = 0.0

    def __post_init__(self):
        for name in ("q0", "q1", "q2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {val!r}")
        if abs(self.q0 + self.q1 + self.q2 - 1.0) > 1e-12:
            raise DomainError("search probabilities must sum to one")

    @classmethod
    def mixing(cls, q: float) -> "SearchStrategy":
        """Randomize between no search (1 - q) and one search (q)."""
        return cls(q0=1.0 - q, q1=q, q2=0.0)

    @property
    def q(self) -> float:
        return self.q1


@dataclass(frozen=True)
class InformationShares:
    """How many distinct prices a consumer ends up seeing: 0, 1 or 2."""

    none_share: float
    captive_share: float
    compare_share: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.none_share, self.captive_share, self.compare_share)


@dataclass(frozen=True)
class PriceDistribution:
    """Equilibrium mixed pricing strategy ``F(p) = 1 - eta (v/p - 1)``."""

    eta: float
    v: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise DomainError(f"eta must be positive and finite, got {self.eta!r}")
        if not (math.isfinite(self.v) and self.v > 0):
            raise DomainError(f"v must be positive, got {self.v!r}")

    @property
    def p_low(self) -> float:
        return self.eta * self.v / (1.0 + self.eta)

    @property
    def p_high(self) -> float:
        return self.v

    def cdf(self, p):
        return price_cdf(p, self)

    def quantile(self, u):
        return price_quantile(u, self)

    def mean(self) -> float:
        return expected_price(self.eta, self.v)

    def mean_min_of_two(self) -> float:
        return self.mean() - expected_min_gap(self.eta, self.v)


# ---------------------------------------------------------------------------
# Argument checks
# ---------------------------------------------------------------------------


def _check_k(k) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise DomainError(f"k must be an integer, got {k!r}")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k!r}")
    return int(k)


def _as_q(q, allow_zero: bool):
    arr = np.asarray(q, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("q must not be NaN")
    lo_ok = arr >= 0.0 if allow_zero else arr > 0.0
    if not np.all(lo_ok & (arr <= 1.0)):
        interval = "[0, 1]" if allow_zero else "(0, 1]"
        raise DomainError(f"q must lie in {interval}, got {q!r}")
    return arr


def _check_money(name: str, x) -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"{name} must be positive and finite, got {x!r}")
    return x


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


# ---------------------------------------------------------------------------
# Power bookkeeping
# ---------------------------------------------------------------------------


def _log_powers(q: np.ndarray, n: int):
    """Return ``log (1 - q/2)**n`` and ``log (1 - q)**n``."""
    with np.errstate(divide="ignore"):
        return n * np.log1p(-0.5 * q), n * np.log1p(-q)


def _captive_half(q: np.ndarray, n: int) -> np.ndarray:
    """``(1 - q/2)**n - (1 - q)**n``, computed without cancellation."""
    la, lb = _log_powers(q, n)
    with np.errstate(invalid="ignore"):
        return -np.exp(la) * np.expm1(lb - la)


def _compare(q: np.ndarray, n: int) -> np.ndarray:
    """``1 + (1 - q)**n - 2 (1 - q/2)**n`` via ``(1 - A)**2 + (B - A**2)``."""
    la, _ = _log_powers(q, n)
    r = q / (2.0 - q)
    with np.errstate(divide="ignore"):
        lratio = n * np.log1p(-r * r)
    return np.expm1(la) ** 2 + np.exp(2.0 * la) * np.expm1(lratio)


# ---------------------------------------------------------------------------
# Information structure
# ---------------------------------------------------------------------------


def information_shares(q: float, k: int) -> InformationShares:
    """Shares of consumers observing zero, one or two distinct prices.

    The pool behind a consumer is herself plus her ``k`` friends.  Each
    member searches with probability ``q`` and picks a firm uniformly, so a
    given firm stays unobserved with probability ``(1 - q/2) ** (k + 1)``.
    """
    k = _check_k(k)
    qa = _as_q(q, allow_zero=True)
    if qa.ndim:
        raise DomainError("information_shares takes a scalar q")
    n = k + 1
    _, lb = _log_powers(qa, n)
    none = float(np.exp(lb))
    captive = float(2.0 * _captive_half(qa, n))
    compare = float(_compare(qa, n))
    return InformationShares(none, captive, compare)


def eta(q, k: int):
    """Captive-to-comparer ratio ``alpha_1 / (2 alpha_2)``.

    Diverges as ``q -> 0``; equals ``1 / (2 (2**k - 1))`` at ``q = 1``.
    """
    k = _check_k(k)
    qa = _as_q(q, allow_zero=False)
    n = k + 1
    return _ret(_captive_half(qa, n) / _compare(qa, n))


def log_eta(q, k: int):
    """Natural log of :func:`eta`, safe over the many decades ``eta`` spans."""
    k = _check_k(k)
    qa = _as_q(q, allow_zero=False)
    n = k + 1
    la, lb = _log_powers(qa, n)
    with np.errstate(invalid="ignore"):
        log_num = la + np.log(-np.expm1(lb - la))
    return _ret(log_num - np.log(_compare(qa, n)))


# ---------------------------------------------------------------------------
# Price distribution
# ---------------------------------------------------------------------------


def price_distribution(q: float, k: int, v: float = 1.0) -> PriceDistribution:
    return PriceDistribution(eta=float(eta(q, k)), v=v)


def price_cdf(p, dist: PriceDistribution):
    """``F(p) = 1 - eta (v/p - 1)`` on ``[p_low, v]``."""
    pa = np.asarray(p, dtype=float)
    # small slack so that p_low computed in floating point is accepted
    slack = 1e-12 * dist.v
    if np.any(pa < dist.p_low - slack) or np.any(pa > dist.v + slack) or np.any(np.isnan(pa)):
        raise DomainError(f"price outside support [{dist.p_low}, {dist.v}]: {p!r}")
    out = 1.0 - dist.eta * (dist.v / pa - 1.0)
    return _ret(np.clip(out, 0.0, 1.0))


def price_quantile(u, dist: PriceDistribution):
    """Inverse of :func:`price_cdf`: ``p = eta v / (eta + 1 - u)``."""
    ua = np.asarray(u, dtype=float)
    if np.any(np.isnan(ua)) or np.any(ua < 0.0) or np.any(ua > 1.0):
        raise DomainError(f"u must lie in [0, 1], got {u!r}")
    return _ret(dist.eta * dist.v / (dist.eta + 1.0 - ua))


# ---------------------------------------------------------------------------
# Moments of the price distribution (per unit of v)
# ---------------------------------------------------------------------------

_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 20
_N = np.arange(1, _SERIES_TERMS + 1, dtype=float)
# 1 - log1p(z)/z = sum_{n>=1} (-1)^(n+1) z^n / (n+1)
_SURPLUS_COEF = (-1.0) ** (_N + 1) / (_N + 1)
# eta((1+2 eta) log1p(1/eta) - 2) = sum_{n>=2} (-1)^n (n-1)/(n(n+1)) z^(n-1)
_M = _N + 1
_GAP_COEF = (-1.0) ** _M * (_M - 1) / (_M * (_M + 1))


def _poly(coef: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for c in coef[::-1]:
        out = out * z + c
    return out


def _check_eta(e):
    ea = np.asarray(e, dtype=float)
    if np.any(~np.isfinite(ea)) or np.any(ea <= 0):
        raise DomainError(f"eta must be positive and finite, got {e!r}")
    return ea


# eta underflows to 0 for large k with q near 1; clamping it at a tiny floor
# gives the eta -> 0 limits (mean price 0, no dispersion) to double precision.
_ETA_FLOOR = 1e-300


def _mean_unit(ea: np.ndarray) -> np.ndarray:
    z = 1.0 / np.maximum(ea, _ETA_FLOOR)
    return np.log1p(z) / z


def _surplus_unit(ea: np.ndarray) -> np.ndarray:
    """``1 - E[p]/v``; series in ``1/eta`` when eta is large."""
    z = 1.0 / np.maximum(ea, _ETA_FLOOR)
    zs = np.minimum(z, _SERIES_CUTOFF)
    series = zs * _poly(_SURPLUS_COEF, zs)
    return np.where(z < _SERIES_CUTOFF, series, 1.0 - np.log1p(z) / z)


def _gap_unit(ea: np.ndarray) -> np.ndarray:
    """``(E[p] - E[min(p1, p2)]) / v``."""
    e = np.maximum(ea, _ETA_FLOOR)
    z = 1.0 / e
    zs = np.minimum(z, _SERIES_CUTOFF)
    series = zs * _poly(_GAP_COEF, zs)
    return np.where(z < _SERIES_CUTOFF, series, e * ((1.0 + 2.0 * e) * np.log1p(z) - 2.0))


def expected_price(eta_value, v: float = 1.0):
    """Mean posted price ``v eta log(1 + 1/eta)``."""
    v = _check_money("v", v)
    return _ret(v * _mean_unit(_check_eta(eta_value)))


def expected_min_gap(eta_value, v: float = 1.0):
    """``E[p] - E[min(p1, p2)] = eta v ((1 + 2 eta) log(1 + 1/eta) - 2)``."""
    v = _check_money("v", v)
    return _ret(v * _gap_unit(_check_eta(eta_value)))


# ---------------------------------------------------------------------------
# Consumer incentives and firm profit
# ---------------------------------------------------------------------------


def search_benefit(q, k: int, v: float = 1.0):
    """Expected gain from searching one firm for a consumer with ``k`` friends.

    ``(1-q)^k (v - E[p]) + ((1-q/2)^k - (1-q)^k) (E[p] - E[min])``.
    The first term pays when no friend brings a quote, the second when
    friends saw exactly one firm and own search lands on the other.
    """
    k = _check_k(k)
    v = _check_money("v", v)
    qa = _as_q(q, allow_zero=False)
    ea = _captive_half(qa, k + 1) / _compare(qa, k + 1)
    _, lb = _log_powers(qa, k)
    alone = np.exp(lb)
    one_firm = _captive_half(qa, k)
    return _ret(v * (alone * _surplus_unit(ea) + one_firm * _gap_unit(ea)))


def second_search_benefit(q, k: int, v: float = 1.0):
    """Gain from adding a second quote, ``(1 - q/2)^k (E[p] - E[min])``."""
    k = _check_k(k)
    v = _check_money("v", v)
    qa = _as_q(q, allow_zero=False)
    ea = _captive_half(qa, k + 1) / _compare(qa, k + 1)
    la, _ = _log_powers(qa, k)
    return _ret(v * np.exp(la) * _gap_unit(ea))


def firm_profit(q, k: int, v: float = 1.0):
    """Equilibrium profit per firm, ``v * captive_share / 2``."""
    k = _check_k(k)
    v = _check_money("v", v)
    qa = _as_q(q, allow_zero=False)
    return _ret(v * _captive_half(qa, k + 1))


def profit_at_price(p, q: float, k: int, v: float = 1.0):
    """Profit of a firm posting ``p`` against a rival drawing from ``F``.

    ``p (alpha_1/2 + alpha_2 (1 - F(p)))``; constant on the support.
    """
    shares = information_shares(q, k)
    dist = price_distribution(q, k, v)
    pa = np.asarray(p, dtype=float)
    return _ret(pa * (0.5 * shares.captive_share + shares.compare_share * (1.0 - price_cdf(pa, dist))))


def lower_cost_bound(k: int, v: float = 1.0) -> float:
    """Closed-form ``q -> 1`` limit of :func:`search_benefit`.

    With ``x = 2**k - 1`` this is ``v (log(2x + 1) / (2 x**2) - 1 / (x (x + 1)))``.
    Underflows to 0.0 for k beyond roughly 540.
    """
    k = _check_k(k)
    v = _check_money("v", v)
    if k <= 60:
        x = float(2**k - 1)
        return v * (math.log(2.0 * x + 1.0) / (2.0 * x * x) - 1.0 / (x * (x + 1.0)))
    # x == 2**k to double precision; log(2x + 1) = (k + 1) log 2
    log_x = k * math.log(2.0)
    first = math.log((k + 1) * math.log(2.0) / 2.0) - 2.0 * log_x
    second = -2.0 * log_x
    return v * (math.exp(first) - math.exp(second))
