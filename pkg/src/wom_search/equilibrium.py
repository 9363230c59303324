"""Search equilibria: roots of the indifference condition and what follows.

The benefit curve ``q -> search_benefit(q, k, v)`` starts at zero, rises to a
peak ``c_upper`` and falls back to ``c_lower`` at ``q = 1``.  Interior
equilibria are the crossings of that curve with the search cost ``c``; the
crossing on the falling branch is the stable one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics as an
from .analytics import DomainError, MarketParams

__all__ = [
    "Stability",
    "EquilibriumRoot",
    "EquilibriumReport",
    "CostBounds",
    "LinkDecision",
    "ScanRow",
    "Trajectory",
    "bracketing_grid",
    "golden_section_max",
    "solve_search_equilibrium",
    "cost_bounds",
    "link_decision",
    "searcher_link_value",
    "nonsearcher_link_value",
    "asymptotic_scan",
    "best_response_dynamics",
    "NO_SEARCH_NOTE",
]

Q_MIN = 1e-9
Q_MAX = 1.0 - 1e-9
GRID_POINTS = 2048
ROOT_XTOL = 1e-12
DIFF_STEP = 1e-6
SLOPE_TOL = 1e-8
TANGENT_VALUE_TOL = 1e-10
BR_GAIN = 0.1
BR_CLAMP = 1e-6
BR_TOL = 1e-10

NO_SEARCH_NOTE = (
    "q = 0 (nobody searches, no trade) is always an equilibrium; it is not "
    "reported as a root"
)


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    TANGENT = "Tangent"


@dataclass(frozen=True)
class EquilibriumRoot:
    q: float
    stability: Stability
    eta: float
    expected_price: float
    expected_min_price: float
    firm_profit: float
    support_low: float
    support_high: float
    slope: float

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["stability"] = self.stability.value
        return d


@dataclass(frozen=True)
class EquilibriumReport:
    """Roots of the indifference condition plus a status string."""

    params: MarketParams
    roots: list[EquilibriumRoot]
    status: str
    c_upper: float
    note: str = NO_SEARCH_NOTE

    @property
    def stable(self) -> EquilibriumRoot | None:
        for r in self.roots:
            if r.stability is Stability.STABLE:
                return r
        return None

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


@dataclass(frozen=True)
class CostBounds:
    c_lower: float
    c_upper: float
    q_at_peak: float
    c_lower_limit: float = field(default=math.nan, compare=False)


@dataclass(frozen=True)
class LinkDecision:
    searcher_forms: bool
    nonsearcher_forms: bool
    l_bar: float
    nonsearcher_value: float


# ---------------------------------------------------------------------------
# Numerical helpers
# ---------------------------------------------------------------------------


def bracketing_grid(points: int = GRID_POINTS) -> np.ndarray:
    """Uniform grid on ``[Q_MIN, Q_MAX]`` merged with a log-spaced one.

    The uniform half matches the curve for small ``k``; the log half resolves
    the region ``q ~ 1/k`` where both crossings live once ``k`` is large.
    """
    uniform = np.linspace(Q_MIN, Q_MAX, points)
    logs = np.geomspace(Q_MIN, Q_MAX, points)
    return np.unique(np.concatenate([uniform, logs]))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximize a unimodal ``f`` on ``[a, b]``; return ``(x, f(x))``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def _bisect(g, lo: float, hi: float, glo: float, xtol: float = ROOT_XTOL) -> float:
    # run to floating resolution: for large k the curve is steep in q and a
    # fixed 1e-12 width alone does not pin the residual
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= xtol and hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return 0.5 * (lo + hi)


def _slope(q: float, k: int) -> float:
    """Central difference of the unit-v benefit curve."""
    h = min(DIFF_STEP, 1e-3 * q, 1e-3 * (1.0 - q))
    return (an.search_benefit(q + h, k) - an.search_benefit(q - h, k)) / (2.0 * h)


def _classify(slope: float) -> Stability:
    if slope < -SLOPE_TOL:
        return Stability.STABLE
    if slope > SLOPE_TOL:
        return Stability.UNSTABLE
    return Stability.TANGENT


def _make_root(q: float, k: int, v: float) -> EquilibriumRoot:
    slope = _slope(q, k)
    e = an.eta(q, k)
    ep = an.expected_price(e, v)
    gap = an.expected_min_gap(e, v)
    return EquilibriumRoot(
        q=q,
        stability=_classify(slope),
        eta=e,
        expected_price=ep,
        expected_min_price=ep - gap,
        firm_profit=an.firm_profit(q, k, v),
        support_low=e * v / (1.0 + e),
        support_high=v,
        slope=slope * v,
    )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def cost_bounds(v: float, k: int) -> CostBounds:
    """Search-cost band ``[c_lower, c_upper]`` for ``k`` friends.

    ``c_lower`` is the closed form; it is cross-checked against the benefit
    curve evaluated at ``q = 1``.  ``c_upper`` is the peak of the curve.
    """
    an._check_k(k)
    v = an._check_money("v", v)
    c_lower = an.lower_cost_bound(k, v)
    c_limit = an.search_benefit(1.0, k, v)
    if abs(c_lower - c_limit) > 1e-9 * v:
        raise ArithmeticError(f"lower bound mismatch at k={k}: {c_lower} vs {c_limit}")
    grid = bracketing_grid()
    vals = an.search_benefit(grid, k)
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    q_peak, peak = golden_section_max(lambda x: an.search_benefit(x, k), lo, hi)
    if vals[i] > peak:
        q_peak, peak = float(grid[i]), float(vals[i])
    return CostBounds(c_lower=c_lower, c_upper=v * float(peak), q_at_peak=float(q_peak), c_lower_limit=c_limit)


def solve_search_equilibrium(params: MarketParams) -> EquilibriumReport:
    """All interior roots of ``search_benefit(q) = c`` in ``(0, 1)``.

    Sign changes on :func:`bracketing_grid` are refined by bisection.  Local
    extrema of the gap that touch ``c`` within tolerance are reported as
    ``Tangent`` roots.
    """
    k, v = params.k, params.v
    c = params.c / v
    bounds = cost_bounds(1.0, k)
    if c > bounds.c_upper:
        return EquilibriumReport(params, [], "no interior equilibrium", v * bounds.c_upper)

    def g(x):
        return an.search_benefit(x, k) - c

    grid = bracketing_grid()
    vals = an.search_benefit(grid, k) - c
    roots: list[float] = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(_bisect(g, float(grid[i]), float(grid[i + 1]), float(a)))

    # A tangency at the peak may show up as no crossing at all, or as a pair
    # of crossings hugging the numerical peak; both collapse to one root.
    tangent = abs(bounds.c_upper - c) <= TANGENT_VALUE_TOL
    if tangent:
        j = int(np.searchsorted(grid, bounds.q_at_peak))
        lo, hi = grid[max(j - 2, 0)], grid[min(j + 1, len(grid) - 1)]
        roots = [q for q in roots if not lo <= q <= hi]
    found = [_make_root(q, k, v) for q in roots]
    if tangent:
        root = _make_root(bounds.q_at_peak, k, v)
        found.append(EquilibriumRoot(**{**root.__dict__, "stability": Stability.TANGENT}))
    found.sort(key=lambda r: r.q)

    n_stable = sum(r.stability is Stability.STABLE for r in found)
    if n_stable > 1:
        raise ArithmeticError(f"found {n_stable} stable roots for {params}")
    if not found:
        status = "no interior equilibrium"
    elif n_stable:
        status = "ok"
    elif params.c < v * bounds.c_lower:
        status = "below lower cost bound: no stable interior equilibrium"
    else:
        status = "no stable interior equilibrium"
    return EquilibriumReport(params, found, status, v * bounds.c_upper)


def searcher_link_value(q: float, k: int, v: float = 1.0) -> float:
    """Value of ``k`` links to a consumer who searches one firm.

    ``(1 - (1 - q/2)^k) (E[p] - E[min])``; equals the link-cost cutoff.
    """
    an._check_k(k)
    e = an.eta(q, k)
    heard = -math.expm1(k * math.log1p(-0.5 * q))
    return heard * an.expected_min_gap(e, v)


def nonsearcher_link_value(q: float, k: int, v: float = 1.0) -> float:
    """Value of ``k`` links to a consumer who does not search."""
    an._check_k(k)
    e = an.eta(q, k)
    any_quote = -math.expm1(k * math.log1p(-q)) if q < 1 else 1.0
    both = float(an._compare(np.asarray(q), k))
    surplus = v - an.expected_price(e, v)
    return any_quote * surplus + both * an.expected_min_gap(e, v)


def link_decision(params: MarketParams, q: float) -> LinkDecision:
    """Whether searchers and non-searchers strictly prefer to form links."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    l_bar = searcher_link_value(q, params.k, params.v)
    other = nonsearcher_link_value(q, params.k, params.v)
    return LinkDecision(
        searcher_forms=l_bar > params.l,
        nonsearcher_forms=other > params.l,
        l_bar=l_bar,
        nonsearcher_value=other,
    )


@dataclass(frozen=True)
class ScanRow:
    k: int
    status: str
    q: float
    eta: float
    expected_price: float
    c_lower: float
    c_upper: float
    l_bar: float
    firm_profit: float
    implication_holds: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _scan_one(v: float, c: float, k: int) -> ScanRow:
    bounds = cost_bounds(v, k)
    report = solve_search_equilibrium(MarketParams(v=v, c=c, k=k))
    root = report.stable
    if root is None:
        nan = math.nan
        return ScanRow(k, report.status, nan, nan, nan, bounds.c_lower, bounds.c_upper, nan, nan, False)
    link = link_decision(MarketParams(v=v, c=c, k=k, l=0.0), root.q)
    # (3) => (4): the non-searcher always values links at least as much
    holds = link.nonsearcher_value > link.l_bar
    return ScanRow(
        k=k,
        status="ok",
        q=root.q,
        eta=root.eta,
        expected_price=root.expected_price,
        c_lower=bounds.c_lower,
        c_upper=bounds.c_upper,
        l_bar=link.l_bar,
        firm_profit=root.firm_profit,
        implication_holds=holds,
    )


def asymptotic_scan(v: float, c: float, k_schedule, workers: int | None = None) -> list[ScanRow]:
    """Stable equilibrium statistics along an increasing schedule of ``k``.

    Entries without a stable interior root keep their status and NaN
    statistics.  ``workers > 1`` evaluates entries in a process pool; rows come
    back in schedule order either way.
    """
    ks = [int(k) for k in k_schedule]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("k_schedule must be strictly increasing")
    for k in ks:
        an._check_k(k)
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_one, [v] * len(ks), [c] * len(ks), ks))
    return [_scan_one(v, c, k) for k in ks]


@dataclass(frozen=True)
class Trajectory:
    q: np.ndarray
    converged: bool

    @property
    def final(self) -> float:
        return float(self.q[-1])

    @property
    def status(self) -> str:
        return "converged" if self.converged else "not converged"


def best_response_dynamics(
    v: float,
    c: float,
    k: int,
    q0: float,
    steps: int = 100_000,
    gain: float = BR_GAIN,
    clamp: float = BR_CLAMP,
    tol: float = BR_TOL,
) -> Trajectory:
    """Adjust the searching share in the direction of the net search gain.

    ``q <- clip(q + gain * (benefit(q) - c) / v, clamp, 1 - clamp)`` until the
    step is below ``tol`` or ``steps`` updates have been made.
    """
    an._check_k(k)
    v = an._check_money("v", v)
    if not 0.0 < q0 < 1.0:
        raise DomainError(f"q0 must lie in (0, 1), got {q0!r}")
    if gain <= 0:
        raise DomainError("gain must be positive")
    path = [q0]
    q = q0
    for _ in range(steps):
        nxt = q + gain * (an.search_benefit(q, k, v) - c) / v
        nxt = min(max(nxt, clamp), 1.0 - clamp)
        path.append(nxt)
        if abs(nxt - q) < tol:
            return Trajectory(np.array(path), True)
        q = nxt
    return Trajectory(np.array(path), False)
