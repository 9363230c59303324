"""Agent-based Monte Carlo market used as an independent check on the formulas.

One replication: two firms post prices, every consumer searches one random
firm with probability ``q``, samples ``k`` distinct friends (directed,
inbound) and pools their quotes with her own.  Consumers holding a quote buy
at the lowest one they know.

Each replication draws from its own stream spawned off ``master_seed``, so
results are bit-identical whatever the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import analytics as an
from . import kernels
from .analytics import DomainError

__all__ = [
    "SimConfig",
    "Estimate",
    "SimResult",
    "simulate_market",
    "estimate_search_benefit",
    "verify_equal_profit",
    "EqualProfitRow",
]

# per-replication statistics, in column order of the replication matrix
_COLUMNS = (
    "share_none",
    "share_captive",
    "share_compare",
    "profit_a",
    "profit_b",
    "search_benefit",
    "second_search_benefit",
    "mean_transaction_price",
)


@dataclass(frozen=True)
class SimConfig:
    n_consumers: int = 100_000
    k: int = 1
    q: float = 0.5
    v: float = 1.0
    master_seed: int = 0
    replications: int = 64
    eta_override: float | None = None
    deviation_price: float | None = None

    def __post_init__(self):
        if not isinstance(self.n_consumers, (int, np.integer)) or self.n_consumers < 1000:
            raise DomainError(f"n_consumers must be an integer >= 1000, got {self.n_consumers!r}")
        an._check_k(self.k)
        if self.k >= self.n_consumers:
            raise DomainError("k must be smaller than n_consumers")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0, 1], got {self.q!r}")
        an._check_money("v", self.v)
        if not isinstance(self.master_seed, (int, np.integer)) or not 0 <= self.master_seed < 2**64:
            raise DomainError("master_seed must be an unsigned 64-bit integer")
        if not isinstance(self.replications, (int, np.integer)) or self.replications < 1:
            raise DomainError("replications must be a positive integer")
        if self.eta_override is not None:
            an._check_eta(self.eta_override)
        if self.deviation_price is not None:
            dist = self.price_distribution()
            if dist is None or not dist.p_low - 1e-12 * self.v <= self.deviation_price <= self.v:
                raise DomainError(f"deviation_price {self.deviation_price!r} is outside the price support")

    def price_distribution(self) -> an.PriceDistribution | None:
        """Distribution firms draw from; ``None`` when nobody searches."""
        if self.eta_override is not None:
            return an.PriceDistribution(self.eta_override, self.v)
        if self.q == 0.0:
            return None
        return an.price_distribution(self.q, self.k, self.v)


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float

    def within(self, target: float, n_se: float = 3.0) -> bool:
        if self.se == 0.0 or math.isnan(self.se):
            return abs(self.mean - target) <= 1e-12 * max(1.0, abs(target))
        return abs(self.mean - target) <= n_se * self.se

    def as_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se}


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    share_none: Estimate
    share_captive: Estimate
    share_compare: Estimate
    firm_profits: tuple[Estimate, Estimate]
    search_benefit_estimate: Estimate
    second_search_benefit_estimate: Estimate
    mean_transaction_price: Estimate
    per_replication: np.ndarray
    backend: str = kernels.BACKEND

    def as_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "backend": self.backend,
            "share_none": self.share_none.as_dict(),
            "share_captive": self.share_captive.as_dict(),
            "share_compare": self.share_compare.as_dict(),
            "firm_profits": [e.as_dict() for e in self.firm_profits],
            "search_benefit_estimate": self.search_benefit_estimate.as_dict(),
            "second_search_benefit_estimate": self.second_search_benefit_estimate.as_dict(),
            "mean_transaction_price": self.mean_transaction_price.as_dict(),
        }


def _lowest_price(mask: np.ndarray, prices: np.ndarray) -> np.ndarray:
    """Lowest known price per consumer; ``inf`` for an empty mask."""
    table = np.array([np.inf, prices[0], prices[1], prices.min()])
    return table[mask]


def _surplus(mask: np.ndarray, v: float, prices: np.ndarray) -> np.ndarray:
    lowest = _lowest_price(mask, prices)
    return np.where(mask > 0, v - lowest, 0.0)


def _replicate(config: SimConfig, dist, seed: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    n, k, v = config.n_consumers, config.k, config.v
    # draw order is fixed: prices, search, firm choice, friends, tie coins
    u_price = rng.random(2)
    searches = rng.random(n) < config.q
    firm = rng.integers(0, 2, size=n, dtype=np.int8)
    u_friends = rng.random((n, k))
    coin = rng.random(n)

    if dist is None:
        prices = np.array([v, v])
    else:
        prices = np.asarray(an.price_quantile(u_price, dist), dtype=float)
    if config.deviation_price is not None:
        prices[0] = config.deviation_price

    searched = np.where(searches, firm, np.int8(-1)).astype(np.int8)
    friends = kernels.sample_friends(u_friends)
    heard = kernels.friend_quote_mask(searched, friends)
    own = np.where(searches, np.left_shift(1, firm), 0).astype(np.uint8)
    mask = heard | own

    none = mask == 0
    compare = mask == 3
    captive = ~none & ~compare
    if prices[0] < prices[1]:
        cmp_buys_a = np.ones(n, dtype=bool)
    elif prices[0] > prices[1]:
        cmp_buys_a = np.zeros(n, dtype=bool)
    else:
        cmp_buys_a = coin < 0.5
    buys_a = (mask == 1) | (compare & cmp_buys_a)
    buys_b = (mask == 2) | (compare & ~cmp_buys_a)
    n_a = np.count_nonzero(buys_a)
    n_b = np.count_nonzero(buys_b)
    buyers = n_a + n_b
    mean_paid = (prices[0] * n_a + prices[1] * n_b) / buyers if buyers else math.nan

    # every consumer doubles as the tagged consumer: her own search never
    # feeds back into what her friends tell her
    own_pick = np.left_shift(1, firm).astype(np.uint8)
    base = _surplus(heard, v, prices)
    one = _surplus(heard | own_pick, v, prices)
    two = _surplus(heard | np.uint8(3), v, prices)

    return np.array(
        [
            np.count_nonzero(none) / n,
            np.count_nonzero(captive) / n,
            np.count_nonzero(compare) / n,
            prices[0] * n_a / n,
            prices[1] * n_b / n,
            float(np.mean(one - base)),
            float(np.mean(two - one)),
            mean_paid,
        ]
    )


def _estimate(col: np.ndarray) -> Estimate:
    col = col[~np.isnan(col)]
    if col.size == 0:
        return Estimate(math.nan, math.nan)
    mean = float(np.mean(col))
    se = float(np.std(col, ddof=1) / math.sqrt(col.size)) if col.size > 1 else math.nan
    return Estimate(mean, se)


def simulate_market(config: SimConfig, workers: int = 1) -> SimResult:
    """Run ``config.replications`` independent markets and aggregate them.

    Standard errors are taken across replications.  ``workers`` only
    changes wall time, never the numbers.
    """
    dist = config.price_distribution()
    seeds = np.random.SeedSequence(config.master_seed).spawn(config.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda s: _replicate(config, dist, s), seeds))
    else:
        rows = [_replicate(config, dist, s) for s in seeds]
    table = np.vstack(rows)
    cols = {name: _estimate(table[:, i]) for i, name in enumerate(_COLUMNS)}
    return SimResult(
        config=config,
        share_none=cols["share_none"],
        share_captive=cols["share_captive"],
        share_compare=cols["share_compare"],
        firm_profits=(cols["profit_a"], cols["profit_b"]),
        search_benefit_estimate=cols["search_benefit"],
        second_search_benefit_estimate=cols["second_search_benefit"],
        mean_transaction_price=cols["mean_transaction_price"],
        per_replication=table,
    )


def estimate_search_benefit(config: SimConfig, second: bool = False, workers: int = 1) -> Estimate:
    """Simulated gain from one search (or from a second one, ``second=True``).

    Paired comparison on common random numbers: each consumer's surplus is
    evaluated with and without her own quote against the same friends and
    prices.
    """
    if not 0.0 < config.q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {config.q!r}")
    res = simulate_market(config, workers=workers)
    return res.second_search_benefit_estimate if second else res.search_benefit_estimate


@dataclass(frozen=True)
class EqualProfitRow:
    price: float
    profit: float
    se: float
    analytic: float

    @property
    def within_3se(self) -> bool:
        return Estimate(self.profit, self.se).within(self.analytic)


def verify_equal_profit(config: SimConfig, price_grid, workers: int = 1) -> list[EqualProfitRow]:
    """Profit of firm A when it posts each grid price against a rival drawing from F."""
    dist = config.price_distribution()
    if dist is None:
        raise DomainError("equal-profit check needs q > 0 or an eta_override")
    shares = an.information_shares(config.q, config.k)
    rows = []
    for p in price_grid:
        p = float(p)
        if not dist.p_low - 1e-12 * dist.v <= p <= dist.v:
            raise DomainError(f"grid price {p!r} is outside [{dist.p_low}, {dist.v}]")
        res = simulate_market(replace(config, deviation_price=p), workers=workers)
        profit = res.firm_profits[0]
        analytic = p * (0.5 * shares.captive_share + shares.compare_share * (1.0 - an.price_cdf(p, dist)))
        rows.append(EqualProfitRow(p, profit.mean, profit.se, analytic))
    return rows
