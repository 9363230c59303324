"""Equilibria of a two-firm costly-search market with word-of-mouth sharing.

Modules
-------
analytics
    Closed forms: information shares, ``eta``, the price distribution and its
    moments, search benefits, firm profit.
equilibrium
    Roots of the indifference condition, stability, cost bounds, link
    thresholds, large-``k`` scans and best-response dynamics.
simulator
    Agent-based Monte Carlo market used as an independent oracle.
cli
    ``wom-search`` command line.
"""
from .analytics import (
    DomainError,
    InformationShares,
    MarketParams,
    PriceDistribution,
    SearchStrategy,
    eta,
    expected_min_gap,
    expected_price,
    firm_profit,
    information_shares,
    price_cdf,
    price_quantile,
    search_benefit,
    second_search_benefit,
)
from .equilibrium import (
    CostBounds,
    EquilibriumRoot,
    LinkDecision,
    Stability,
    asymptotic_scan,
    best_response_dynamics,
    cost_bounds,
    link_decision,
    solve_search_equilibrium,
)
from .kernels import BACKEND
from .simulator import SimConfig, SimResult, estimate_search_benefit, simulate_market, verify_equal_profit

__version__ = "0.1.0"
