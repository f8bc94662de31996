"""Social welfare of market partitions and centralized optimum benchmarks.

Welfare counts only real surplus: a sensor contributes her data value net of
sensing cost, a requester her data value net of the transmission cost.
Payments between users are transfers and cancel, so they never enter the
integrand.  The centralized benchmark assigns every user type her best of
{stay out, sense some grade, request some grade}, which upper-bounds any
equilibrium outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import MarketParams
from .partition import PartitionGrid, QuadratureSpec

__all__ = [
    "WelfareReport",
    "social_welfare",
    "max_welfare_unaware",
    "max_welfare_quality",
    "welfare_report",
]


@dataclass(frozen=True)
class WelfareReport:
    equilibrium_welfare: float
    max_welfare: float
    efficiency_ratio: float


def social_welfare(phi, params: MarketParams, quad: QuadratureSpec = QuadratureSpec(),
                   mode: str | None = None) -> float:
    """Welfare of the best-response partition under the given sharing benefit."""
    return PartitionGrid(params, quad).welfare_at(phi)


def max_welfare_quality(params: MarketParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Centralized optimum: each user type takes max(0, best sensing, best requesting)."""
    return PartitionGrid(params, quad).optimum_welfare()


def max_welfare_unaware(params: MarketParams, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Single-grade centralized optimum: sense where cheap, request where dear."""
    if params.n_qualities != 1:
        raise ValueError("the single-quality benchmark needs a one-point grid")
    return max_welfare_quality(params, quad)


def welfare_report(phi, params: MarketParams, quad: QuadratureSpec = QuadratureSpec(),
                   mode: str | None = None) -> WelfareReport:
    eq = social_welfare(phi, params, quad, mode)
    mx = max_welfare_quality(params, quad)
    ratio = eq / mx if mx > 0.0 else float("nan")
    return WelfareReport(eq, mx, ratio)
