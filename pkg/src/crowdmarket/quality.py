"""Sharing-benefit aggregation and fixed-point residuals for the quality-aware game.

Two sharing regimes: ``matching`` lets a requester buy only from sensors of
her own grade; ``cross`` lets her buy from any sensor of the same or higher
grade, who down-converts the data and collects the lower-grade price.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BenefitVector, MarketParams, UnsupportedParameters
from .partition import MarketShares, QuadratureSpec, measure_partition

__all__ = [
    "QualityResidual",
    "avg_benefit",
    "residual",
    "solve_quality_equilibrium",
]


@dataclass(frozen=True)
class QualityResidual:
    """Per-grade deviation from the fixed-point condition; zero at equilibrium."""

    lam: tuple[float, ...]
    mode: str

    @property
    def max_abs(self) -> float:
        return max(abs(x) for x in self.lam)


def _cap_ratio(num: float, den: float, cap: float) -> float:
    if den > 0.0:
        return num / den
    return cap if num > 0.0 else 0.0


def avg_benefit(shares: MarketShares, params: MarketParams, mode: str = "matching",
                phi_cap: float | None = None) -> BenefitVector:
    """Average sharing benefit per sensor implied by the given market shares.

    Matching: grade-k sensors split the payments of grade-k requesters.
    Cross: grade-i requesters are served by the pool of sensors with grade
    >= i, so a grade-k sensor collects the cumulative sum over i <= k.
    Empty sensor pools map to the benefit cap when demand exists, else zero.
    """
    cap = params.default_phi_cap() if phi_cap is None else phi_cap
    kq = params.n_qualities
    prices = params.prices
    if mode == "matching":
        phi = [_cap_ratio(prices[k] * shares.requester[k], shares.sensor[k], cap)
               for k in range(kq)]
    elif mode == "cross":
        phi = []
        acc = 0.0
        for i in range(kq):
            pool = sum(shares.sensor[i:])
            acc += _cap_ratio(prices[i] * shares.requester[i], pool, cap)
            phi.append(acc)
    else:
        raise ValueError(f"mode must be 'matching' or 'cross', got {mode!r}")
    return BenefitVector(tuple(min(x, cap) for x in phi))


def residual(phi, params: MarketParams, quad: QuadratureSpec = QuadratureSpec(),
             mode: str = "matching") -> QualityResidual:
    """Fixed-point residual of the benefit vector under fresh best responses.

    Matching uses the mass-weighted form phi_k * |S_k| - price_k * |R_k|;
    cross uses the gap between phi and its cumulative reaggregation.
    """
    vec = BenefitVector.coerce(phi, params.n_qualities)
    shares = measure_partition(vec, params, quad, mode=mode)
    if mode == "matching":
        lam = tuple(vec[k] * shares.sensor[k] - params.prices[k] * shares.requester[k]
                    for k in range(params.n_qualities))
    else:
        target = avg_benefit(shares, params, mode=mode)
        lam = tuple(vec[k] - target[k] for k in range(params.n_qualities))
    return QualityResidual(lam, mode)


def solve_quality_equilibrium(params: MarketParams, cfg=None, mode: str = "matching",
                              quad: QuadratureSpec = QuadratureSpec()) -> tuple[BenefitVector, MarketShares]:
    """Equilibrium benefit vector and shares via the damped best-response loop.

    Raises on non-convergence and re-checks the fixed-point gap of the limit
    before returning it.
    """
    from .dynamics import IterationConfig, iterate_quality

    if params.eta != 1.0:
        raise UnsupportedParameters("the quality-aware game uses pure quality pricing (eta = 1)")
    cfg = cfg or IterationConfig()
    trace = iterate_quality(params, cfg, mode=mode, quad=quad)
    if not trace.converged:
        raise RuntimeError(f"best-response iteration did not converge within {cfg.max_iters} steps")
    shares = measure_partition(trace.final, params, quad, mode=mode)
    target = avg_benefit(shares, params, mode=mode, phi_cap=cfg.resolved_phi_cap(params))
    gap = max(abs(a - b) for a, b in zip(trace.final.phi, target.phi))
    if gap > 10.0 * cfg.tol:
        raise RuntimeError(f"converged point violates the fixed-point condition (gap {gap:.3e})")
    return trace.final, shares
