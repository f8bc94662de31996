"""Closed-form equilibrium machinery for the single-quality game.

With a single data grade and flat unit curves, the equilibrium sharing
benefit is the root of a residual  lam(phi) = phi * N(phi) - B(phi)  where
N is the sensor mass and B the integral of the reward paid by requesters.
The residual splits into two branches at a critical benefit phi0 where the
sensor/requester boundary line leaves the unit square through a different
edge; each branch has a polynomial closed form, verified here against the
quadrature measures rather than taken on faith.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import MarketParams, UnsupportedParameters, quality_price
from .partition import MarketShares, QuadratureSpec, PartitionGrid, measure_partition

__all__ = [
    "Regime",
    "RegimeClassification",
    "UnawareEquilibrium",
    "BracketError",
    "phi_critical",
    "lambda_high",
    "lambda_low",
    "lambda_residual",
    "classify_regime",
    "solve_unaware_equilibrium",
]


class BracketError(RuntimeError):
    """A root bracket violated its guaranteed sign conditions."""


class Regime(str, Enum):
    HIGH_BENEFIT = "high-benefit"     # root above phi0
    LOW_BENEFIT = "low-benefit"       # root below phi0
    BOUNDARY = "boundary"             # root exactly at phi0
    NO_SHARING = "no-sharing"         # requesting is never profitable


@dataclass(frozen=True)
class RegimeClassification:
    regime: Regime
    lambda_at_phi0: float


@dataclass(frozen=True)
class UnawareEquilibrium:
    phi_star: float
    shares: MarketShares
    regime: RegimeClassification
    residual: float
    iterations: int
    method: str  # "closed-form" or "quadrature"


def _requesters_viable(params: MarketParams) -> bool:
    # some v in [0, 1] must give a strictly positive requester payoff
    if params.eta == 0.0:
        return False
    return params.w - params.s - quality_price(1, params) / params.eta > 0.0


def _check_closed_form(params: MarketParams) -> None:
    if params.n_qualities != 1:
        raise UnsupportedParameters("closed forms cover the single-grade game only")
    if not params.unaware_normalized or params.w != 1.0:
        raise UnsupportedParameters("closed forms assume flat unit curves and w = 1")
    if params.eta >= 1.0:
        raise UnsupportedParameters("closed forms divide by 1 - eta; use the quadrature path")
    if not _requesters_viable(params):
        raise UnsupportedParameters("requesting is never profitable for these parameters")


def _sigma(params: MarketParams) -> float:
    """Requester participation threshold: v above it makes requesting profitable."""
    return params.s + quality_price(1, params) / params.eta


# Closed forms below are direct integrals of the reward and sensor-mass over
# the best-response regions.  The published high/low expressions carry a
# transcription slip in their price terms; these versions are re-derived and
# match the quadrature measures (see tests).

def _B_high(phi, params: MarketParams):
    eta, s, p = params.eta, params.s, quality_price(1, params)
    t = 1.0 - _sigma(params) - phi
    return t ** 3 / (6.0 * (1.0 - eta)) + (p / eta) * t ** 2 / (2.0 * (1.0 - eta))


def _N_high(phi, params: MarketParams):
    eta, s, p = params.eta, params.s, quality_price(1, params)
    return 1.0 - (1.0 - phi - eta * s - p) ** 2 / (2.0 * (1.0 - eta)) - eta * _sigma(params) ** 2 / 2.0


def _B_low(phi, params: MarketParams):
    eta, p = params.eta, quality_price(1, params)
    a = 1.0 - _sigma(params)
    return ((1.0 - eta) * a ** 2 * ((a - phi) / 2.0 - (1.0 - eta) * a / 3.0)
            + (p * a / eta) * ((a - phi) - (1.0 - eta) * a / 2.0))


def _N_low(phi, params: MarketParams):
    eta, s, p = params.eta, params.s, quality_price(1, params)
    return phi + eta * s + p + (1.0 - eta) / 2.0 - eta * _sigma(params) ** 2 / 2.0


def _dB_high(phi, params: MarketParams):
    eta, p = params.eta, quality_price(1, params)
    t = 1.0 - _sigma(params) - phi
    return -(t ** 2 / (2.0 * (1.0 - eta)) + (p / eta) * t / (1.0 - eta))


def _dN_high(phi, params: MarketParams):
    eta, s, p = params.eta, params.s, quality_price(1, params)
    return (1.0 - phi - eta * s - p) / (1.0 - eta)


def _dB_low(params: MarketParams):
    eta, p = params.eta, quality_price(1, params)
    a = 1.0 - _sigma(params)
    return -((1.0 - eta) * a ** 2 / 2.0 + p * a / eta)


def phi_critical(params: MarketParams) -> float:
    """Benefit level at which the sensor/requester boundary passes the corner (1, 1).

    May be negative, in which case the whole admissible range behaves like
    the high-benefit branch.
    """
    if params.n_qualities != 1:
        raise UnsupportedParameters("critical benefit is a single-grade quantity")
    p = quality_price(1, params)
    return 1.0 - params.eta * params.s - p - params.w * (1.0 - params.eta)


def lambda_high(phi, params: MarketParams):
    """Equilibrium residual on the high-benefit branch (phi >= phi0)."""
    _check_closed_form(params)
    phi = np.asarray(phi, dtype=float)
    out = phi * _N_high(phi, params) - _B_high(phi, params)
    return float(out) if out.ndim == 0 else out


def lambda_low(phi, params: MarketParams):
    """Equilibrium residual on the low-benefit branch (0 <= phi <= phi0)."""
    _check_closed_form(params)
    phi = np.asarray(phi, dtype=float)
    out = phi * _N_low(phi, params) - _B_low(phi, params)
    return float(out) if out.ndim == 0 else out


def lambda_residual(phi, params: MarketParams):
    """Piecewise residual: low branch below phi0, high branch above."""
    _check_closed_form(params)
    phi = np.asarray(phi, dtype=float)
    phi0 = phi_critical(params)
    out = np.where(phi >= phi0,
                   phi * _N_high(phi, params) - _B_high(phi, params),
                   phi * _N_low(phi, params) - _B_low(phi, params))
    return float(out) if out.ndim == 0 else out


def _lambda_quadrature(phi: float, grid: PartitionGrid) -> float:
    shares = grid.shares_at(phi)
    return phi * shares.sensor[0] - shares.requester_benefit[0]


def classify_regime(params: MarketParams, quad: QuadratureSpec = QuadratureSpec()) -> RegimeClassification:
    """Locate the equilibrium relative to phi0 from the sign of the residual there."""
    if params.n_qualities != 1:
        raise UnsupportedParameters("regime classification covers the single-grade game")
    if not _requesters_viable(params):
        return RegimeClassification(Regime.NO_SHARING, math.nan)
    phi0 = phi_critical(params)
    if params.eta < 1.0 and params.unaware_normalized and params.w == 1.0:
        lam0 = float(lambda_high(max(phi0, 0.0), params))
    else:
        lam0 = _lambda_quadrature(max(phi0, 0.0), PartitionGrid(params, quad))
    if lam0 == 0.0:
        return RegimeClassification(Regime.BOUNDARY, lam0)
    if lam0 < 0.0:
        return RegimeClassification(Regime.HIGH_BENEFIT, lam0)
    return RegimeClassification(Regime.LOW_BENEFIT, lam0)


def _bisect(fn, lo: float, hi: float, tol: float) -> tuple[float, int]:
    """Bisection on a sign change; assumes fn(lo) <= 0 <= fn(hi)."""
    f_lo = fn(lo)
    f_hi = fn(hi)
    if f_lo > 0.0 or f_hi < 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")
    iters = 0
    while hi - lo > tol and iters < 200:
        mid = 0.5 * (lo + hi)
        if fn(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        iters += 1
    return 0.5 * (lo + hi), iters


def solve_unaware_equilibrium(params: MarketParams, tol: float = 1e-10,
                              quad: QuadratureSpec = QuadratureSpec()) -> UnawareEquilibrium:
    """Equilibrium sharing benefit of the single-quality game.

    Uses bracketed bisection on the closed-form residual when it applies
    (flat unit curves, w = 1, eta < 1); otherwise falls back to bisection on
    the quadrature residual.  Bisection never leaves its bracket, which the
    branch lemmas guarantee contains exactly one root.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if params.n_qualities != 1:
        raise ValueError("the single-quality solver needs a one-point grid")
    regime = classify_regime(params, quad)
    grid = PartitionGrid(params, quad)

    if regime.regime is Regime.NO_SHARING:
        return UnawareEquilibrium(0.0, grid.shares_at(0.0), regime, 0.0, 0, "none")

    closed = params.eta < 1.0 and params.unaware_normalized and params.w == 1.0
    if closed:
        phi0 = phi_critical(params)
        hi_end = 1.0 - _sigma(params)
        if regime.regime is Regime.BOUNDARY:
            phi_star, iters = phi0, 0
        elif regime.regime is Regime.LOW_BENEFIT:
            phi_star, iters = _bisect(lambda x: lambda_low(x, params), 0.0, phi0, tol)
        else:
            phi_star, iters = _bisect(lambda x: lambda_high(x, params), max(phi0, 0.0), hi_end, tol)
        residual = abs(float(lambda_residual(phi_star, params)))
        method = "closed-form"
    else:
        shares0 = grid.shares_at(0.0)
        if shares0.requester_benefit[0] == 0.0:
            # requesters pay nothing (or do not exist): phi = 0 is the fixed point
            return UnawareEquilibrium(0.0, shares0, regime, 0.0, 0, "quadrature")
        cap = params.default_phi_cap()
        phi_star, iters = _bisect(lambda x: _lambda_quadrature(x, grid), 0.0, cap, max(tol, 1e-12))
        residual = abs(_lambda_quadrature(phi_star, grid))
        method = "quadrature"

    return UnawareEquilibrium(float(phi_star), grid.shares_at(phi_star), regime,
                              residual, iters, method)
