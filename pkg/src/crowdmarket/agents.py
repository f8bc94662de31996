"""Finite-population stochastic simulation of the data-sharing market.

A sampled population of N users plays the game in rounds: each round every
agent independently re-best-responds with probability 1 - lambda to the
current empirical sharing benefit, computed as actual payments divided by
actual sensor counts.  With identical transmission costs the random
sensor-requester matching never needs to be simulated pair by pair: only
totals enter anyone's payoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import MarketParams
from .partition import MarketShares, best_response_actions

__all__ = [
    "Population",
    "AgentSimResult",
    "sample_population",
    "run_finite_simulation",
]


@dataclass(frozen=True, eq=False)
class Population:
    """N sampled user types, reproducible from the seed."""

    v: np.ndarray
    c: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return self.v.shape[0]


@dataclass(frozen=True, eq=False)
class AgentSimResult:
    shares: MarketShares        # empirical fractions; requester_benefit = payments / N
    phi: tuple[float, ...]      # empirical per-grade benefit at the last round
    rounds: int
    converged: bool
    seed: int
    welfare: float              # mean realized surplus per user
    max_welfare: float          # mean best-achievable surplus per user
    actions: np.ndarray         # final per-agent action ids


def sample_population(n: int, seed: int) -> Population:
    if n < 1:
        raise ValueError("population size must be at least 1")
    rng = np.random.default_rng(seed)
    draws = rng.random((n, 2))
    return Population(draws[:, 0], draws[:, 1], seed)


def _user_surfaces(pop: Population, params: MarketParams):
    f = np.asarray(params.values_f)
    g = np.asarray(params.costs_g)
    u = params.w * (params.alpha_v + np.multiply.outer(f, pop.v))   # (K, N)
    b = params.alpha_c + np.multiply.outer(g, pop.c)
    return u, b


def _empirical_phi(actions: np.ndarray, payments: np.ndarray, params: MarketParams,
                   mode: str, cap: float) -> np.ndarray:
    kq = params.n_qualities
    counts = np.bincount(actions, minlength=2 * kq + 1)
    n_sensor = counts[kq - np.arange(1, kq + 1)]        # indexed by grade-1
    paid = np.array([payments[actions == 2 * kq - k].sum() for k in range(1, kq + 1)])
    if mode in ("unaware", "matching"):
        phi = np.zeros(kq)
        for k in range(kq):
            if n_sensor[k] > 0:
                phi[k] = min(paid[k] / n_sensor[k], cap)
            else:
                phi[k] = cap if counts[2 * kq - (k + 1)] > 0 else 0.0
    else:  # cross: grade-i payments split across the pool of sensors with grade >= i
        phi = np.zeros(kq)
        acc = 0.0
        for i in range(kq):
            pool = n_sensor[i:].sum()
            if pool > 0:
                acc += paid[i] / pool
            elif counts[2 * kq - (i + 1)] > 0:
                acc = cap
            acc = min(acc, cap)
            phi[i] = acc
    return phi


def _empirical_shares(actions: np.ndarray, payments: np.ndarray, params: MarketParams) -> MarketShares:
    kq = params.n_qualities
    n = actions.shape[0]
    counts = np.bincount(actions, minlength=2 * kq + 1)
    sensor = tuple(float(counts[kq - k]) / n for k in range(1, kq + 1))
    requester = tuple(float(counts[2 * kq - k]) / n for k in range(1, kq + 1))
    alien = float(counts[2 * kq]) / n
    benefit = tuple(float(payments[actions == 2 * kq - k].sum()) / n for k in range(1, kq + 1))
    return MarketShares(sensor, requester, alien, benefit)


def run_finite_simulation(pop: Population, params: MarketParams, cfg,
                          mode: str = "unaware", stable_rounds: int = 5) -> AgentSimResult:
    """Round-based simulation until the empirical benefit settles.

    Stops once the benefit residual stays below the tolerance for
    ``stable_rounds`` consecutive rounds; non-convergence is flagged on the
    result, which is returned either way.
    """
    if mode not in ("unaware", "matching", "cross"):
        raise ValueError(f"mode must be unaware, matching or cross, got {mode!r}")
    kq = params.n_qualities
    if mode == "unaware" and kq != 1:
        raise ValueError("unaware mode requires a single-grade quality grid")
    cap = cfg.resolved_phi_cap(params)
    lam = 0.5 if cfg.damping is None else cfg.damping
    rng = np.random.default_rng(pop.seed)

    u, b = _user_surfaces(pop, params)
    prices = np.asarray(params.prices)
    beta = (1.0 - params.eta) * (u - params.s) + prices[:, None]    # (K, N) reward paid per grade

    phi0 = np.zeros(kq) if cfg.initial_phi is None else \
        np.atleast_1d(np.asarray(cfg.initial_phi, dtype=float))
    actions = best_response_actions(pop.v, pop.c, phi0, params)

    def payments_of(acts):
        pay = np.zeros(pop.size)
        for k in range(1, kq + 1):
            mask = acts == 2 * kq - k
            pay[mask] = beta[k - 1, mask]
        return pay

    phi = _empirical_phi(actions, payments_of(actions), params, mode, cap)
    streak = 0
    rounds = 0
    converged = False
    for t in range(1, cfg.max_iters + 1):
        rounds = t
        update = rng.random(pop.size) < (1.0 - lam)
        if update.any():
            fresh = best_response_actions(pop.v, pop.c, phi, params)
            actions = np.where(update, fresh, actions)
        new_phi = _empirical_phi(actions, payments_of(actions), params, mode, cap)
        residual = float(np.abs(new_phi - phi).sum())
        phi = new_phi
        streak = streak + 1 if residual < cfg.tol else 0
        if streak >= stable_rounds:
            converged = True
            break

    payments = payments_of(actions)
    shares = _empirical_shares(actions, payments, params)
    surplus = np.zeros(pop.size)
    for k in range(1, kq + 1):
        mask = actions == kq - k
        surplus[mask] = (u[k - 1] - b[k - 1])[mask]
        mask = actions == 2 * kq - k
        surplus[mask] = (u[k - 1] - params.s)[mask]
    best = np.maximum(np.max(u - b, axis=0), np.max(u - params.s, axis=0))
    np.maximum(best, 0.0, out=best)
    return AgentSimResult(shares, tuple(phi.tolist()), rounds, converged, pop.seed,
                          float(surplus.mean()), float(best.mean()), actions)
