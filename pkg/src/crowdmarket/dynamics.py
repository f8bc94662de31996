"""Damped best-response iteration for both game variants.

Each virtual round, users re-best-respond to the current average sharing
benefit with probability 1 - lambda; at population scale this is the
convex-combination update  phi <- lambda * phi + (1 - lambda) * target(phi)
where target recomputes the benefit from fresh market shares.  A large
enough lambda makes the update a contraction; the threshold has a closed
form on the single-quality branches and is searched empirically elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BenefitVector, MarketParams, UnsupportedParameters
from .partition import MarketShares, PartitionGrid, QuadratureSpec
from .quality import avg_benefit
from . import unaware as _un

__all__ = [
    "IterationConfig",
    "TraceStep",
    "IterationTrace",
    "damping_threshold",
    "iterate_unaware",
    "iterate_quality",
]

_EPS_HAT = 1e-3                      # margin added on top of the contraction bound
_SEARCH_LADDER = (0.0, 0.5, 0.75, 0.875, 0.9375, 0.96875)


@dataclass(frozen=True)
class IterationConfig:
    """Knobs of the iteration loop.

    ``damping`` of None picks the closed-form threshold where it exists and
    falls back to a doubling search over {0, 1/2, 3/4, ...} otherwise.
    ``initial_phi`` wins over ``initial_shares``; with neither, iteration
    starts from a zero benefit vector.
    """

    damping: float | None = None
    tol: float = 1e-6
    max_iters: int = 100_000
    initial_phi: object = None            # scalar or sequence
    initial_shares: MarketShares | None = None
    phi_cap: float | None = None

    def __post_init__(self):
        if self.damping is not None and not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")
        if self.tol <= 0.0:
            raise ValueError("stop tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def resolved_phi_cap(self, params: MarketParams) -> float:
        return params.default_phi_cap() if self.phi_cap is None else self.phi_cap


@dataclass(frozen=True)
class TraceStep:
    t: int
    phi: tuple[float, ...]
    shares: MarketShares
    residual: float     # sum_k |phi_k(t) - phi_k(t-1)|; inf at t = 0


@dataclass(frozen=True)
class IterationTrace:
    steps: tuple[TraceStep, ...]
    converged: bool
    final: BenefitVector

    @property
    def iterations(self) -> int:
        return self.steps[-1].t

    def phi_history(self) -> np.ndarray:
        return np.asarray([s.phi for s in self.steps], dtype=float)


def damping_threshold(params: MarketParams, eps_hat: float = _EPS_HAT) -> float:
    """Smallest damping factor with a contraction guarantee, single-quality game.

    Built from the slope of the best-response map at the hard end of the
    bracket the equilibrium lives in: the (P1, P2) pair on the low branch and
    the (Q1, Q2) pair on the high branch.  Below the crossing (P1 < P2 resp.
    Q1 < Q2) the undamped update already contracts and the threshold is 0.
    """
    if params.n_qualities != 1:
        raise UnsupportedParameters("the damping threshold covers the single-grade game")
    regime = _un.classify_regime(params)
    if regime.regime is _un.Regime.NO_SHARING:
        return 0.0
    if params.eta >= 1.0 or not (params.unaware_normalized and params.w == 1.0):
        raise UnsupportedParameters(
            "no closed-form threshold here; search for a damping factor empirically")

    def from_pair(x1: float, x2: float) -> float:
        if x1 < x2:
            return 0.0
        return (x1 - x2) / (x1 + x2) + eps_hat

    def low_pair() -> tuple[float, float]:
        n0 = _un._N_low(0.0, params)
        p1 = _un._B_low(0.0, params) - _un._dB_low(params) * n0
        return p1, n0 ** 2

    def high_pair() -> tuple[float, float]:
        start = max(_un.phi_critical(params), 0.0)
        n = _un._N_high(start, params)
        num = _un._dB_high(start, params) * n - _un._B_high(start, params) * _un._dN_high(start, params)
        return -12.0 * num, 12.0 * n ** 2

    if regime.regime is _un.Regime.LOW_BENEFIT:
        return from_pair(*low_pair())
    if regime.regime is _un.Regime.HIGH_BENEFIT:
        return from_pair(*high_pair())
    # boundary case: guard both branches
    return max(from_pair(*low_pair()), from_pair(*high_pair()))


def _initial_phi(params: MarketParams, cfg: IterationConfig, mode: str, cap: float) -> np.ndarray:
    kq = params.n_qualities
    if cfg.initial_phi is not None:
        vec = BenefitVector.coerce(cfg.initial_phi, kq)
        return vec.as_array()
    if cfg.initial_shares is not None:
        sh = cfg.initial_shares
        if mode == "unaware":
            return np.asarray([_target_unaware(sh, cap)], dtype=float)
        return avg_benefit(sh, params, mode=mode, phi_cap=cap).as_array()
    return np.zeros(kq)


def _target_unaware(shares: MarketShares, cap: float) -> float:
    b = shares.requester_benefit[0]
    n = shares.sensor[0]
    if n > 0.0:
        return min(b / n, cap)
    return cap if shares.total_requester > 0.0 else 0.0


def _run_loop(grid: PartitionGrid, phi0: np.ndarray, target_fn, lam: float,
              tol: float, max_iters: int) -> IterationTrace:
    steps = []
    phi = np.asarray(phi0, dtype=float)
    prev = phi
    converged = False
    for t in range(max_iters + 1):
        shares = grid.shares_at(phi)
        res = math.inf if t == 0 else float(np.abs(phi - prev).sum())
        steps.append(TraceStep(t, tuple(phi.tolist()), shares, res))
        if t > 0 and res < tol:
            converged = True
            break
        if t == max_iters:
            break
        prev = phi
        target = np.asarray(target_fn(shares), dtype=float)
        phi = lam * phi + (1.0 - lam) * target
    return IterationTrace(tuple(steps), converged, BenefitVector(steps[-1].phi))


def _search_damping(run) -> IterationTrace:
    trace = None
    for lam in _SEARCH_LADDER:
        trace = run(lam)
        if trace.converged:
            return trace
    return trace


def iterate_unaware(params: MarketParams, cfg: IterationConfig = IterationConfig(),
                    quad: QuadratureSpec = QuadratureSpec()) -> IterationTrace:
    """Damped best-response iteration for the single-quality game.

    The update target is the quadrature ratio B(phi)/N(phi); when no sensors
    remain it is the benefit cap if requesters exist and zero otherwise.
    Non-convergence is reported on the trace, never raised.
    """
    if params.n_qualities != 1:
        raise ValueError("single-quality iteration needs a one-point grid")
    cap = cfg.resolved_phi_cap(params)
    grid = PartitionGrid(params, quad)
    phi0 = _initial_phi(params, cfg, "unaware", cap)

    def run(lam):
        return _run_loop(grid, phi0, lambda sh: [_target_unaware(sh, cap)],
                         lam, cfg.tol, cfg.max_iters)

    if cfg.damping is not None:
        return run(cfg.damping)
    try:
        return run(max(damping_threshold(params), 0.0))
    except UnsupportedParameters:
        return _search_damping(run)


def iterate_quality(params: MarketParams, cfg: IterationConfig = IterationConfig(),
                    mode: str = "matching", quad: QuadratureSpec = QuadratureSpec()) -> IterationTrace:
    """Damped best-response iteration for the quality-aware game.

    Per round: classify every user type against the current benefit vector,
    reaggregate per-grade benefits under the chosen sharing regime, damp.
    """
    if params.eta != 1.0:
        raise UnsupportedParameters("quality-aware iteration uses pure quality pricing (eta = 1)")
    if mode not in ("matching", "cross"):
        raise ValueError(f"mode must be 'matching' or 'cross', got {mode!r}")
    cap = cfg.resolved_phi_cap(params)
    grid = PartitionGrid(params, quad)
    phi0 = _initial_phi(params, cfg, mode, cap)

    def run(lam):
        return _run_loop(grid, phi0,
                         lambda sh: avg_benefit(sh, params, mode=mode, phi_cap=cap).as_array(),
                         lam, cfg.tol, cfg.max_iters)

    if cfg.damping is not None:
        return run(cfg.damping)
    return _search_damping(run)
