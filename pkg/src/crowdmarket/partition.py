"""Best responses and region measures over the unit square of user types.

Every user type (v, c) picks the action with the highest payoff.  Ties are
broken deterministically: sensor beats requester beats alien, and within a
role the higher quality wins.

Region measures use a midpoint grid along the value axis and exact interval
lengths along the cost axis.  Within a row of fixed v, sensor payoffs are
decreasing lines in c while requester and alien payoffs are constants, so
each row splits into sensor segments followed by a single best non-sensor
action; the split points are computed in closed form.  This keeps the
measures continuous in the benefit vector, which the fixed-point iterations
need: a cell-counting rule would jump by whole grid columns whenever a
vertical boundary crosses a midpoint, and the iteration would stall on
those jumps instead of converging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ActionChoice, BenefitVector, MarketParams, Role, UserType

__all__ = [
    "QuadratureSpec",
    "MarketShares",
    "PartitionGrid",
    "action_table",
    "best_response_actions",
    "best_response_unaware",
    "best_response_quality",
    "measure_partition",
]

_MODES = ("unaware", "matching", "cross")


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution of the value-axis grid (midpoint rule per axis)."""

    resolution: int = 800
    rule: str = "midpoint"

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("quadrature resolution must be at least 2")
        if self.rule != "midpoint":
            raise ValueError(f"unsupported quadrature rule {self.rule!r}")

    def midpoints(self) -> np.ndarray:
        m = self.resolution
        return (np.arange(m) + 0.5) / m


@dataclass(frozen=True)
class MarketShares:
    """Mass of each (role, grade) region plus the paid-reward integral per grade.

    ``requester_benefit[k]`` integrates the reward paid by grade-k requesters
    over their region; dividing it by the matching sensor mass gives the
    average per-sensor sharing benefit.
    """

    sensor: tuple[float, ...]
    requester: tuple[float, ...]
    alien: float
    requester_benefit: tuple[float, ...]

    @property
    def total_sensor(self) -> float:
        return sum(self.sensor)

    @property
    def total_requester(self) -> float:
        return sum(self.requester)

    @property
    def total(self) -> float:
        return self.total_sensor + self.total_requester + self.alien


def action_table(params: MarketParams) -> list[ActionChoice]:
    """Actions in tie-break priority order: sensors high..low, requesters high..low, alien."""
    k = params.n_qualities
    choices = [ActionChoice(Role.SENSOR, k - a) for a in range(k)]
    choices += [ActionChoice(Role.REQUESTER, 2 * k - a) for a in range(k, 2 * k)]
    choices.append(ActionChoice(Role.ALIEN))
    return choices


class PartitionGrid:
    """Row-wise exact partition measures on a fixed value-axis grid.

    Requester and alien payoffs never depend on the sharing benefit, so the
    best non-sensor action per row is fixed at construction; only the K
    sensor lines move with phi.
    """

    def __init__(self, params: MarketParams, quad: QuadratureSpec = QuadratureSpec()):
        self.params = params
        self.quad = quad
        v = quad.midpoints()
        self.v = v
        kq = params.n_qualities
        f = np.asarray(params.values_f)
        self._g = np.asarray(params.costs_g)
        prices = np.asarray(params.prices)
        self._u = params.w * (params.alpha_v + v[None, :] * f[:, None])       # (K, M)
        self._beta = (1.0 - params.eta) * (self._u - params.s) + prices[:, None]
        # best non-sensor action per row: requesters in descending grade, then alien
        rq = params.eta * (self._u - params.s) - prices[:, None]
        rest = np.vstack([rq[::-1], np.zeros_like(v)[None, :]])               # (K+1, M)
        self._rest_arg = np.argmax(rest, axis=0)
        self._rest_best = np.take_along_axis(rest, self._rest_arg[None, :], axis=0)[0]
        self._n_actions = 2 * kq + 1
        # pairwise slope gaps for the sensor-line envelope (grade pairs k > j)
        pairs = [(k, j) for k in range(kq) for j in range(k)]
        self._pairs = pairs
        self._pair_dg = np.asarray([self._g[k] - self._g[j] for k, j in pairs])

    def _row_segments(self, phi: np.ndarray):
        """Per-row split of the cost axis.

        Returns (bounds, grade, c_star): ``bounds`` has shape (S+1, M) with
        ascending cut points of the sensor span [0, c_star]; ``grade`` holds
        the winning 0-based sensor grade per segment; beyond c_star the best
        non-sensor action takes the rest of the row.
        """
        params = self.params
        a = self._u + phi[:, None]                                            # (K, M)
        c_star_k = (a - self._rest_best[None, :] - params.alpha_c) / self._g[:, None]
        c_star = np.clip(np.max(c_star_k, axis=0), 0.0, 1.0)
        if self._pairs:
            cross = np.asarray([(a[k] - a[j]) for k, j in self._pairs]) / self._pair_dg[:, None]
            cuts = np.clip(cross, 0.0, c_star[None, :])
            bounds = np.sort(np.vstack([np.zeros_like(c_star)[None, :], cuts,
                                        c_star[None, :]]), axis=0)
            mids = 0.5 * (bounds[:-1] + bounds[1:])                           # (S, M)
            # winner per segment midpoint; descending grade order wins ties
            line_vals = a[::-1, None, :] - self._g[::-1, None, None] * mids[None, :, :]
            grade = params.n_qualities - 1 - np.argmax(line_vals, axis=0)
        else:
            bounds = np.vstack([np.zeros_like(c_star)[None, :], c_star[None, :]])
            grade = np.zeros((1, len(c_star)), dtype=int)
        return bounds, grade, c_star

    def shares_at(self, phi) -> MarketShares:
        """Region masses and paid-reward integrals under the given benefit."""
        params = self.params
        kq = params.n_qualities
        m = len(self.v)
        vec = BenefitVector.coerce(phi, kq).as_array()
        bounds, grade, c_star = self._row_segments(vec)
        seg_len = bounds[1:] - bounds[:-1]                                    # (S, M)
        sensor_len = np.zeros((kq, m))
        for k in range(kq):
            sensor_len[k] = np.where(grade == k, seg_len, 0.0).sum(axis=0)
        rest_len = 1.0 - c_star
        sensor = tuple(float(sensor_len[k].mean()) for k in range(kq))
        requester = []
        benefit = []
        for k in range(kq):
            mask = self._rest_arg == (kq - 1 - k)       # descending order in the rest stack
            req_len = np.where(mask, rest_len, 0.0)
            requester.append(float(req_len.mean()))
            benefit.append(float((self._beta[k] * req_len).mean()))
        alien = float(np.where(self._rest_arg == kq, rest_len, 0.0).mean())
        return MarketShares(sensor, tuple(requester), alien, tuple(benefit))

    def welfare_at(self, phi) -> float:
        """Social welfare of the best-response partition (transfers excluded)."""
        params = self.params
        kq = params.n_qualities
        vec = BenefitVector.coerce(phi, kq).as_array()
        bounds, grade, c_star = self._row_segments(vec)
        lo, hi = bounds[:-1], bounds[1:]
        total = 0.0
        for k in range(kq):
            mask = grade == k
            # integral of u_k - alpha_c - g_k * c over the grade's segments
            lin = (self._u[k][None, :] - params.alpha_c) * (hi - lo)
            quad_term = 0.5 * self._g[k] * (hi ** 2 - lo ** 2)
            total += float(np.where(mask, lin - quad_term, 0.0).sum())
        rest_len = 1.0 - c_star
        for k in range(kq):
            mask = self._rest_arg == (kq - 1 - k)
            total += float(((self._u[k] - params.s) * rest_len * mask).sum())
        return total / len(self.v)

    def optimum_welfare(self) -> float:
        """Centralized benchmark: every row integrates its best surplus.

        Per cell the planner takes max(0, best sensing surplus, best
        requesting surplus); the row structure is the same lines-plus-
        constants envelope as the game partition, with transfers removed.
        """
        params = self.params
        kq = params.n_qualities
        m = len(self.v)
        req_best = np.max(self._u - params.s, axis=0)
        const = np.maximum(req_best, 0.0)
        a = self._u                                                            # no benefit term
        c_star_k = (a - const[None, :] - params.alpha_c) / self._g[:, None]
        c_star = np.clip(np.max(c_star_k, axis=0), 0.0, 1.0)
        if self._pairs:
            cross = np.asarray([(a[k] - a[j]) for k, j in self._pairs]) / self._pair_dg[:, None]
            cuts = np.clip(cross, 0.0, c_star[None, :])
            bounds = np.sort(np.vstack([np.zeros((1, m)), cuts, c_star[None, :]]), axis=0)
        else:
            bounds = np.vstack([np.zeros((1, m)), c_star[None, :]])
        lo, hi = bounds[:-1], bounds[1:]
        mids = 0.5 * (lo + hi)
        line_vals = a[::-1, None, :] - self._g[::-1, None, None] * mids[None, :, :]
        grade = kq - 1 - np.argmax(line_vals, axis=0)
        total = 0.0
        for k in range(kq):
            mask = grade == k
            lin = (self._u[k][None, :] - params.alpha_c) * (hi - lo)
            quad_term = 0.5 * self._g[k] * (hi ** 2 - lo ** 2)
            total += float(np.where(mask, lin - quad_term, 0.0).sum())
        total += float((const * (1.0 - c_star)).sum())
        return total / m

    def classify(self, phi) -> np.ndarray:
        """Cell-level action map (M, M) indexed [v, c]; midpoint argmax per cell."""
        c = self.quad.midpoints()
        vv, cc = np.meshgrid(self.v, c, indexing="ij")
        return best_response_actions(vv, cc, phi, self.params)

    def shares_of_cells(self, actions: np.ndarray) -> MarketShares:
        """Cell-counting shares for an explicit action map; testing crosscheck."""
        params = self.params
        kq = params.n_qualities
        m2 = actions.size
        counts = np.bincount(actions.ravel(), minlength=self._n_actions)
        sensor = tuple(float(counts[kq - k]) / m2 for k in range(1, kq + 1))
        requester = tuple(float(counts[2 * kq - k]) / m2 for k in range(1, kq + 1))
        alien = float(counts[2 * kq]) / m2
        benefit = []
        for k in range(1, kq + 1):
            rows = (actions == 2 * kq - k).sum(axis=1)
            benefit.append(float(self._beta[k - 1] @ rows) / m2)
        return MarketShares(sensor, requester, alien, tuple(benefit))


def best_response_actions(v, c, phi, params: MarketParams) -> np.ndarray:
    """Vectorized best-response action ids for arbitrary arrays of user types.

    Action ids follow :func:`action_table` order.  Used by the finite-agent
    simulator and for cell-level classification.
    """
    v = np.asarray(v, dtype=float)
    c = np.asarray(c, dtype=float)
    kq = params.n_qualities
    vec = BenefitVector.coerce(phi, kq).as_array()
    f = np.asarray(params.values_f)
    gq = np.asarray(params.costs_g)
    prices = np.asarray(params.prices)
    u = params.w * (params.alpha_v + np.multiply.outer(f, v))       # (K, ...)
    b = params.alpha_c + np.multiply.outer(gq, c)
    stack = np.empty((2 * kq + 1,) + np.broadcast_shapes(v.shape, c.shape), dtype=float)
    stack[:kq] = (u + vec.reshape((kq,) + (1,) * v.ndim) - b)[::-1]
    stack[kq:2 * kq] = (params.eta * (u - params.s) - prices.reshape((kq,) + (1,) * v.ndim))[::-1]
    stack[2 * kq] = 0.0
    return np.argmax(stack, axis=0)


def _decode(action: int, params: MarketParams) -> ActionChoice:
    return action_table(params)[action]


def best_response_unaware(user: UserType, phi: float, params: MarketParams) -> ActionChoice:
    """Best response in the single-quality game, by direct payoff comparison."""
    if params.n_qualities != 1:
        raise ValueError("single-quality best response needs a one-point grid")
    a = best_response_actions(np.asarray(user.v), np.asarray(user.c), float(phi), params)
    return _decode(int(a), params)


def best_response_quality(user: UserType, phi, params: MarketParams) -> ActionChoice:
    """Best response over all 2K+1 actions of the quality-aware game."""
    a = best_response_actions(np.asarray(user.v), np.asarray(user.c), phi, params)
    return _decode(int(a), params)


def measure_partition(phi, params: MarketParams, quad: QuadratureSpec = QuadratureSpec(),
                      mode: str | None = None) -> MarketShares:
    """Measure of every best-response region under the given sharing benefit.

    ``mode`` is a consistency check only: ``unaware`` requires a single-grade
    market; the quality modes share one partition rule because matching and
    cross-quality sharing differ only in how benefits are aggregated.
    """
    if mode is not None:
        if mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
        if mode == "unaware" and params.n_qualities != 1:
            raise ValueError("unaware mode requires a single-grade quality grid")
    grid = PartitionGrid(params, quad)
    return grid.shares_at(phi)
