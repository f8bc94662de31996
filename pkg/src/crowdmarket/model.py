"""Market primitives: parameters, user types, roles, and payoff arithmetic.

A market is inhabited by a continuum of users, each described by a point
(v, c) in the unit square: v scales how much the user values the data,
c scales how costly it is for her to sense it.  Every user picks one of
2K+1 actions: sense at one of K quality grades, request (buy) at one of
K grades, or stay out of the market entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "UnsupportedParameters",
    "Curve",
    "MarketParams",
    "UserType",
    "Role",
    "ActionChoice",
    "BenefitVector",
    "utility",
    "sensing_cost",
    "quality_price",
    "requester_reward",
    "payoff",
]


class UnsupportedParameters(ValueError):
    """The requested operation does not cover this parameter regime."""


@dataclass(frozen=True)
class Curve:
    """A monotone curve over the quality grid, from a small serializable family.

    Kinds: ``one`` (constant 1), ``log1p`` (log(1+q)), ``power`` (q**gamma),
    ``affine`` (intercept + slope*q).  Keeping the family closed lets configs
    round-trip through plain key-value files.
    """

    kind: str
    gamma: float = 1.0
    intercept: float = 0.0
    slope: float = 1.0

    _KINDS = ("one", "log1p", "power", "affine")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}; expected one of {self._KINDS}")

    @staticmethod
    def one() -> "Curve":
        return Curve("one")

    @staticmethod
    def log1p() -> "Curve":
        return Curve("log1p")

    @staticmethod
    def power(gamma: float) -> "Curve":
        return Curve("power", gamma=gamma)

    @staticmethod
    def affine(intercept: float, slope: float) -> "Curve":
        return Curve("affine", intercept=intercept, slope=slope)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "one":
            out = np.ones_like(q)
        elif self.kind == "log1p":
            out = np.log1p(q)
        elif self.kind == "power":
            out = q ** self.gamma
        else:  # affine
            out = self.intercept + self.slope * q
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power":
            d["gamma"] = self.gamma
        elif self.kind == "affine":
            d["intercept"] = self.intercept
            d["slope"] = self.slope
        return d

    @staticmethod
    def from_dict(d: dict) -> "Curve":
        return Curve(d["kind"], gamma=d.get("gamma", 1.0),
                     intercept=d.get("intercept", 0.0), slope=d.get("slope", 1.0))


@dataclass(frozen=True)
class MarketParams:
    """All scalar knobs of the data-sharing market.

    The per-grade price is ``p0 + p1 * q_k``; the single-quality game uses
    ``p1 = 0`` so the price is just the constant ``p0``.  ``alpha_v`` and
    ``alpha_c`` are additive offsets of the value and sensing-cost curves
    (zero recovers the plain bilinear model).
    """

    eta: float                      # revenue-sharing factor in [0, 1]
    s: float                        # transmission cost (upload + download)
    p0: float = 0.0                 # price intercept
    p1: float = 0.0                 # price slope per unit quality
    w: float = 1.0                  # data weight (> 0)
    quality_grid: tuple[float, ...] = (1.0,)
    alpha_v: float = 0.0
    alpha_c: float = 0.0
    value_curve: Curve = field(default_factory=Curve.one)
    cost_curve: Curve = field(default_factory=Curve.one)

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.s < 0.0:
            raise ValueError(f"transmission cost must be >= 0, got {self.s}")
        if self.w <= 0.0:
            raise ValueError(f"data weight must be > 0, got {self.w}")
        grid = tuple(float(q) for q in self.quality_grid)
        object.__setattr__(self, "quality_grid", grid)
        if len(grid) < 1:
            raise ValueError("quality grid must hold at least one grade")
        if any(q <= 0.0 for q in grid):
            raise ValueError("quality grades must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("quality grid must be strictly increasing")
        if len(grid) > 1:
            for name, vals in (("value", self.values_f), ("cost", self.costs_g),
                               ("price", self.prices)):
                if any(b <= a for a, b in zip(vals, vals[1:])):
                    raise ValueError(f"{name} curve must be strictly increasing on the grid")
        if any(p < 0.0 for p in self.prices):
            raise ValueError("per-grade prices must be nonnegative")

    @property
    def n_qualities(self) -> int:
        return len(self.quality_grid)

    @property
    def prices(self) -> tuple[float, ...]:
        return tuple(self.p0 + self.p1 * q for q in self.quality_grid)

    @property
    def values_f(self) -> tuple[float, ...]:
        return tuple(float(self.value_curve(q)) for q in self.quality_grid)

    @property
    def costs_g(self) -> tuple[float, ...]:
        return tuple(float(self.cost_curve(q)) for q in self.quality_grid)

    @property
    def unaware_normalized(self) -> bool:
        """Single grade with flat unit curves and no offsets."""
        return (self.n_qualities == 1
                and self.value_curve.kind == "one"
                and self.cost_curve.kind == "one"
                and self.alpha_v == 0.0
                and self.alpha_c == 0.0)

    def default_phi_cap(self) -> float:
        """Ceiling for the per-sensor sharing benefit used when no sensors exist."""
        return 1.0 + self.s + max(self.prices)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta, "s": self.s, "p0": self.p0, "p1": self.p1, "w": self.w,
            "quality_grid": list(self.quality_grid),
            "alpha_v": self.alpha_v, "alpha_c": self.alpha_c,
            "value_curve": self.value_curve.to_dict(),
            "cost_curve": self.cost_curve.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "MarketParams":
        kw = dict(d)
        if "quality_grid" in kw:
            kw["quality_grid"] = tuple(kw["quality_grid"])
        for key in ("value_curve", "cost_curve"):
            if key in kw and isinstance(kw[key], dict):
                kw[key] = Curve.from_dict(kw[key])
        return MarketParams(**kw)


@dataclass(frozen=True)
class UserType:
    """A user characterized by marginal value v and marginal sensing cost c."""

    v: float
    c: float

    def __post_init__(self):
        if not (0.0 <= self.v <= 1.0 and 0.0 <= self.c <= 1.0):
            raise ValueError(f"user type must lie in the unit square, got ({self.v}, {self.c})")


class Role(str, Enum):
    SENSOR = "sensor"
    REQUESTER = "requester"
    ALIEN = "alien"


@dataclass(frozen=True)
class ActionChoice:
    """A role plus, for market participants, the chosen quality grade (1-based)."""

    role: Role
    quality_index: int | None = None

    def __post_init__(self):
        if self.role is Role.ALIEN:
            if self.quality_index is not None:
                raise ValueError("aliens carry no quality index")
        elif self.quality_index is None:
            raise ValueError(f"{self.role.value} requires a quality index")


@dataclass(frozen=True)
class BenefitVector:
    """Per-grade average sharing benefit received by sensors."""

    phi: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(x) for x in self.phi)
        object.__setattr__(self, "phi", vals)
        if any(not math.isfinite(x) or x < 0.0 for x in vals):
            raise ValueError(f"sharing benefits must be finite and >= 0, got {vals}")

    def __len__(self) -> int:
        return len(self.phi)

    def __getitem__(self, k: int) -> float:
        return self.phi[k]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.phi, dtype=float)

    @staticmethod
    def coerce(phi, k: int) -> "BenefitVector":
        """Accept a scalar, sequence, or BenefitVector; check the length is k."""
        if isinstance(phi, BenefitVector):
            vec = phi
        elif np.isscalar(phi):
            vec = BenefitVector((float(phi),) * 1) if k == 1 else None
            if vec is None:
                raise ValueError(f"scalar benefit given but market has {k} grades")
        else:
            vec = BenefitVector(tuple(float(x) for x in phi))
        if len(vec) != k:
            raise ValueError(f"benefit vector has length {len(vec)}, expected {k}")
        return vec

    @staticmethod
    def zeros(k: int) -> "BenefitVector":
        return BenefitVector((0.0,) * k)


def _check_index(k: int, params: MarketParams) -> None:
    if not 1 <= k <= params.n_qualities:
        raise ValueError(f"quality index {k} outside 1..{params.n_qualities}")


def utility(user: UserType, k: int, params: MarketParams) -> float:
    """Direct consumption value of grade-k data for this user."""
    _check_index(k, params)
    return params.w * (params.alpha_v + user.v * params.values_f[k - 1])


def sensing_cost(user: UserType, k: int, params: MarketParams) -> float:
    """Cost this user incurs to sense grade-k data herself."""
    _check_index(k, params)
    return params.alpha_c + user.c * params.costs_g[k - 1]


def quality_price(k: int, params: MarketParams) -> float:
    """Posted price of one grade-k data transfer."""
    _check_index(k, params)
    return params.prices[k - 1]


def requester_reward(user: UserType, k: int, params: MarketParams) -> float:
    """Total reward a grade-k requester pays the sensor serving her.

    A share 1-eta of the requester's net benefit, plus the posted price.
    """
    _check_index(k, params)
    net = utility(user, k, params) - params.s
    return (1.0 - params.eta) * net + quality_price(k, params)


def payoff(user: UserType, choice: ActionChoice, phi, params: MarketParams) -> float:
    """Payoff of a user taking the given action while sensors earn phi on average.

    Sensors keep their direct value net of sensing cost plus the average
    sharing benefit of their grade; requesters keep an eta share of their net
    benefit minus the posted price; aliens earn exactly zero.
    """
    if choice.role is Role.ALIEN:
        return 0.0
    k = choice.quality_index
    _check_index(k, params)
    if choice.role is Role.SENSOR:
        vec = BenefitVector.coerce(phi, params.n_qualities)
        return utility(user, k, params) - sensing_cost(user, k, params) + vec[k - 1]
    net = utility(user, k, params) - params.s
    return params.eta * net - quality_price(k, params)
